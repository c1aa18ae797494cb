"""Center-error metrics, failure rates and track file IO."""

import numpy as np
import pytest

from kbtrack.evaluate import (
    TrackRecord,
    center_errors,
    evaluate,
    failure_rate,
    load_track,
    save_track,
    summarize,
)
from kbtrack.imgproc import SequenceDataset


def make_dataset(truth):
    frames = [np.zeros((4, 4, 3), dtype=np.uint8)] * len(truth)
    return SequenceDataset(frames=frames, ground_truth=truth)


def make_record(centers, bandwidth=(6.0, 6.0)):
    return TrackRecord(centers=list(centers),
                       bandwidths=[bandwidth] * len(centers),
                       scores=[0.0] * len(centers))


class TestCenterErrors:
    def test_perfect_track_is_zero(self):
        truth = [(float(i), float(2 * i), 6.0, 6.0) for i in range(5)]
        record = make_record([(gt[0], gt[1]) for gt in truth])
        l1x, l1y, eu, idx = center_errors(record, make_dataset(truth))
        assert np.all(l1x == 0) and np.all(l1y == 0) and np.all(eu == 0)
        assert list(idx) == list(range(5))

    def test_constant_offset_three_four_five(self):
        truth = [(10.0, 10.0, 6.0, 6.0)] * 4
        record = make_record([(13.0, 14.0)] * 4)
        l1x, l1y, eu, _ = center_errors(record, make_dataset(truth))
        assert np.all(l1x == 3.0) and np.all(l1y == 4.0) and np.all(eu == 5.0)

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(0)
        truth = [(float(x), float(y), 6.0, 6.0)
                 for x, y in rng.uniform(0, 50, size=(20, 2))]
        centers = [(gt[0] + rng.normal(), gt[1] + rng.normal()) for gt in truth]
        record = make_record(centers)
        l1x, l1y, eu, _ = center_errors(record, make_dataset(truth))
        for i, (c, gt) in enumerate(zip(centers, truth)):
            dx, dy = abs(c[0] - gt[0]), abs(c[1] - gt[1])
            assert abs(l1x[i] - dx) < 1e-12
            assert abs(l1y[i] - dy) < 1e-12
            assert abs(eu[i] - np.hypot(dx, dy)) < 1e-12

    def test_absent_ground_truth_skipped(self):
        truth = [(0.0, 0.0, 6.0, 6.0), None, (2.0, 0.0, 6.0, 6.0)]
        record = make_record([(0.0, 0.0), (50.0, 50.0), (2.0, 0.0)])
        _, _, eu, idx = center_errors(record, make_dataset(truth))
        assert list(idx) == [0, 2]
        assert np.all(eu == 0)

    def test_length_mismatch_rejected(self):
        truth = [(0.0, 0.0, 6.0, 6.0)] * 3
        record = make_record([(0.0, 0.0)] * 2)
        with pytest.raises(ValueError):
            center_errors(record, make_dataset(truth))


class TestFailureRate:
    def test_perfect_track(self):
        truth = [(5.0, 5.0, 6.0, 6.0)] * 10
        record = make_record([(5.0, 5.0)] * 10)
        assert failure_rate(record, make_dataset(truth), 0.20) == 0.0

    def test_everything_fails(self):
        truth = [(5.0, 5.0, 6.0, 6.0)] * 10
        diag = np.hypot(12.0, 12.0)
        record = make_record([(5.0 + 10 * diag, 5.0)] * 10)
        assert failure_rate(record, make_dataset(truth), 0.20) == 1.0

    def test_engineered_failure_count(self):
        # 50 frames with exactly 3 failures at frac = 0.20
        truth = [(20.0, 20.0, 6.0, 6.0)] * 50
        diag = np.hypot(12.0, 12.0)
        centers = [(20.0, 20.0)] * 50
        for i in (7, 21, 40):
            centers[i] = (20.0 + 0.21 * diag, 20.0)
        record = make_record(centers)
        assert failure_rate(record, make_dataset(truth), 0.20) == 3 / 50

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(1)
        truth = [(20.0, 20.0, 6.0, 6.0)] * 30
        centers = [(20.0 + rng.normal(0, 4), 20.0 + rng.normal(0, 4))
                   for _ in range(30)]
        record = make_record(centers)
        ds = make_dataset(truth)
        assert failure_rate(record, ds, 0.25) <= failure_rate(record, ds, 0.20)

    def test_non_positive_extent_rejected(self):
        truth = [(5.0, 5.0, 0.0, 6.0)]
        record = make_record([(5.0, 5.0)])
        with pytest.raises(ValueError):
            failure_rate(record, make_dataset(truth), 0.20)


class TestSummarize:
    def test_constant_values(self):
        assert summarize([5.0, 5.0, 5.0]) == (5.0, 0.0)

    def test_population_std(self):
        assert summarize([0.0, 10.0]) == (5.0, 5.0)

    def test_matches_manual_recomputation(self):
        rng = np.random.default_rng(2)
        vals = rng.uniform(0, 20, size=20)
        mean, std = summarize(vals)
        assert abs(mean - vals.sum() / 20) < 1e-12
        assert abs(std - np.sqrt(((vals - vals.mean()) ** 2).sum() / 20)) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestEvaluateReport:
    def test_translation_invariance(self):
        rng = np.random.default_rng(3)
        truth = [(float(x), float(y), 6.0, 6.0)
                 for x, y in rng.uniform(10, 40, size=(15, 2))]
        centers = [(gt[0] + rng.normal(), gt[1] + rng.normal()) for gt in truth]
        shifted_truth = [(gt[0] + 7.0, gt[1] - 3.0, gt[2], gt[3]) for gt in truth]
        shifted_centers = [(c[0] + 7.0, c[1] - 3.0) for c in centers]
        a = evaluate(make_record(centers), make_dataset(truth))
        b = evaluate(make_record(shifted_centers), make_dataset(shifted_truth))
        assert abs(a.mean - b.mean) < 1e-12
        assert abs(a.std - b.std) < 1e-12
        assert a.failure_rates == b.failure_rates

    def test_report_text_format(self):
        truth = [(5.0, 5.0, 6.0, 6.0)] * 3
        report = evaluate(make_record([(5.0, 5.0)] * 3), make_dataset(truth))
        lines = report.to_text().strip().splitlines()
        keys = [line.split()[0] for line in lines]
        assert keys == ["frames", "mean_error", "std_error", "fr_0.20", "fr_0.25"]
        assert lines[0] == "frames 3"


class TestTrackIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(4)
        record = TrackRecord(
            centers=[tuple(c) for c in rng.uniform(0, 50, size=(8, 2))],
            bandwidths=[(6.0, 5.0)] * 8,
            scores=list(rng.normal(size=8)),
        )
        path = str(tmp_path / "track.txt")
        save_track(path, record)
        back = load_track(path)
        assert np.allclose(back.centers, record.centers, atol=1e-6)
        assert np.allclose(back.bandwidths, record.bandwidths, atol=1e-6)
        assert np.allclose(back.scores, record.scores, atol=1e-6)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1.0 2.0\n")
        with pytest.raises(ValueError, match="malformed"):
            load_track(str(path))
