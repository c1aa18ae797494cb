"""Center-error metrics: per-axis l1 deviation, Euclidean mean/std, and
failure rates at a fraction of the ground-truth box diagonal."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class TrackRecord:
    """Per-frame tracker output: (center, bandwidth, score) triples."""

    centers: list
    bandwidths: list
    scores: list
    sequence_id: str = ""

    def __len__(self):
        return len(self.centers)


def save_track(path, record):
    """One line per frame: ``frame_index cx cy hx hy score``."""
    with open(path, "w") as f:
        for i, (c, h, s) in enumerate(zip(record.centers, record.bandwidths, record.scores)):
            f.write(f"{i} {c[0]:.6f} {c[1]:.6f} {h[0]:.6f} {h[1]:.6f} {s:.6f}\n")


def load_track(path, sequence_id=""):
    centers, bandwidths, scores = [], [], []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ValueError(f"malformed track line: {line!r}")
            _, cx, cy, hx, hy, s = (float(v) for v in parts)
            centers.append((cx, cy))
            bandwidths.append((hx, hy))
            scores.append(s)
    return TrackRecord(centers=centers, bandwidths=bandwidths, scores=scores,
                       sequence_id=sequence_id)


def center_errors(record, dataset):
    """Per-frame |dx|, |dy| and Euclidean center errors against ground
    truth; frames without ground truth are skipped.

    Returns ``(l1_x, l1_y, euclidean, frame_indices)`` arrays."""
    if len(record) != len(dataset.ground_truth):
        raise ValueError("track length does not match ground truth length")
    l1x, l1y, eu, idx = [], [], [], []
    for i, (c, gt) in enumerate(zip(record.centers, dataset.ground_truth)):
        if gt is None:
            continue
        dx = abs(c[0] - gt[0])
        dy = abs(c[1] - gt[1])
        l1x.append(dx)
        l1y.append(dy)
        eu.append(math.hypot(dx, dy))
        idx.append(i)
    return np.asarray(l1x), np.asarray(l1y), np.asarray(eu), np.asarray(idx)


def failure_rate(record, dataset, frac):
    """Fraction of frames whose Euclidean center error exceeds ``frac``
    times the diagonal of the ground-truth box (full extents 2h)."""
    _, _, eu, idx = center_errors(record, dataset)
    if len(idx) == 0:
        raise ValueError("no frames with ground truth")
    failures = 0
    for err, i in zip(eu, idx):
        hx, hy = dataset.ground_truth[i][2], dataset.ground_truth[i][3]
        if hx <= 0 or hy <= 0:
            raise ValueError(f"non-positive ground truth extents at frame {i}")
        diag = math.hypot(2 * hx, 2 * hy)
        if err > frac * diag:
            failures += 1
    return failures / len(idx)


def summarize(errors):
    """Mean and population standard deviation of an error array."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("no error values")
    return float(errors.mean()), float(errors.std())


@dataclass
class EvalReport:
    l1_x: np.ndarray
    l1_y: np.ndarray
    euclidean: np.ndarray
    frame_indices: np.ndarray
    mean: float
    std: float
    failure_rates: dict
    frames_counted: int

    def lines(self):
        out = [
            ("frames", self.frames_counted),
            ("mean_error", self.mean),
            ("std_error", self.std),
        ]
        for frac in sorted(self.failure_rates):
            out.append((f"fr_{frac:.2f}", self.failure_rates[frac]))
        return out

    def to_text(self):
        return "".join(f"{k} {v:.6g}\n" if isinstance(v, float) else f"{k} {v}\n"
                       for k, v in self.lines())


def evaluate(record, dataset, fracs=(0.20, 0.25)):
    l1x, l1y, eu, idx = center_errors(record, dataset)
    mean, std = summarize(eu)
    rates = {frac: failure_rate(record, dataset, frac) for frac in fracs}
    return EvalReport(l1_x=l1x, l1_y=l1y, euclidean=eu, frame_indices=idx,
                      mean=mean, std=std, failure_rates=rates, frames_counted=len(idx))
