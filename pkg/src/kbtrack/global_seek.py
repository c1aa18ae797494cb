"""Annealed global mode seeking.

A bandwidth pyramid runs score maximization from coarse to fine scale,
seeding each stage with the previous stage's convergence point, and stops
at the first stage whose converged SVM score is positive.  The companion
1-D mode counter illustrates why the coarse-to-fine schedule works: the
mode count of a positive-weight Gaussian KDE never increases with the
bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histogram import GAUSSIAN, profile_eval
from .optimize import AscentProblem, lbfgs_maximize
from .trackers import _clamp, svm_score, svm_score_gradient


@dataclass(frozen=True)
class AnnealSchedule:
    """Bandwidth pyramid h_m = h0 / ratio**m for m = 0..max_stages-1."""

    h0: tuple
    ratio: float = 1.25
    max_stages: int = 12

    def __post_init__(self):
        if self.ratio <= 1:
            raise ValueError("ratio must exceed 1")
        if self.max_stages < 1:
            raise ValueError("max_stages must be at least 1")

    def bandwidth(self, stage):
        return (self.h0[0] / self.ratio ** stage, self.h0[1] / self.ratio ** stage)


@dataclass
class StageTrace:
    stage: int
    bandwidth: tuple
    center: tuple
    score: float
    accepted: bool


@dataclass
class LocalizeResult:
    center: tuple
    scale: tuple
    stage: int
    accepted: bool
    trace: list


def anneal_localize(model, image, c0, schedule, kernel=GAUSSIAN, scheme=None,
                    max_iters=60, grad_tol=1e-5):
    """Coarse-to-fine localization with SVM-sign cascade verification.

    Each stage maximizes the score at its bandwidth starting from the
    previous stage's convergence point (stage 0 starts at ``c0``); the
    first stage with a positive converged score is accepted.  If no stage
    accepts, the best-scoring stage is reported with ``accepted=False``.
    """
    scheme = model.scheme if scheme is None else scheme
    c = _clamp(c0, image)
    trace = []
    best = None
    for stage in range(schedule.max_stages):
        bandwidth = schedule.bandwidth(stage)

        def value(x, bw=bandwidth):
            return svm_score(model, image, _clamp(x, image), bw, kernel, scheme)

        def gradient(x, bw=bandwidth):
            return svm_score_gradient(model, image, _clamp(x, image), bw, kernel, scheme)

        result = lbfgs_maximize(AscentProblem(value, gradient, 2), c,
                                grad_tol=grad_tol, max_iters=max_iters)
        c = _clamp(result.argmax, image)
        score = result.value
        accepted = score > 0
        trace.append(StageTrace(stage=stage, bandwidth=bandwidth, center=c,
                                score=score, accepted=accepted))
        if best is None or score > best.score:
            best = trace[-1]
        if accepted:
            return LocalizeResult(center=c, scale=bandwidth, stage=stage,
                                  accepted=True, trace=trace)
    return LocalizeResult(center=best.center, scale=best.bandwidth, stage=best.stage,
                          accepted=False, trace=trace)


def mode_count_1d(samples, bandwidth, grid=2001):
    """Number of strict interior local maxima of the weighted Gaussian KDE
    built from ``samples`` (pairs of location and signed weight), evaluated
    on a dense grid over [min - 3h, max + 3h]."""
    if not samples:
        raise ValueError("no samples")
    locs = np.asarray([s[0] for s in samples], dtype=np.float64)
    weights = np.asarray([s[1] for s in samples], dtype=np.float64)
    xs = np.linspace(locs.min() - 3 * bandwidth, locs.max() + 3 * bandwidth, grid)
    t = ((xs[:, None] - locs[None, :]) / bandwidth) ** 2
    k, _ = profile_eval(GAUSSIAN, t)
    fs = k @ weights
    interior = (fs[1:-1] > fs[:-2]) & (fs[1:-1] > fs[2:])
    return int(interior.sum())
