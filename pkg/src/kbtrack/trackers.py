"""Tracking engines.

Four per-frame engines share the histogram/weight machinery:

* the generalized kernel tracker, which maximizes an SVM classification
  score over histogram features by quasi-Newton ascent and can adapt its
  model online;
* the standard mean-shift tracker driven by the Bhattacharyya weight field;
* Collins' modified mean-shift step that tolerates signed weights by taking
  absolute values in the denominator (known not to be stationary in
  general; see ``appendix_demo``);
* a color-histogram particle filter baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ppk_svm
from .histogram import (
    EPANECHNIKOV,
    GAUSSIAN,
    bin_indices,
    bhattacharyya,
    compute_histogram,
    profile_eval,
    squared_offsets,
)
from .imgproc import crop_region
from .optimize import AscentProblem, fixed_point_iterate, lbfgs_maximize

EPS = 1e-12


@dataclass
class TrackState:
    center: tuple
    bandwidth: tuple
    score: float = 0.0
    frame_index: int = 0
    lost: bool = False


@dataclass
class OnlineUpdatePolicy:
    """Per-frame model adaptation: the tracked region becomes a positive
    example and a few ring-sampled background boxes become negatives.

    The ring radius range keeps negative boxes from overlapping the tracked
    box by more than 25% of its area."""

    enabled: bool = True
    negatives_per_frame: int = 4
    ring_radius: tuple = (1.5, 2.5)
    min_score_to_update: float = 0.0


def ms_weights(q_target, region, c0, bandwidth, kernel, scheme):
    """Standard MS per-pixel weights sqrt(q_u / p_u(c0)) at each pixel's
    bin.  Bins absent from the candidate contribute zero."""
    p = compute_histogram(region, c0, bandwidth, kernel, scheme)
    bins = bin_indices(region.colors, scheme)
    qb = q_target.values[bins]
    pb = p.values[bins]
    w = np.zeros(region.size)
    ok = (qb > 0) & (pb > EPS)
    w[ok] = np.sqrt(qb[ok] / pb[ok])
    return w


def svm_weights(model, region, c0, bandwidth, kernel, scheme):
    """Signed per-pixel weights of the linearized SVM score.

    The bin-wise coefficient comes from the model's precomputed aggregate
    vector, never from a loop over support vectors; with rho = 0.5 it is
    aggregate_u / sqrt(p_u(c0)), which for a single unit-weight support
    vector reduces exactly to the standard MS weights."""
    if scheme != model.scheme:
        raise ValueError("binning scheme does not match model")
    p = compute_histogram(region, c0, bandwidth, kernel, scheme)
    rho = model.ppk.rho
    bins = bin_indices(region.colors, scheme)
    pb = p.values[bins]
    ab = model.aggregate[bins]
    w = np.zeros(region.size)
    ok = pb > EPS
    w[ok] = 2.0 * rho * ab[ok] * pb[ok] ** (rho - 1.0)
    return w


def ms_step(region, weights, c, bandwidth, kernel):
    """One mean-shift step: weighted centroid under g = -k'."""
    t = squared_offsets(region.positions, c, bandwidth)
    _, g = profile_eval(kernel, t)
    wg = weights * g
    denom = wg.sum()
    if abs(denom) <= EPS:
        raise ValueError("kernel support empty: zero mean-shift denominator")
    return (wg[:, None] * region.positions).sum(axis=0) / denom


def collins_ms_step(region, weights, c, bandwidth, kernel):
    """Mean-shift step for signed weights with |w g| in the denominator."""
    t = squared_offsets(region.positions, c, bandwidth)
    _, g = profile_eval(kernel, t)
    wg = weights * g
    denom = np.abs(wg).sum()
    if denom <= EPS:
        raise ValueError("kernel support empty: zero mean-shift denominator")
    return (wg[:, None] * region.positions).sum(axis=0) / denom


def svm_score(model, image, c, bandwidth, kernel, scheme):
    """Exact SVM decision value on the histogram extracted at ``c``."""
    region = crop_region(image, c, bandwidth)
    p = compute_histogram(region, c, bandwidth, kernel, scheme)
    return ppk_svm.decision(model, p)


def svm_score_gradient(model, image, c, bandwidth, kernel, scheme):
    """Analytic gradient of the kernel-smoothed SVM score.

    The signed weight field is re-anchored at the current point, and the
    histogram normalizer's own dependence on the center contributes the
    second term; without it the gradient direction is unusable whenever the
    kernel mass shifts with the center."""
    region = crop_region(image, c, bandwidth)
    w = svm_weights(model, region, c, bandwidth, kernel, scheme)
    t = squared_offsets(region.positions, c, bandwidth)
    k, g = profile_eval(kernel, t)
    lam = 1.0 / max(k.sum(), EPS)
    h2 = np.asarray(bandwidth, dtype=np.float64) ** 2
    diff = region.positions - np.asarray(c, dtype=np.float64)
    shift = (diff / h2) * g[:, None]
    score = svm_score(model, image, c, bandwidth, kernel, scheme) - model.bias
    rho = model.ppk.rho
    return lam * ((w[:, None] * shift).sum(axis=0)
                  - 2.0 * rho * score * shift.sum(axis=0))


def _clamp(c, image):
    h, w = image.shape[:2]
    return (min(max(float(c[0]), 0.0), w - 1.0), min(max(float(c[1]), 0.0), h - 1.0))


def track_frame_generalized(state, model, frame, policy=None, kernel=EPANECHNIKOV,
                            max_iters=50, grad_tol=1e-4, rng=None, norma_cfg=None):
    """Track one frame by maximizing the SVM score from the previous
    center; optionally adapt the model online afterwards.

    Returns ``(new_state, new_model)``.  The state is flagged lost when the
    converged score is negative; the caller may then fall back to global
    localization."""
    scheme = model.scheme
    bandwidth = state.bandwidth

    def value(c):
        return svm_score(model, frame, _clamp(c, frame), bandwidth, kernel, scheme)

    def gradient(c):
        return svm_score_gradient(model, frame, _clamp(c, frame), bandwidth, kernel, scheme)

    result = lbfgs_maximize(AscentProblem(value, gradient, 2), state.center,
                            grad_tol=grad_tol, max_iters=max_iters)
    center = _clamp(result.argmax, frame)
    score = result.value
    new_state = TrackState(center=center, bandwidth=bandwidth, score=score,
                           frame_index=state.frame_index + 1, lost=score < 0)

    if policy is not None and policy.enabled and score >= policy.min_score_to_update:
        model = _online_update(model, frame, new_state, policy, kernel, rng, norma_cfg)
    return new_state, model


def _online_update(model, frame, state, policy, kernel, rng, norma_cfg=None):
    rng = np.random.default_rng() if rng is None else rng
    cfg = ppk_svm.NormaConfig() if norma_cfg is None else norma_cfg
    scheme = model.scheme
    c, h = state.center, state.bandwidth
    region = crop_region(frame, c, h)
    pos = compute_histogram(region, c, h, kernel, scheme)
    model = ppk_svm.norma_update(model, pos, +1, cfg)
    for neg_c in ring_samples(c, h, frame.shape[1], frame.shape[0],
                              policy.negatives_per_frame, policy.ring_radius, rng):
        neg_region = crop_region(frame, neg_c, h)
        neg = compute_histogram(neg_region, neg_c, h, kernel, scheme)
        model = ppk_svm.norma_update(model, neg, -1, cfg)
    return model


def ring_samples(center, bandwidth, width, height, count, radius_range, rng):
    """Background box centers on a ring around the target, offset by a
    random multiple of the bandwidth in a random direction."""
    out = []
    for _ in range(count):
        for _attempt in range(16):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            r = rng.uniform(*radius_range)
            cx = center[0] + r * bandwidth[0] * math.cos(theta)
            cy = center[1] + r * bandwidth[1] * math.sin(theta)
            if 0 <= cx <= width - 1 and 0 <= cy <= height - 1:
                out.append((cx, cy))
                break
    return out


def track_frame_ms(state, q_target, frame, kernel=EPANECHNIKOV, tol=0.1, max_iters=20):
    """Classic single-template mean-shift tracking of one frame."""
    scheme = q_target.scheme
    bandwidth = state.bandwidth

    def step(c):
        cc = _clamp(c, frame)
        region = crop_region(frame, cc, bandwidth)
        w = ms_weights(q_target, region, cc, bandwidth, kernel, scheme)
        if w.sum() <= EPS:
            return np.asarray(cc)  # template colors vanished; hold position
        return ms_step(region, w, cc, bandwidth, kernel)

    result = fixed_point_iterate(step, state.center, tol=tol, max_iters=max_iters)
    center = _clamp(result.argmax, frame)
    region = crop_region(frame, center, bandwidth)
    p = compute_histogram(region, center, bandwidth, kernel, scheme)
    coeff = bhattacharyya(q_target, p)
    return TrackState(center=center, bandwidth=bandwidth, score=coeff,
                      frame_index=state.frame_index + 1, lost=False)


def track_frame_collins(state, model, frame, kernel=EPANECHNIKOV, tol=0.1, max_iters=20):
    """Track one frame with Collins' modified MS on the signed SVM weight
    field.  Kept as a baseline; the fixed point is not stationary in
    general (see ``appendix_demo``)."""
    scheme = model.scheme
    bandwidth = state.bandwidth

    def step(c):
        cc = _clamp(c, frame)
        region = crop_region(frame, cc, bandwidth)
        w = svm_weights(model, region, cc, bandwidth, kernel, scheme)
        if np.abs(w).sum() <= EPS:
            return np.asarray(cc)
        return collins_ms_step(region, w, cc, bandwidth, kernel)

    result = fixed_point_iterate(step, state.center, tol=tol, max_iters=max_iters)
    center = _clamp(result.argmax, frame)
    score = svm_score(model, frame, center, bandwidth, kernel, scheme)
    return TrackState(center=center, bandwidth=bandwidth, score=score,
                      frame_index=state.frame_index + 1, lost=score < 0)


@dataclass
class PfState:
    """Particle cloud: ``particles`` is (N, 2), ``weights`` sums to one."""

    particles: np.ndarray
    weights: np.ndarray

    @staticmethod
    def init(center, count=1500):
        particles = np.tile(np.asarray(center, dtype=np.float64), (count, 1))
        return PfState(particles=particles, weights=np.full(count, 1.0 / count))


def pf_step(pf, q_target, state, frame, kernel=EPANECHNIKOV, noise_std=4.0,
            lambda_lik=20.0, rng=None):
    """Condensation-style step: Gaussian random-walk propagation, color
    likelihood exp(-lambda * (1 - Bhattacharyya)), systematic resampling.

    Returns ``(new_pf, new_state)`` with the weighted-mean estimate."""
    rng = np.random.default_rng() if rng is None else rng
    scheme = q_target.scheme
    bandwidth = state.bandwidth
    n = len(pf.particles)
    particles = pf.particles + rng.normal(0.0, noise_std, size=(n, 2))
    particles[:, 0] = np.clip(particles[:, 0], 0.0, frame.shape[1] - 1.0)
    particles[:, 1] = np.clip(particles[:, 1], 0.0, frame.shape[0] - 1.0)

    lik = np.zeros(n)
    for i, c in enumerate(particles):
        cc = (float(c[0]), float(c[1]))
        region = crop_region(frame, cc, bandwidth)
        try:
            p = compute_histogram(region, cc, bandwidth, kernel, scheme)
        except ValueError:
            continue
        lik[i] = math.exp(-lambda_lik * (1.0 - bhattacharyya(q_target, p)))
    total = lik.sum()
    degenerate = total <= 0
    weights = np.full(n, 1.0 / n) if degenerate else lik / total

    estimate = (weights[:, None] * particles).sum(axis=0)
    resampled = particles[_systematic_resample(weights, rng)]
    new_pf = PfState(particles=resampled, weights=np.full(n, 1.0 / n))
    center = _clamp(estimate, frame)
    new_state = TrackState(center=center, bandwidth=bandwidth,
                           score=float(weights.max() * n), frame_index=state.frame_index + 1,
                           lost=degenerate)
    return new_pf, new_state


def _systematic_resample(weights, rng):
    n = len(weights)
    positions = (rng.uniform() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(0, n - 1)


# ---------------------------------------------------------------------------
# signed 1-D mixture demo

@dataclass(frozen=True)
class SignedMixture1D:
    """Weighted Gaussian-kernel mixture on the line; weights may be signed."""

    centers: tuple = (-2.0, 2.0, 0.3)
    weights: tuple = (1.0, 1.0, -1.2)
    bandwidth: float = 1.0

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        t = ((x[..., None] - np.asarray(self.centers)) / self.bandwidth) ** 2
        k, _ = profile_eval(GAUSSIAN, t)
        return (np.asarray(self.weights) * k).sum(axis=-1)

    def gradient(self, x):
        x = np.asarray(x, dtype=np.float64)
        cs = np.asarray(self.centers)
        t = ((x[..., None] - cs) / self.bandwidth) ** 2
        _, g = profile_eval(GAUSSIAN, t)
        return (np.asarray(self.weights) * g * 2.0 * (cs - x[..., None])
                / self.bandwidth ** 2).sum(axis=-1)

    def collins_step(self, x):
        cs = np.asarray(self.centers)
        ws = np.asarray(self.weights)
        t = ((x - cs) / self.bandwidth) ** 2
        _, g = profile_eval(GAUSSIAN, t)
        wg = ws * g
        denom = np.abs(wg).sum()
        if denom <= EPS:
            raise ValueError("zero denominator in Collins step")
        return float((wg * cs).sum() / denom)


def grid_extrema(mixture, resolution=20001, pad=4.0):
    """Dense-grid local maxima/minima of the mixture, Newton-refined."""
    lo = min(mixture.centers) - pad * mixture.bandwidth
    hi = max(mixture.centers) + pad * mixture.bandwidth
    xs = np.linspace(lo, hi, resolution)
    fs = mixture.value(xs)
    maxima, minima = [], []
    for i in range(1, resolution - 1):
        if fs[i] > fs[i - 1] and fs[i] > fs[i + 1]:
            maxima.append(_refine_extremum(mixture, xs[i]))
        elif fs[i] < fs[i - 1] and fs[i] < fs[i + 1]:
            minima.append(_refine_extremum(mixture, xs[i]))
    return maxima, minima


def _refine_extremum(mixture, x0, iters=60):
    x = float(x0)
    for _ in range(iters):
        gr = float(mixture.gradient(np.asarray(x)))
        eps = 1e-5
        curv = (float(mixture.gradient(np.asarray(x + eps)))
                - float(mixture.gradient(np.asarray(x - eps)))) / (2 * eps)
        if abs(curv) < EPS:
            break
        step = gr / curv
        x -= step
        if abs(step) < 1e-13:
            break
    return x


def appendix_demo(mixture=None, start=0.25):
    """Run Collins' modified MS and L-BFGS ascent on a signed mixture and
    report whether the Collins fixed point is stationary.

    For the shipped default mixture the fixed point has a clearly nonzero
    gradient and sits nearer a local minimum than a maximum, while L-BFGS
    from the same start reaches a true local maximum."""
    mixture = SignedMixture1D() if mixture is None else mixture
    fp = fixed_point_iterate(lambda x: np.asarray([mixture.collins_step(float(x[0]))]),
                             np.asarray([start]), tol=1e-12, max_iters=2000)
    collins_x = float(fp.argmax[0])
    collins_grad = abs(float(mixture.gradient(np.asarray(collins_x))))

    problem = AscentProblem(
        value=lambda x: float(mixture.value(np.asarray(float(x[0])))),
        gradient=lambda x: np.asarray([float(mixture.gradient(np.asarray(float(x[0]))))]),
        dimension=1,
    )
    asc = lbfgs_maximize(problem, np.asarray([start]), grad_tol=1e-10, max_iters=500)
    lbfgs_x = float(asc.argmax[0])
    lbfgs_grad = abs(float(mixture.gradient(np.asarray(lbfgs_x))))

    maxima, minima = grid_extrema(mixture)
    nearest_max = min(maxima, key=lambda m: abs(m - collins_x)) if maxima else None
    nearest_min = min(minima, key=lambda m: abs(m - collins_x)) if minima else None
    return {
        "collins_fixed_point": collins_x,
        "collins_converged": fp.converged,
        "collins_gradient_norm": collins_grad,
        "collins_nonstationary": collins_grad > 1e-2,
        "lbfgs_point": lbfgs_x,
        "lbfgs_gradient_norm": lbfgs_grad,
        "maxima": maxima,
        "minima": minima,
        "nearest_maximum": nearest_max,
        "nearest_minimum": nearest_min,
    }
