"""Probability product kernel SVMs over color histograms.

The feature map of a discrete probability product kernel is explicit,
``phi(q) = q**rho``, so the decision function collapses to a single dot
product against a precomputed aggregate vector: inference cost does not
depend on the number of support vectors.  Batch training runs an SMO-style
solver on the soft-margin dual; online adaptation follows a stochastic
gradient rule on the regularized hinge loss (coefficient decay plus
margin-violation insertions) with a capped support-vector buffer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .histogram import BinningScheme, Histogram

MODEL_MAGIC = b"KBTSVM"
MODEL_VERSION = 1


@dataclass(frozen=True)
class PpkConfig:
    """rho = 0.5 gives the Bhattacharyya kernel; rho = 1 the expected
    likelihood kernel."""

    rho: float = 0.5

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class TrainConfig:
    C: float = 10.0
    tolerance: float = 1e-6
    max_iters: int = 20000

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")


@dataclass(frozen=True)
class NormaConfig:
    eta: float = 0.2
    lambda_reg: float = 0.1
    buffer_cap: int = 100

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if not 0 <= self.eta * self.lambda_reg < 1:
            raise ValueError("eta * lambda_reg must lie in [0, 1)")


@dataclass(frozen=True)
class SvmModel:
    """SVM over histogram features with a cached aggregate vector.

    ``support_histograms`` is ``(N_S, m)``, ``betas`` ``(N_S,)`` signed, and
    ``aggregate = sum_i betas[i] * support_histograms[i]**rho`` so that
    ``decision(p) = aggregate . p**rho + bias``.
    """

    support_histograms: np.ndarray
    betas: np.ndarray
    bias: float
    ppk: PpkConfig
    scheme: BinningScheme
    aggregate: np.ndarray

    @property
    def n_support(self):
        return len(self.betas)

    @staticmethod
    def build(support_histograms, betas, bias, ppk, scheme):
        support = np.atleast_2d(np.asarray(support_histograms, dtype=np.float64))
        if support.size == 0:
            support = np.zeros((0, scheme.m))
        betas = np.asarray(betas, dtype=np.float64)
        if len(betas) != len(support):
            raise ValueError("betas and support_histograms lengths differ")
        aggregate = _aggregate(support, betas, ppk.rho, scheme.m)
        return SvmModel(
            support_histograms=support,
            betas=betas,
            bias=float(bias),
            ppk=ppk,
            scheme=scheme,
            aggregate=aggregate,
        )

    @staticmethod
    def empty(scheme, bias=0.0, ppk=PpkConfig()):
        return SvmModel.build(np.zeros((0, scheme.m)), np.zeros(0), bias, ppk, scheme)


def _aggregate(support, betas, rho, m):
    if len(betas) == 0:
        return np.zeros(m)
    return (betas[:, None] * support ** rho).sum(axis=0)


def ppk_kernel(q, p, cfg=PpkConfig()):
    """Probability product kernel sum_u q_u**rho p_u**rho."""
    if q.scheme != p.scheme:
        raise ValueError("histograms use different binning schemes")
    return float((q.values ** cfg.rho * p.values ** cfg.rho).sum())


def decision(model, p):
    """Decision value f(p) = aggregate . p**rho + b (aggregate path only)."""
    if p.scheme != model.scheme:
        raise ValueError("histogram scheme does not match model")
    return decision_values(model, p.values)


def decision_values(model, values):
    """Decision value(s) on raw histogram vectors; ``values`` may be
    ``(m,)`` or ``(n, m)``."""
    feat = values ** model.ppk.rho
    return float(feat @ model.aggregate + model.bias) if feat.ndim == 1 else feat @ model.aggregate + model.bias


def decision_naive(model, p):
    """Reference decision value via explicit support-vector summation.

    Test oracle for the aggregate path; not used by any tracker.
    """
    if p.scheme != model.scheme:
        raise ValueError("histogram scheme does not match model")
    rho = model.ppk.rho
    total = model.bias
    for beta, q in zip(model.betas, model.support_histograms):
        total += beta * float((q ** rho * p.values ** rho).sum())
    return total


def train_batch(samples, labels, cfg=TrainConfig(), ppk=PpkConfig()):
    """Train a soft-margin SVM on histogram samples with the probability
    product kernel via SMO on the dual.

    Returns a model whose support vectors are the samples with dual weight
    above threshold, ``beta_i = y_i alpha_i``, and bias averaged over the
    free (margin) support vectors.
    """
    if not samples:
        raise ValueError("no training samples")
    scheme = samples[0].scheme
    for s in samples:
        if s.scheme != scheme:
            raise ValueError("samples use different binning schemes")
    y = np.asarray(labels, dtype=np.float64)
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise ValueError("both classes (+1 and -1) must be present")
    X = np.stack([s.values for s in samples]) ** ppk.rho
    K = X @ X.T
    alphas, bias = _smo_solve(K, y, cfg)
    sv = alphas > max(cfg.tolerance * 1e-3, 1e-10)
    support = np.stack([samples[i].values for i in np.flatnonzero(sv)]) if sv.any() else np.zeros((0, scheme.m))
    betas = (y * alphas)[sv]
    return SvmModel.build(support, betas, bias, ppk, scheme)


def _smo_solve(K, y, cfg):
    """Maximal-violating-pair SMO for min 1/2 a'Qa - e'a, 0 <= a <= C,
    y'a = 0, with Q = yy' * K."""
    n = len(y)
    C = cfg.C
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective wrt alpha
    for _ in range(cfg.max_iters):
        yg = -y * grad
        up = ((y > 0) & (alpha < C - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < C - 1e-12))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(yg[low])])
        gap = yg[i] - yg[j]
        if gap <= cfg.tolerance:
            break
        # second-order working-set step on the (i, j) pair
        quad = max(Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j], 1e-12)
        delta = gap / quad
        # move alpha_i up and alpha_j down along the feasible direction
        if y[i] > 0:
            di_max = C - alpha[i]
        else:
            di_max = alpha[i]
        if y[j] > 0:
            dj_max = alpha[j]
        else:
            dj_max = C - alpha[j]
        step = min(delta, di_max, dj_max)
        alpha[i] += step if y[i] > 0 else -step
        alpha[j] -= step if y[j] > 0 else -step
        grad += step * y * (K[:, i] - K[:, j])
    else:
        yg = -y * grad
        up = ((y > 0) & (alpha < C - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < C - 1e-12))
        if up.any() and low.any() and yg[up].max() - yg[low].min() > cfg.tolerance:
            raise RuntimeError("SMO failed to converge within max_iters")
    bias = _solve_bias(K, y, alpha, C)
    return alpha, bias


def _solve_bias(K, y, alpha, C):
    f_wo_b = (alpha * y) @ K
    free = (alpha > 1e-8) & (alpha < C - 1e-8)
    if free.any():
        return float(np.mean(y[free] - f_wo_b[free]))
    # no free vectors: take the midpoint of the feasible bias interval
    up = ((y > 0) & (alpha < C - 1e-12)) | ((y < 0) & (alpha > 1e-12))
    low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < C - 1e-12))
    hi = np.min((y - f_wo_b)[up]) if up.any() else 0.0
    lo = np.max((y - f_wo_b)[low]) if low.any() else 0.0
    return float((hi + lo) / 2.0)


def norma_update(model, sample, label, cfg=NormaConfig()):
    """One online learning step: decay all coefficients by (1 - eta*lambda),
    and on a margin violation (label * f < 1, evaluated before decay) insert
    the sample with coefficient eta*label and shift the bias by eta*label.
    Evicts the smallest-|beta| support vector when the buffer overflows.
    Returns a new model; the input is untouched.
    """
    if sample.scheme != model.scheme:
        raise ValueError("histogram scheme does not match model")
    label = float(label)
    if label not in (-1.0, 1.0):
        raise ValueError("label must be +1 or -1")
    f = decision(model, sample)
    decay = 1.0 - cfg.eta * cfg.lambda_reg
    support = model.support_histograms
    betas = model.betas * decay
    aggregate = model.aggregate * decay
    bias = model.bias  # bias is excluded from regularization decay
    if label * f < 1.0:
        rho = model.ppk.rho
        support = np.vstack([support, sample.values[None, :]])
        betas = np.append(betas, cfg.eta * label)
        aggregate += (cfg.eta * label) * sample.values ** rho
        bias += cfg.eta * label
        if len(betas) > cfg.buffer_cap:
            evict = int(np.argmin(np.abs(betas)))
            aggregate -= betas[evict] * support[evict] ** rho
            support = np.delete(support, evict, axis=0)
            betas = np.delete(betas, evict)
    elif decay == 1.0:
        return model
    return replace(model, support_histograms=support, betas=betas, bias=bias, aggregate=aggregate)


def save_model(path, model):
    """Binary model file: magic, version, B, rho, N_S, b, then the beta
    array, aggregate array and support histograms as little-endian f64."""
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<IIdId", MODEL_VERSION, model.scheme.bins_per_channel,
                            model.ppk.rho, model.n_support, model.bias))
        f.write(model.betas.astype("<f8").tobytes())
        f.write(model.aggregate.astype("<f8").tobytes())
        f.write(model.support_histograms.astype("<f8").tobytes())


def load_model(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ValueError(f"not a model file: {path}")
    header = struct.Struct("<IIdId")
    off = len(MODEL_MAGIC)
    try:
        version, B, rho, n_s, bias = header.unpack_from(data, off)
    except struct.error:
        raise ValueError(f"corrupt model file (short header): {path}") from None
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}: {path}")
    scheme = BinningScheme(B)
    m = scheme.m
    off += header.size
    need = off + 8 * (n_s + m + n_s * m)
    if len(data) < need:
        raise ValueError(f"corrupt model file (truncated payload): {path}")
    betas = np.frombuffer(data, "<f8", count=n_s, offset=off).copy()
    off += 8 * n_s
    aggregate = np.frombuffer(data, "<f8", count=m, offset=off).copy()
    off += 8 * m
    support = np.frombuffer(data, "<f8", count=n_s * m, offset=off).reshape(n_s, m).copy()
    model = SvmModel(
        support_histograms=support,
        betas=betas,
        bias=float(bias),
        ppk=PpkConfig(rho),
        scheme=scheme,
        aggregate=aggregate,
    )
    fresh = _aggregate(support, betas, rho, m)
    if not np.allclose(fresh, aggregate, atol=1e-9):
        raise ValueError(f"corrupt model file (aggregate mismatch): {path}")
    return model


def train_accuracy(model, samples, labels):
    values = np.stack([s.values for s in samples])
    preds = np.sign(decision_values(model, values))
    return float(np.mean(preds == np.asarray(labels, dtype=np.float64)))
