"""Spatial kernel profiles and kernel-weighted color histograms.

A histogram over ``m = B**3`` RGB bins is accumulated with a radial profile
``k(t)`` of the squared normalized offset from the region center, then
normalized to sum to one.  ``g(t) = -k'(t)`` drives mean-shift steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPANECHNIKOV = "epanechnikov"
GAUSSIAN = "gaussian"
_KERNELS = (EPANECHNIKOV, GAUSSIAN)


def profile_eval(kernel, t):
    """Evaluate ``(k(t), g(t))`` for scalar or array ``t >= 0``.

    Epanechnikov: k(t) = 1 - t on [0, 1], 0 outside; g = 1 on [0, 1).
    Gaussian:     k(t) = exp(-t/2); g = k/2.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("squared distance t must be non-negative")
    if kernel == EPANECHNIKOV:
        k = np.where(t <= 1.0, 1.0 - t, 0.0)
        g = np.where(t < 1.0, 1.0, 0.0)
    elif kernel == GAUSSIAN:
        k = np.exp(-t / 2.0)
        g = k / 2.0
    else:
        raise ValueError(f"unknown kernel {kernel!r} (expected one of {_KERNELS})")
    if t.ndim == 0:
        return float(k), float(g)
    return k, g


@dataclass(frozen=True)
class BinningScheme:
    """Uniform per-channel RGB binning with ``B`` bins per channel."""

    bins_per_channel: int = 16

    @property
    def m(self):
        return self.bins_per_channel ** 3


def bin_index(color, scheme):
    """1-based bin index of an RGB triple (channel values in 0..255)."""
    r, g, b = color
    if not (0 <= r <= 255 and 0 <= g <= 255 and 0 <= b <= 255):
        raise ValueError(f"color {color} outside [0, 255]")
    B = scheme.bins_per_channel
    return 1 + (int(r) * B // 256) * B * B + (int(g) * B // 256) * B + (int(b) * B // 256)


def bin_indices(colors, scheme):
    """Vectorized 0-based bin indices for an ``(n, 3)`` uint8 array."""
    B = scheme.bins_per_channel
    c = colors.astype(np.int64)
    return (c[:, 0] * B // 256) * B * B + (c[:, 1] * B // 256) * B + (c[:, 2] * B // 256)


@dataclass(frozen=True)
class Histogram:
    """Normalized m-bin color density."""

    values: np.ndarray
    scheme: BinningScheme

    @property
    def m(self):
        return self.scheme.m


def squared_offsets(positions, center, bandwidth):
    """Squared normalized distance of each pixel position from ``center``
    under component-wise bandwidth scaling."""
    dx = (center[0] - positions[:, 0]) / bandwidth[0]
    dy = (center[1] - positions[:, 1]) / bandwidth[1]
    return dx * dx + dy * dy


def compute_histogram(region, center, bandwidth, kernel, scheme):
    """Kernel-weighted normalized histogram of a region evaluated at a
    (possibly fractional) center.

    Raises if the kernel assigns zero mass to every pixel (degenerate
    placement, e.g. an Epanechnikov kernel with no pixel inside its
    support).
    """
    if region.size == 0:
        raise ValueError("empty region")
    if bandwidth[0] <= 0 or bandwidth[1] <= 0:
        raise ValueError("bandwidth components must be positive")
    t = squared_offsets(region.positions, center, bandwidth)
    k, _ = profile_eval(kernel, t)
    bins = bin_indices(region.colors, scheme)
    values = np.bincount(bins, weights=k, minlength=scheme.m)
    total = values.sum()
    if total <= 0:
        raise ValueError("empty kernel support: all pixel weights are zero")
    return Histogram(values=values / total, scheme=scheme)


def bhattacharyya(q, p):
    """Bhattacharyya coefficient sum_u sqrt(q_u p_u) of two histograms."""
    if q.scheme != p.scheme:
        raise ValueError("histograms use different binning schemes")
    return float(np.sqrt(q.values * p.values).sum())


def bhattacharyya_distance(q, p):
    """sqrt(1 - coefficient); the dissimilarity minimized by standard MS."""
    return float(np.sqrt(max(0.0, 1.0 - bhattacharyya(q, p))))
