"""Shared helpers for the test suite: random histograms and models."""

import numpy as np

from kbtrack.histogram import BinningScheme, Histogram
from kbtrack.ppk_svm import PpkConfig, SvmModel


def random_histogram(rng, scheme, occupancy=0.25):
    """Random normalized histogram with a sparse occupied-bin pattern."""
    m = scheme.m
    n_occ = max(1, int(occupancy * m))
    idx = rng.choice(m, size=n_occ, replace=False)
    values = np.zeros(m)
    values[idx] = rng.uniform(0.1, 1.0, size=n_occ)
    values /= values.sum()
    return Histogram(values=values, scheme=scheme)


def random_model(rng, scheme, n_support, rho=0.5, bias=None, beta_scale=1.0):
    support = np.stack([random_histogram(rng, scheme).values
                        for _ in range(n_support)])
    betas = rng.normal(0.0, beta_scale, size=n_support)
    bias = rng.normal() if bias is None else bias
    return SvmModel.build(support, betas, bias, PpkConfig(rho), scheme)


def delta_histogram(scheme, bin0, mass=1.0, bin1=None):
    """Histogram with all mass on one bin, or split across two."""
    values = np.zeros(scheme.m)
    if bin1 is None:
        values[bin0] = 1.0
    else:
        values[bin0] = mass
        values[bin1] = 1.0 - mass
    return Histogram(values=values, scheme=scheme)
