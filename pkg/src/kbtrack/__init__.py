"""Kernel-based visual tracking toolkit.

Trackers that localize a target by maximizing an SVM classification score
over kernel-weighted color histograms, together with the classic mean-shift
and color particle-filter baselines, annealed global localization, and an
evaluation harness for center-error metrics.
"""

__version__ = "0.1.0"
