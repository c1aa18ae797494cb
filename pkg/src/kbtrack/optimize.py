"""Ascent machinery shared by the trackers: a limited-memory quasi-Newton
maximizer with Armijo backtracking, and a generic fixed-point driver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass
class AscentProblem:
    value: Callable
    gradient: Callable
    dimension: int = 2


@dataclass
class AscentResult:
    argmax: np.ndarray
    value: float
    iterations: int
    converged: bool
    trajectory: Optional[list] = None


def lbfgs_maximize(
    problem,
    c0,
    memory=5,
    grad_tol=1e-4,
    max_iters=50,
    armijo_c1=1e-4,
    backtrack=0.5,
    keep_trajectory=False,
):
    """Maximize ``problem.value`` from ``c0`` by L-BFGS with backtracking
    Armijo line search.

    Accepted steps never decrease the value.  Curvature pairs with
    non-positive s'y (in minimization convention) are skipped to keep the
    inverse-Hessian estimate positive definite.  Stops on the gradient
    tolerance, the iteration cap, or line-search step collapse.
    """
    x = np.asarray(c0, dtype=np.float64).copy()
    f = float(problem.value(x))
    g = np.asarray(problem.gradient(x), dtype=np.float64)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError("non-finite value or gradient at the start point")
    trajectory = [x.copy()] if keep_trajectory else None
    s_hist, y_hist = [], []
    iterations = 0
    converged = bool(np.linalg.norm(g) <= grad_tol)

    while not converged and iterations < max_iters:
        d = _two_loop_direction(g, s_hist, y_hist)
        slope = float(d @ g)
        if slope <= 0:  # not an ascent direction: fall back to steepest ascent
            d = g.copy()
            slope = float(g @ g)
            if slope == 0:
                converged = True
                break
        # backtracking Armijo on the maximization objective
        alpha = 1.0
        x_new = f_new = None
        while alpha >= 1e-14:
            cand = x + alpha * d
            f_cand = float(problem.value(cand))
            if not np.isfinite(f_cand):
                raise ValueError("non-finite value encountered during line search")
            if f_cand >= f + armijo_c1 * alpha * slope:
                x_new, f_new = cand, f_cand
                break
            alpha *= backtrack
        if x_new is None:
            break  # step collapse
        if alpha == 1.0:
            # the unit step was accepted outright: expand while the Armijo
            # bound keeps holding, so badly scaled problems (tiny gradients
            # over wide plateaus) still make pixel-scale progress
            for _ in range(40):
                bigger = alpha / backtrack
                cand = x + bigger * d
                f_cand = float(problem.value(cand))
                if not np.isfinite(f_cand) or f_cand < f + armijo_c1 * bigger * slope \
                        or f_cand <= f_new:
                    break
                alpha, x_new, f_new = bigger, cand, f_cand
        g_new = np.asarray(problem.gradient(x_new), dtype=np.float64)
        if not np.all(np.isfinite(g_new)):
            raise ValueError("non-finite gradient encountered")
        s = x_new - x
        yv = g - g_new  # minimization convention: grad(-f) difference
        if float(s @ yv) > 1e-10 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            s_hist.append(s)
            y_hist.append(yv)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        iterations += 1
        if keep_trajectory:
            trajectory.append(x.copy())
        if np.linalg.norm(g) <= grad_tol:
            converged = True
    return AscentResult(argmax=x, value=f, iterations=iterations, converged=converged,
                        trajectory=trajectory)


def _two_loop_direction(g, s_hist, y_hist):
    """Two-loop recursion producing an ascent direction H * g, where H
    approximates the inverse Hessian of the negated objective."""
    q = -g.copy()  # work on the minimization gradient
    if not s_hist:
        return g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
        rho = 1.0 / float(y @ s)
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def fixed_point_iterate(step, c0, tol=0.1, max_iters=20, keep_trajectory=False):
    """Iterate ``c <- step(c)`` until the displacement drops below ``tol``
    or the iteration cap is reached."""
    x = np.asarray(c0, dtype=np.float64).copy()
    trajectory = [x.copy()] if keep_trajectory else None
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        x_new = np.asarray(step(x), dtype=np.float64)
        if not np.all(np.isfinite(x_new)):
            raise ValueError("fixed-point step returned a non-finite point")
        if keep_trajectory:
            trajectory.append(x_new.copy())
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved < tol:
            converged = True
            break
    return AscentResult(argmax=x, value=float("nan"), iterations=iterations,
                        converged=converged, trajectory=trajectory)
