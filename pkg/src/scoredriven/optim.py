"""Derivative-free minimization and finite-difference Hessians."""

from dataclasses import dataclass

import numpy as np


@dataclass
class OptimizeResult:
    """Outcome of :func:`minimize`.

    Attributes
    ----------
    x : ndarray
        Best point found.
    fun : float
        Objective value at ``x``.
    nfev : int
        Number of objective evaluations.
    converged : bool
        True when the simplex diameter fell below ``xtol``.
    message : str
    """

    x: np.ndarray
    fun: float
    nfev: int
    converged: bool
    message: str


def _clip(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper)


def _initial_simplex(x0, lower, upper):
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = 0.1 * max(abs(x0[i]), 0.1)
        if x0[i] + step > upper[i]:
            step = -step
        trial = _clip(x0[i] + step, lower[i], upper[i])
        if trial == x0[i]:
            trial = _clip(x0[i] - step, lower[i], upper[i])
        simplex[i + 1, i] = trial
    return simplex


def minimize(fun, x0, lower=None, upper=None, max_eval=1_000_000, xtol=1e-10, callback=None):
    """Minimize ``fun`` with the Nelder-Mead simplex method.

    Trial points are clamped into ``[lower, upper]``. Iteration stops when
    the largest coordinate distance between the best vertex and any other
    vertex drops below ``xtol`` or after ``max_eval`` evaluations.

    Parameters
    ----------
    fun : callable
        Objective ``fun(x) -> float``; non-finite values are treated as
        ``+inf``.
    x0 : array_like
        Starting point, clamped into the bounds.
    lower, upper : array_like, optional
        Box bounds, ``-inf``/``inf`` where absent.
    max_eval : int
        Evaluation budget.
    xtol : float
        Simplex diameter tolerance.
    callback : callable, optional
        Called as ``callback(nfev, fbest)`` after each iteration.

    Returns
    -------
    OptimizeResult

    Raises
    ------
    ValueError
        If the objective is not finite at the start.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n = x0.size
    lower = np.full(n, -np.inf) if lower is None else np.broadcast_to(np.asarray(lower, float), (n,))
    upper = np.full(n, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, float), (n,))
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    x0 = _clip(x0, lower, upper)
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        v = float(fun(x))
        return v if np.isfinite(v) else np.inf

    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")
    if n == 0:
        return OptimizeResult(x0, f0, nfev, True, "no free coordinates")

    sim = _initial_simplex(x0, lower, upper)
    fs = np.empty(n + 1)
    fs[0] = f0
    for i in range(1, n + 1):
        fs[i] = f(sim[i])

    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if callback is not None:
            callback(nfev, fs[0])
        if np.max(np.abs(sim[1:] - sim[0])) < xtol:
            converged = True
            break
        if nfev >= max_eval:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = _clip(centroid + (centroid - sim[-1]), lower, upper)
        fr = f(xr)
        if fr < fs[0]:
            xe = _clip(centroid + 2.0 * (centroid - sim[-1]), lower, upper)
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = _clip(centroid + 0.5 * (xr - centroid), lower, upper)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = f(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        # shrink towards the best vertex
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        for i in range(1, n + 1):
            fs[i] = f(sim[i])

    message = "simplex diameter below tolerance" if converged else "evaluation limit reached"
    return OptimizeResult(sim[0].copy(), float(fs[0]), nfev, converged, message)


def numeric_hessian(fun, x, rel_step=1e-4):
    """Central finite-difference Hessian of a scalar function.

    The step for coordinate ``i`` is ``rel_step * max(1, |x_i|)``. The
    result is symmetrized.

    Parameters
    ----------
    fun : callable
        Function of a 1-D array returning a float.
    x : array_like
        Evaluation point.
    rel_step : float

    Returns
    -------
    ndarray (n, n)
        May contain non-finite entries when ``fun`` fails near ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = fun(x)
    hess = np.empty((n, n))

    def at(i, si, j=None, sj=0.0):
        z = x.copy()
        z[i] += si
        if j is not None:
            z[j] += sj
        return fun(z)

    for i in range(n):
        hess[i, i] = (at(i, h[i]) - 2.0 * f0 + at(i, -h[i])) / h[i] ** 2
        for j in range(i):
            fpp = at(i, h[i], j, h[j])
            fpm = at(i, h[i], j, -h[j])
            fmp = at(i, -h[i], j, h[j])
            fmm = at(i, -h[i], j, -h[j])
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return 0.5 * (hess + hess.T)
