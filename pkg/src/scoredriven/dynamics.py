"""Score-driven recursion: initialization, score scaling and filtering.

The filter loop runs in the compiled ``_kernel`` extension when it is
importable and in :mod:`scoredriven._filter_python` otherwise. Set the
environment variable ``SCOREDRIVEN_PURE_PYTHON=1`` to force the fallback.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _filter_python
from ._filter_python import SCALING_CODES, scaling_matrix
from .errors import SpecificationError, UnitRootError
from .model import CoefSet, normalize_x

try:
    if os.environ.get("SCOREDRIVEN_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python requested")
    from . import _kernel
except ImportError:  # pragma: no cover
    _kernel = None

BACKENDS = ("compiled", "python") if _kernel is not None else ("python",)
DEFAULT_BACKEND = BACKENDS[0]


@dataclass
class FilterOutput:
    """Filtered time-varying parameters in link space and their by-products."""

    par_tv: np.ndarray
    score_tv: np.ndarray
    err_tv: np.ndarray
    loglik_t: np.ndarray
    loglik_sum: float
    f_bar: np.ndarray
    par_names: list
    ok: bool
    lik_skip: int = 0

    @property
    def n_used(self):
        """Number of likelihood terms entering ``loglik_sum``."""
        return int(np.sum(~np.isnan(self.loglik_t[self.lik_skip:])))


def _values(coef):
    return coef.values if isinstance(coef, CoefSet) else np.asarray(coef, dtype=float)


def long_term_init(spec, coef, x_means=None):
    """Long-term parameter values in link space, one per distribution parameter.

    Joint regression divides the intercept plus mean regression effect by one
    minus the sum of autoregressive coefficients; separate regression uses
    the intercept plus mean regression effect directly. Static parameters
    take their level coefficient.
    """
    blocks = spec.layout.unpack(_values(coef))
    out = blocks.static.copy()
    for i, idx in enumerate(spec.tv_index):
        level = blocks.omega[i]
        if spec.m[idx]:
            xm = np.asarray(x_means[i], dtype=float) if x_means is not None else None
            if xm is None or xm.shape != (spec.m[idx],):
                raise SpecificationError("regressor means required for the long-term value")
            level = level + float(np.dot(blocks.beta[i], xm))
        if spec.regress == "joint":
            denom = 1.0 - float(np.sum(blocks.phi[i]))
            if abs(denom) <= 1e-8:
                raise UnitRootError(
                    "autoregressive coefficients sum to one; supply par_init for the initial values"
                )
            level = level / denom
        out[idx] = level
    return out


def scale_score(spec, raw_score, fisher_full):
    """Apply the model's scaling to a time-varying score vector.

    Parameters
    ----------
    raw_score : array (k,)
        Link-space score of the time-varying parameters.
    fisher_full : array (n, n)
        Link-space Fisher information over all distribution parameters.
    """
    raw = np.asarray(raw_score, dtype=float)
    code = SCALING_CODES[spec.scaling]
    if code == 0:
        return raw.copy()
    smat = scaling_matrix(code, np.asarray(fisher_full, dtype=float)[None], spec.tv_index)[0]
    return smat @ raw


def initial_state(spec, coef, x_means):
    """Initial (f, e) rows and the long-term value for the time-varying parameters."""
    tv = spec.tv_index
    if spec.par_init is not None:
        init_f = np.array(spec.par_init, dtype=float)
        try:
            f_bar = long_term_init(spec, coef, x_means)[tv]
        except UnitRootError:
            f_bar = init_f.copy()
    else:
        f_bar = long_term_init(spec, coef, x_means)[tv]
        init_f = f_bar.copy()
    if spec.regress == "sep":
        blocks = spec.layout.unpack(_values(coef))
        reg = np.array([blocks.omega[i] + (np.dot(blocks.beta[i], x_means[i]) if len(blocks.beta[i]) else 0.0)
                        for i in range(spec.n_tv)])
        init_e = init_f - reg if spec.par_init is not None else np.zeros(spec.n_tv)
    else:
        init_e = np.full(spec.n_tv, np.nan)
    return init_f, init_e, f_bar


class FilterProblem:
    """A series and its regressors prepared once for repeated filtering.

    Parameters
    ----------
    spec : ModelSpec
    y : array (T,)
        Observations, NaN marks missing values.
    x : None, array (T, M) or list of arrays
        Regressors, common or one matrix per time-varying parameter.
    lik_skip : int
        Number of leading likelihood terms excluded from ``loglik_sum``.
    x_mean : list of arrays, optional
        Regressor means used for the long-term value; defaults to column
        means over all supplied rows.
    """

    def __init__(self, spec, y, x=None, lik_skip=0, x_mean=None):
        self.spec = spec
        self.y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
        T = self.y.shape[0]
        if T < 1:
            raise SpecificationError("the series must contain at least one observation")
        if not 0 <= lik_skip < T:
            raise SpecificationError(f"lik_skip must lie in [0, {T - 1}]")
        self.lik_skip = int(lik_skip)
        self.xs = normalize_x(spec, x, T)
        for xi in self.xs:
            if np.any(~np.isfinite(xi)):
                raise SpecificationError("regressors contain missing values")
        if x_mean is not None:
            self.x_means = [np.asarray(m, dtype=float) for m in x_mean]
        else:
            self.x_means = [xi.mean(axis=0) if xi.shape[1] else np.zeros(0) for xi in self.xs]
        self.tv = spec.tv_index.astype(np.intp)
        self.p = np.array([spec.p[i] for i in self.tv], dtype=np.intc)
        self.q = np.array([spec.q[i] for i in self.tv], dtype=np.intc)
        self.code = SCALING_CODES[spec.scaling]
        self.names = [spec.param_labels[i] for i in self.tv]

    def regression(self, blocks):
        T = self.y.shape[0]
        xb = np.zeros((T, self.spec.n_tv))
        for i, xi in enumerate(self.xs):
            if xi.shape[1]:
                xb[:, i] = xi @ blocks.beta[i]
        return xb

    def run(self, coef, backend=None):
        """Filter at a full coefficient vector; see :func:`filter_pass`."""
        spec = self.spec
        blocks = spec.layout.unpack(_values(coef))
        init_f, init_e, f_bar = initial_state(spec, coef, self.x_means)
        T = self.y.shape[0]
        k = spec.n_tv
        par_tv = np.full((T, k), np.nan)
        score_tv = np.full((T, k), np.nan)
        err_tv = np.full((T, k), np.nan)
        ll = np.full(T, np.nan)
        sep = spec.regress == "sep"
        backend = backend or DEFAULT_BACKEND
        args = (self.y, self.tv, spec.link_kinds, np.ascontiguousarray(blocks.static, dtype=float),
                np.ascontiguousarray(blocks.omega, dtype=float), self.regression(blocks),
                np.ascontiguousarray(blocks.alpha), np.ascontiguousarray(blocks.phi),
                self.p, self.q, np.ascontiguousarray(init_f), np.ascontiguousarray(init_e),
                sep, self.code, self.lik_skip, spec.n_init, par_tv, score_tv, err_tv, ll)
        if backend == "compiled":
            if _kernel is None:
                raise RuntimeError("compiled kernel not available")
            total, ok = _kernel.filter_loop(spec.distr.kernel_id, *args)
        elif backend == "python":
            total, ok = _filter_python.filter_loop(spec.distr, *args)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        if not sep:
            err_tv[:] = np.nan
        return FilterOutput(par_tv, score_tv, err_tv, ll, float(total), f_bar, list(self.names),
                            bool(ok), self.lik_skip)

    def loglik(self, coef):
        """Summed log-likelihood, -inf for invalid coefficients."""
        try:
            out = self.run(coef)
        except UnitRootError:
            return -np.inf
        return out.loglik_sum if out.ok else -np.inf


def filter_pass(spec, coef, y, x=None, lik_skip=0, x_mean=None, backend=None):
    """Filter the time-varying parameters through the observed series.

    Missing observations (NaN) contribute a zero score and no likelihood
    term. Invalid parameter paths yield ``loglik_sum = -inf`` and
    ``ok = False`` instead of raising.

    Parameters
    ----------
    spec : ModelSpec
    coef : CoefSet or array
        Full coefficient vector in layout order.
    y : array (T,)
    x, lik_skip, x_mean
        See :class:`FilterProblem`.
    backend : {"compiled", "python"}, optional

    Returns
    -------
    FilterOutput
    """
    return FilterProblem(spec, y, x, lik_skip, x_mean).run(coef, backend)
