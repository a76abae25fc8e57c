"""Simulation and forecasting.

Simulation and simulated-path forecasts share one engine: at each step
draw an observation at the current parameters, compute its scaled score
and advance the recursion. All paths of a call are vectorized and share a
single random generator, so results are reproducible for a given seed.
"""

from dataclasses import dataclass, field

import numpy as np

from ._filter_python import _fallback_point, advance, scaled_score
from .distributions import links
from .dynamics import FilterProblem, SCALING_CODES, initial_state
from .errors import ResamplingError, SpecificationError
from .model import CoefSet, normalize_x

DEFAULT_QUANT = (0.025, 0.975)


@dataclass
class SimulationResult:
    """Simulated observations with the parameter and score paths that produced them.

    ``par_tv_sim`` is in link space; ``score_sim`` holds scaled scores.
    """

    y_sim: np.ndarray
    par_tv_sim: np.ndarray
    score_sim: np.ndarray
    par_names: list
    spec: object = field(repr=False, default=None)
    coef: np.ndarray = field(repr=False, default=None)


@dataclass
class ForecastResult:
    """Forecast of observations and time-varying parameters.

    Attributes
    ----------
    method : {"mean_path", "simulated_paths"}
    t_index : ndarray
        Horizon row indices ``T+1..T+H`` (1-based).
    y_mean : ndarray (H,)
    y_sd : ndarray (H,) or None
    y_quant : ndarray (H, len(quant)) or None
    quant : tuple
    par_tv_ahead : ndarray (H, K)
        Link-space parameters; the across-path mean for simulated paths.
    par_tv_quant : ndarray (H, K, len(quant)) or None
    y_paths, par_paths, score_paths : ndarray or None
        Raw simulated paths, shapes (R, H), (R, H, K) and (R, H, K).
    """

    method: str
    t_index: np.ndarray
    y_mean: np.ndarray
    par_tv_ahead: np.ndarray
    par_names: list
    y_sd: np.ndarray | None = None
    y_quant: np.ndarray | None = None
    quant: tuple = ()
    par_tv_sd: np.ndarray | None = None
    par_tv_quant: np.ndarray | None = None
    y_paths: np.ndarray | None = field(default=None, repr=False)
    par_paths: np.ndarray | None = field(default=None, repr=False)
    score_paths: np.ndarray | None = field(default=None, repr=False)

    @property
    def horizon(self):
        return len(self.t_index)


def _coef_values(coef):
    return coef.values if isinstance(coef, CoefSet) else np.asarray(coef, dtype=float)


def _model_parts(est, spec, coef, y, x):
    if est is not None:
        return est.spec, est.coef_est.values, est.y, est.x
    if spec is None or coef is None:
        raise SpecificationError("pass an estimation result or both spec and coef")
    return spec, _coef_values(coef), y, x


def _theta(spec, statics, par):
    """Link-space full parameter arrays from TV paths of shape (..., K)."""
    theta = np.broadcast_to(statics, par.shape[:-1] + (len(statics),)).copy()
    theta[..., spec.tv_index] = par
    return theta


def _run_paths(spec, blocks, xb, par, score, err, y, t0, rng):
    """Fill rows ``t0:`` of the (r, T, .) arrays in place; return per-path success flags."""
    desc = spec.distr
    tv = spec.tv_index
    kinds = spec.link_kinds
    code = SCALING_CODES[spec.scaling]
    sep = spec.regress == "sep"
    p = [spec.p[i] for i in tv]
    q = [spec.q[i] for i in tv]
    r, T, _ = par.shape
    ok = np.ones(r, dtype=bool)
    fallback = _fallback_point(desc)
    for t in range(t0, T):
        if t >= spec.n_init:
            f, e = advance(sep, blocks.omega, xb[t], blocks.alpha, blocks.phi, p, q,
                           par[:, :t], err[:, :t], score[:, :t])
            par[:, t] = f
            err[:, t] = e
        theta = _theta(spec, blocks.static, par[:, t])
        with np.errstate(all="ignore"):
            nat = links.inverse(theta, kinds)
        good = ok & np.all(np.isfinite(theta), axis=1) & desc.in_support(nat)
        nat = np.where(good[:, None], nat, fallback)
        y[:, t] = desc.random(nat, rng)
        _, s, sok = scaled_score(desc, np.where(good[:, None], theta, links.forward(fallback, kinds)),
                                 y[:, t], kinds, tv, code)
        ok = good & sok
        score[:, t] = np.where(ok[:, None], s, np.nan)
    return ok


def _paths_with_retry(spec, blocks, xb, par, score, err, y, t0, rng, what):
    """Run paths, redrawing failed ones up to a cap of 100 attempts per path."""
    r = par.shape[0]
    ok = _run_paths(spec, blocks, xb, par, score, err, y, t0, rng)
    attempts = r
    while not np.all(ok):
        bad = np.flatnonzero(~ok)
        attempts += bad.size
        if attempts > 100 * r:
            raise ResamplingError(f"{what}: simulated parameters left the support too often")
        sub = [a[bad] for a in (par, score, err, y)]
        sub_ok = _run_paths(spec, blocks, xb, *sub, t0, rng)
        for a, s in zip((par, score, err, y), sub):
            a[bad] = s
        ok[bad] = sub_ok
    return ok


def _xb(spec, blocks, xs):
    T = xs[0].shape[0] if xs else 0
    out = np.zeros((T, spec.n_tv))
    for i, xi in enumerate(xs):
        if xi.shape[1]:
            out[:, i] = xi @ blocks.beta[i]
    return out


def simulate_series(spec, coef, t_sim, x_sim=None, seed=None, burn_in=0):
    """Simulate a series from a score-driven model.

    The recursion starts at ``spec.par_init`` or the long-term value, the
    first ``burn_in`` steps are discarded. With ``burn_in=0`` filtering
    ``y_sim`` at the same coefficients and regressors reproduces
    ``par_tv_sim``.

    Parameters
    ----------
    spec : ModelSpec
    coef : CoefSet or array_like
    t_sim : int
        Number of returned observations.
    x_sim : array_like or list, optional
        Regressors covering ``burn_in + t_sim`` rows, or ``t_sim`` rows in
        which case burn-in steps reuse the first row.
    seed : int or numpy.random.Generator, optional
    burn_in : int

    Returns
    -------
    SimulationResult
    """
    if t_sim < 0 or burn_in < 0:
        raise ValueError("t_sim and burn_in must be non-negative")
    coef = _coef_values(coef)
    blocks = spec.layout.unpack(coef)
    names = [spec.param_labels[i] for i in spec.tv_index]
    total = t_sim + burn_in
    if t_sim == 0:
        k = spec.n_tv
        return SimulationResult(np.empty(0), np.empty((0, k)), np.empty((0, k)), names, spec, coef)
    xs = _sim_regressors(spec, x_sim, t_sim, burn_in)
    means = [xi.mean(axis=0) if xi.shape[1] else np.zeros(0) for xi in xs]
    init_f, init_e, _ = initial_state(spec, coef, means)
    rng = np.random.default_rng(seed)
    k = spec.n_tv
    par = np.full((1, total, k), np.nan)
    err = np.full((1, total, k), np.nan)
    score = np.full((1, total, k), np.nan)
    y = np.full((1, total), np.nan)
    par[:, :spec.n_init] = init_f
    err[:, :spec.n_init] = init_e
    _paths_with_retry(spec, blocks, _xb(spec, blocks, xs), par, score, err, y, 0, rng, "simulation")
    return SimulationResult(y[0, burn_in:], par[0, burn_in:], score[0, burn_in:], names, spec, coef)


def _sim_regressors(spec, x_sim, t_sim, burn_in):
    total = t_sim + burn_in
    if x_sim is None:
        return normalize_x(spec, None, total)
    rows = (np.shape(x_sim[0])[0] if isinstance(x_sim, (list, tuple)) and x_sim[0] is not None
            else np.shape(x_sim)[0] if not isinstance(x_sim, (list, tuple)) else total)
    if rows == total:
        return normalize_x(spec, x_sim, total)
    xs = normalize_x(spec, x_sim, t_sim)
    return [np.vstack([np.repeat(xi[:1], burn_in, axis=0), xi]) for xi in xs]


def _future_regressors(spec, x_ahead, t_ahead):
    if any(spec.m[i] for i in spec.tv_index) and x_ahead is None and t_ahead > 0:
        raise SpecificationError("the model has regressors; x_ahead must supply their future values")
    return normalize_x(spec, x_ahead, t_ahead)


def _extended_filter(spec, coef, y, x, x_ahead, t_ahead):
    """Filter on y padded with missing values over the horizon."""
    y = np.asarray(y, dtype=float).ravel()
    T = y.size
    insample = FilterProblem(spec, y, x)
    future = _future_regressors(spec, x_ahead, t_ahead)
    x_ext = [np.vstack([a, b]) for a, b in zip(insample.xs, future)]
    problem = FilterProblem(spec, np.concatenate([y, np.full(t_ahead, np.nan)]), x_ext,
                            x_mean=insample.x_means)
    out = problem.run(coef)
    if not out.ok:
        raise SpecificationError("the filter fails at these coefficients")
    return problem, out, T


def forecast_mean_path(est=None, t_ahead=1, x_ahead=None, *, spec=None, coef=None, y=None, x=None):
    """Zero-score forecast of parameters and observation means.

    The recursion continues past the sample with the score of every
    future (unobserved) step set to zero; the first forecast step still
    uses the last in-sample score.

    Parameters
    ----------
    est : EstimationResult, optional
        Fitted model; otherwise pass ``spec``, ``coef``, ``y`` and ``x``.
    t_ahead : int
    x_ahead : array_like or list, optional
        Future regressors with ``t_ahead`` rows.

    Returns
    -------
    ForecastResult
    """
    spec, coef, y, x = _model_parts(est, spec, coef, y, x)
    if t_ahead < 0:
        raise ValueError("t_ahead must be non-negative")
    _, out, T = _extended_filter(spec, coef, y, x, x_ahead, t_ahead)
    par = out.par_tv[T:]
    blocks = spec.layout.unpack(coef)
    theta = _theta(spec, blocks.static, par)
    y_mean = spec.distr.mean(links.inverse(theta, spec.link_kinds)) if t_ahead else np.empty(0)
    return ForecastResult("mean_path", np.arange(T + 1, T + t_ahead + 1), np.asarray(y_mean, float),
                          par, out.par_names)


def forecast_simulated_paths(est=None, t_ahead=1, x_ahead=None, rep_ahead=1000, quant=DEFAULT_QUANT,
                             seed=None, *, spec=None, coef=None, y=None, x=None):
    """Forecast by simulating ``rep_ahead`` continuations of the filtered series.

    Each path draws an observation at the current parameters, computes its
    scaled score and advances the recursion. Paths whose parameters leave
    the support are redrawn.

    Returns
    -------
    ForecastResult
        Means, standard deviations and empirical quantiles (linear
        interpolation between order statistics) per horizon.
    """
    spec, coef, y, x = _model_parts(est, spec, coef, y, x)
    if rep_ahead < 1:
        raise ValueError("rep_ahead must be at least 1")
    if t_ahead < 0:
        raise ValueError("t_ahead must be non-negative")
    quant = tuple(float(v) for v in np.atleast_1d(quant))
    problem, out, T = _extended_filter(spec, coef, y, x, x_ahead, t_ahead)
    blocks = spec.layout.unpack(coef)
    k = spec.n_tv
    total = T + t_ahead
    par = np.empty((rep_ahead, total, k))
    score = np.empty((rep_ahead, total, k))
    err = np.empty((rep_ahead, total, k))
    ys = np.empty((rep_ahead, total))
    par[:, :T] = out.par_tv[:T]
    score[:, :T] = out.score_tv[:T]
    err[:, :T] = out.err_tv[:T]
    ys[:, :T] = problem.y[:T]
    rng = np.random.default_rng(seed)
    xb = problem.regression(blocks)
    _paths_with_retry(spec, blocks, xb, par, score, err, ys, T, rng, "forecast")
    y_paths = ys[:, T:]
    par_paths = par[:, T:]
    return ForecastResult(
        "simulated_paths", np.arange(T + 1, total + 1),
        y_mean=y_paths.mean(axis=0), par_tv_ahead=par_paths.mean(axis=0), par_names=out.par_names,
        y_sd=y_paths.std(axis=0, ddof=1) if rep_ahead > 1 else np.zeros(t_ahead),
        y_quant=np.quantile(y_paths, quant, axis=0).T if t_ahead else np.empty((0, len(quant))),
        quant=quant,
        par_tv_sd=par_paths.std(axis=0, ddof=1) if rep_ahead > 1 else np.zeros((t_ahead, k)),
        par_tv_quant=np.moveaxis(np.quantile(par_paths, quant, axis=0), 0, -1) if t_ahead
        else np.empty((0, k, len(quant))),
        y_paths=y_paths, par_paths=par_paths, score_paths=score[:, T:],
    )


def forecast(est=None, t_ahead=1, x_ahead=None, method="mean_path", rep_ahead=1000, quant=DEFAULT_QUANT,
             seed=None, **model):
    """Dispatch to :func:`forecast_mean_path` or :func:`forecast_simulated_paths`."""
    if method == "mean_path":
        return forecast_mean_path(est, t_ahead, x_ahead, **model)
    if method == "simulated_paths":
        return forecast_simulated_paths(est, t_ahead, x_ahead, rep_ahead, quant, seed, **model)
    raise SpecificationError(f"unknown forecast method {method!r}; use mean_path or simulated_paths")
