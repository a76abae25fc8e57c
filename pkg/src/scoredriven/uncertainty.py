"""Coefficient uncertainty by bootstrap and filtered-parameter uncertainty.

Replicate ``r`` of a call seeded with ``seed`` draws from
``numpy.random.SeedSequence(seed, spawn_key=(r,))``, so replicates are
independent tasks that can run in any order or process and still give
bit-identical results.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import FilterProblem
from .errors import ConvergenceWarning, EstimationStartError, ResamplingError, SpecificationError
from .estimation import build_structure, estimate
from .forecast import DEFAULT_QUANT, forecast_simulated_paths, simulate_series
from .model import normalize_x

BOOT_METHODS = ("parametric", "simple_block", "moving_block", "stationary_block")
BLOCK_METHODS = BOOT_METHODS[1:]


def replicate_rng(entropy, r):
    """Generator for replicate ``r`` of a call with root entropy ``entropy``."""
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(r,)))


def _root_entropy(seed):
    if seed is None:
        return np.random.SeedSequence().entropy
    return int(seed)


def block_indices(method, T, block_length=None, seed=None):
    """Circular block-bootstrap resampling indices.

    Parameters
    ----------
    method : {"simple_block", "moving_block", "stationary_block"}
        Fixed non-overlapping blocks, fixed overlapping blocks or blocks of
        geometric length with mean ``block_length``.
    T : int
        Series length.
    block_length : int or float
        Block length; the mean block length for ``stationary_block``.
    seed : int or numpy.random.Generator, optional

    Returns
    -------
    ndarray of int, shape (T,)
        Zero-based indices into the original series.
    """
    if method not in BLOCK_METHODS:
        raise SpecificationError(f"unknown block method {method!r}; choose from {BLOCK_METHODS}")
    if block_length is None:
        raise SpecificationError(f"{method} needs a block length")
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    if method == "stationary_block":
        if not block_length >= 1:
            raise SpecificationError("the mean block length must be at least 1")
        out, filled = [], 0
        while filled < T:
            length = int(rng.geometric(1.0 / block_length))
            begin = int(rng.integers(T))
            out.append((begin + np.arange(length)) % T)
            filled += length
        return np.concatenate(out)[:T]
    L = int(block_length)
    if L != block_length or not 1 <= L <= T:
        raise SpecificationError(f"block length must be an integer in [1, {T}]")
    n_blocks = -(-T // L)
    if method == "simple_block":
        starts = rng.integers(n_blocks, size=n_blocks) * L
    else:
        starts = rng.integers(T, size=n_blocks)
    return ((starts[:, None] + np.arange(L)[None, :]) % T).ravel()[:T]


def _take_rows(x, idx):
    if x is None:
        return None
    if isinstance(x, (list, tuple)):
        return [None if xi is None else np.asarray(xi)[idx] for xi in x]
    return np.asarray(x)[idx]


@dataclass
class BootstrapResult:
    """Bootstrap distribution of the coefficients.

    ``coef_quant`` has one row per coefficient and one column per entry of
    ``quant``.
    """

    method: str
    coef_names: list
    coef_samples: np.ndarray
    coef_mean: np.ndarray
    coef_sd: np.ndarray
    coef_quant: np.ndarray
    quant: tuple
    failures: int
    rep_boot: int


def summarize_samples(samples, quant):
    """Mean, standard deviation and empirical quantiles per column."""
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    sd = samples.std(axis=0, ddof=1) if samples.shape[0] > 1 else np.zeros(samples.shape[1])
    q = np.quantile(samples, quant, axis=0).T
    return mean, sd, q


def _replicate(task):
    est, method, block_length, entropy, r = task
    rng = replicate_rng(entropy, r)
    T = est.y.size
    x = est.x
    if method == "parametric":
        y = simulate_series(est.spec, est.coef_est, T, x_sim=x, seed=rng).y_sim
    else:
        idx = block_indices(method, T, block_length, rng)
        y = est.y[idx]
        x = _take_rows(x, idx)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        try:
            fit = estimate(y, est.spec, x, est.constraints, est.lik_skip, coef_start=est.coef_est.values,
                           hessian=False, **est.options)
        except (EstimationStartError, ResamplingError, SpecificationError):
            return None
    if not np.isfinite(fit.loglik):
        return None
    return fit.coef_est.values


def run_tasks(func, tasks, jobs=1):
    """Run independent tasks, collecting results in task order."""
    if jobs is None or jobs <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def bootstrap(est, method="parametric", rep_boot=1000, block_length=None, quant=DEFAULT_QUANT, seed=None,
              jobs=1):
    """Bootstrap the coefficient distribution of a fitted model.

    Parametric replicates simulate a series of the original length at the
    estimated coefficients (with the original regressors); block
    replicates resample rows of ``y`` and ``x`` together. Every replicate
    is re-estimated starting from the original estimate, without a Hessian.

    Parameters
    ----------
    est : EstimationResult
    method : {"parametric", "simple_block", "moving_block", "stationary_block"}
    rep_boot : int
    block_length : int or float, optional
        Required by the block methods.
    quant : sequence of float
    seed : int, optional
    jobs : int
        Worker processes; results do not depend on it.

    Returns
    -------
    BootstrapResult

    Raises
    ------
    ResamplingError
        If every replicate fails.
    """
    if method not in BOOT_METHODS:
        raise SpecificationError(f"unknown bootstrap method {method!r}; choose from {BOOT_METHODS}")
    if rep_boot < 1:
        raise ValueError("rep_boot must be at least 1")
    if method in BLOCK_METHODS and block_length is None:
        raise SpecificationError(f"{method} needs a block length")
    quant = tuple(float(v) for v in np.atleast_1d(quant))
    entropy = _root_entropy(seed)
    tasks = [(est, method, block_length, entropy, r) for r in range(rep_boot)]
    results = run_tasks(_replicate, tasks, jobs)
    good = [v for v in results if v is not None]
    if not good:
        raise ResamplingError("every bootstrap replicate failed")
    samples = np.vstack(good)
    mean, sd, q = summarize_samples(samples, quant)
    return BootstrapResult(method, list(est.coef_est.names), samples, mean, sd, q, quant,
                           rep_boot - len(good), rep_boot)


def _normal_factor(vcov):
    vcov = 0.5 * (vcov + vcov.T)
    try:
        return np.linalg.cholesky(vcov)
    except np.linalg.LinAlgError:
        pass
    k = vcov.shape[0]
    jitter = 1e-10 * np.trace(vcov) / max(k, 1)
    try:
        return np.linalg.cholesky(vcov + jitter * np.eye(k))
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(vcov)
        return v * np.sqrt(np.maximum(w, 0.0))


def coef_draws(coef, vcov, rep_gen, structure=None, seed=None, problem=None):
    """Asymptotic-normal coefficient draws.

    Parameters
    ----------
    coef : array (n,)
    vcov : array (n, n)
    rep_gen : int
    structure : Structure, optional
        Draws are mapped back onto the constraint set, so fixed and tied
        coefficients keep their exact values.
    seed : int or numpy.random.Generator, optional
    problem : FilterProblem, optional
        When given, draws with a non-finite likelihood are redrawn, with a
        cap of ``100 * rep_gen`` draws in total.

    Returns
    -------
    ndarray (rep_gen, n)
    """
    coef = np.asarray(coef, dtype=float)
    vcov = np.asarray(vcov, dtype=float)
    if vcov.shape != (coef.size, coef.size) or not np.all(np.isfinite(vcov)):
        raise SpecificationError("vcov must be a finite square matrix matching the coefficients")
    rng = np.random.default_rng(seed)
    factor = _normal_factor(vcov)
    out = np.empty((rep_gen, coef.size))
    filled, drawn = 0, 0
    while filled < rep_gen:
        need = rep_gen - filled
        z = rng.standard_normal((need, coef.size))
        batch = coef + z @ factor.T
        drawn += need
        if structure is not None:
            batch = structure.base + batch[:, structure.free] @ structure.amap.T
        if problem is not None:
            keep = np.array([np.isfinite(problem.loglik(b)) for b in batch], dtype=bool)
            batch = batch[keep]
        out[filled:filled + len(batch)] = batch
        filled += len(batch)
        if filled < rep_gen and drawn >= 100 * rep_gen:
            raise ResamplingError(
                "too many coefficient draws give a non-finite likelihood; "
                "the covariance reaches into an unstable region of the coefficient space"
            )
    return out


@dataclass
class FilterUncertainty:
    """Pointwise distribution of filtered parameter and score paths.

    Rows cover the sample followed by ``t_ahead`` forecast steps. Quantile
    arrays have shape (T + H, K, len(quant)).
    """

    method: str
    par_names: list
    quant: tuple
    t_ahead: int
    par_tv_mean: np.ndarray
    par_tv_sd: np.ndarray
    par_tv_quant: np.ndarray
    score_tv_mean: np.ndarray
    score_tv_sd: np.ndarray
    score_tv_quant: np.ndarray
    coef_sets: np.ndarray = field(repr=False, default=None)

    def band_width(self, param=0):
        """Mean over time of the widest quantile band of one parameter."""
        q = self.par_tv_quant[:, param, :]
        return float(np.mean(q[:, -1] - q[:, 0]))


def _pointwise(paths, quant):
    mean = paths.mean(axis=0)
    sd = paths.std(axis=0, ddof=1) if paths.shape[0] > 1 else np.zeros(paths.shape[1:])
    q = np.moveaxis(np.quantile(paths, quant, axis=0), 0, -1)
    return mean, sd, q


def filter_uncertainty(est=None, method="simulated_coefs", coef_set=None, rep_gen=1000, t_ahead=0,
                       x_ahead=None, rep_ahead=1, quant=DEFAULT_QUANT, seed=None, *, spec=None, y=None,
                       x=None, vcov=None, coef=None):
    """Uncertainty of the filtered parameters induced by coefficient uncertainty.

    Parameters
    ----------
    est : EstimationResult, optional
        Fitted model supplying spec, data, estimate and covariance. Without
        it pass ``spec``, ``y``, ``x`` and either ``coef_set`` or
        ``coef`` with ``vcov``.
    method : {"given_coefs", "simulated_coefs"}
        Filter each row of ``coef_set``, or ``rep_gen`` asymptotic-normal
        draws around the estimate.
    t_ahead : int
        Forecast steps appended by simulating ``rep_ahead`` paths per set.
    x_ahead : array_like, optional
        Future regressors.
    quant : sequence of float
    seed : int, optional

    Returns
    -------
    FilterUncertainty
    """
    quant = tuple(float(v) for v in np.atleast_1d(quant))
    if est is not None:
        spec, y, x = est.spec, est.y, est.x
        coef = est.coef_est.values if coef is None else coef
        vcov = est.coef_vcov if vcov is None else vcov
        structure = est.structure
    else:
        if spec is None or y is None:
            raise SpecificationError("pass an estimation result or spec and y")
        structure = None
    problem = FilterProblem(spec, y, x)
    n = len(spec.layout)
    entropy = _root_entropy(seed)
    if method == "given_coefs":
        if coef_set is None:
            raise SpecificationError("given_coefs needs a coefficient matrix")
        sets = np.atleast_2d(np.asarray(coef_set, dtype=float))
        if sets.shape[0] == 0 or sets.shape[1] != n:
            raise SpecificationError(f"coef_set must be a non-empty matrix with {n} columns")
    elif method == "simulated_coefs":
        if coef is None or vcov is None:
            raise SpecificationError("simulated_coefs needs an estimate with a covariance matrix")
        sets = coef_draws(coef, vcov, rep_gen, structure, replicate_rng(entropy, 0), problem)
    else:
        raise SpecificationError(f"unknown method {method!r}; use given_coefs or simulated_coefs")
    if t_ahead > 0:
        if x_ahead is None and any(spec.m[i] for i in spec.tv_index):
            raise SpecificationError("the model has regressors; x_ahead must supply their future values")
        normalize_x(spec, x_ahead, t_ahead)

    pars, scores, pars_ahead, scores_ahead = [], [], [], []
    for r, c in enumerate(sets):
        out = problem.run(c)
        if not out.ok:
            raise SpecificationError(f"the filter fails for coefficient set {r + 1}")
        pars.append(out.par_tv)
        scores.append(out.score_tv)
        if t_ahead > 0:
            fc = forecast_simulated_paths(None, t_ahead, x_ahead, rep_ahead, quant,
                                          seed=replicate_rng(entropy, r + 1), spec=spec, coef=c, y=y, x=x)
            pars_ahead.append(fc.par_paths)
            scores_ahead.append(fc.score_paths)
    par_in = _pointwise(np.stack(pars), quant)
    score_in = _pointwise(np.stack(scores), quant)
    if t_ahead > 0:
        par_out = _pointwise(np.concatenate(pars_ahead), quant)
        score_out = _pointwise(np.concatenate(scores_ahead), quant)
        par_in = tuple(np.concatenate([a, b]) for a, b in zip(par_in, par_out))
        score_in = tuple(np.concatenate([a, b]) for a, b in zip(score_in, score_out))
    names = [spec.param_labels[i] for i in spec.tv_index]
    return FilterUncertainty(method, names, quant, int(t_ahead), *par_in, *score_in, coef_sets=sets)
