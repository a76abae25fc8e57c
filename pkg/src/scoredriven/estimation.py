"""Maximum-likelihood estimation of score-driven models.

The pipeline is: build the affine map from free to full coefficients,
pick a start on a small grid, minimize the negative log-likelihood with
Nelder-Mead, then invert a finite-difference Hessian for inference.
"""

import itertools
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .distributions import links, start as dist_start
from .dynamics import FilterProblem
from .errors import ConvergenceWarning, EstimationStartError, SpecificationError
from .model import CoefSet, ModelSpec, infer_m
from .optim import minimize, numeric_hessian

SPECIALS = ("panel_structure", "zero_sum_intercept", "random_walk")
GRID_ALPHA = (0.0, 0.05)
GRID_PHI = (0.0, 0.5, 0.9)


@dataclass
class ConstraintSpec:
    """Restrictions on the coefficient vector.

    Parameters
    ----------
    fix_value : dict or array_like, optional
        Fixed values by coefficient name, or a full-length vector with NaN
        for free coefficients.
    fix_other : list of tuple or array_like, optional
        Linear ties as ``(fixed_name, estimated_name, multiplier)`` triples,
        or a square matrix with NaN where no tie exists (row = fixed,
        column = estimated). A tied coefficient equals its ``fix_value``
        (0 when absent) plus the weighted estimated coefficients.
    special : sequence of str
        Named structures among ``panel_structure``, ``zero_sum_intercept``
        and ``random_walk``.
    lower, upper : dict or array_like, optional
        Bounds by name or full-length vectors.
    """

    fix_value: object = None
    fix_other: object = None
    special: tuple = ()
    lower: object = None
    upper: object = None


def _full_vector(value, names, fill, what):
    n = len(names)
    out = np.full(n, fill, dtype=float)
    if value is None:
        return out
    if isinstance(value, dict):
        for name, v in value.items():
            if name not in names:
                raise SpecificationError(f"{what}: unknown coefficient {name!r}")
            out[names.index(name)] = fill if v is None else float(v)
        return out
    arr = np.asarray(value, dtype=float).ravel()
    if arr.size != n:
        raise SpecificationError(f"{what} must have {n} entries, got {arr.size}")
    return np.where(np.isnan(arr), fill, arr)


def _tie_matrix(value, names):
    n = len(names)
    out = np.full((n, n), np.nan)
    if value is None:
        return out
    if isinstance(value, np.ndarray) and value.ndim == 2:
        if value.shape != (n, n):
            raise SpecificationError(f"fix_other must be {n}x{n}, got {value.shape}")
        return value.astype(float).copy()
    for item in value:
        try:
            fixed, est, mult = item
        except (TypeError, ValueError):
            raise SpecificationError(f"fix_other entry {item!r} is not a (fixed, estimated, multiplier) triple") from None
        for name in (fixed, est):
            if name not in names:
                raise SpecificationError(f"fix_other: unknown coefficient {name!r}")
        out[names.index(fixed), names.index(est)] = float(mult)
    return out


def lower_specials(spec, special, fix_value, fix_other):
    """Rewrite named structures as fixed values and ties (in place).

    ``random_walk`` fixes every intercept at 0 and the first autoregressive
    coefficient at 1. ``zero_sum_intercept`` ties the last intercept to minus
    the sum of the others. ``panel_structure`` ties the score and
    autoregressive coefficients of every time-varying parameter to those of
    the first.
    """
    layout = spec.layout
    k = spec.n_tv
    for name in special:
        if name not in SPECIALS:
            raise SpecificationError(f"unknown special structure {name!r}; choose from {SPECIALS}")
        if name == "random_walk":
            if k == 0:
                raise SpecificationError("random_walk needs a time-varying parameter")
            for i in range(k):
                if len(layout.phi[i]) == 0:
                    raise SpecificationError("random_walk needs autoregressive order q >= 1")
                fix_value[layout.omega[i]] = 0.0
                fix_value[layout.phi[i][0]] = 1.0
        elif name == "zero_sum_intercept":
            if k < 2:
                raise SpecificationError("zero_sum_intercept needs at least two time-varying parameters")
            last = layout.omega[-1]
            fix_value[last] = 0.0
            fix_other[last, layout.omega[:-1]] = -1.0
        else:
            if k < 2:
                raise SpecificationError("panel_structure needs at least two time-varying parameters")
            for i in range(1, k):
                for block in (layout.alpha, layout.phi):
                    if len(block[i]) != len(block[0]):
                        raise SpecificationError("panel_structure needs equal orders across parameters")
                    if len(block[i]):
                        fix_value[block[i]] = 0.0
                        fix_other[block[i], block[0]] = 1.0


@dataclass
class Structure:
    """Affine map from free coefficients to the full vector.

    ``full = base + amap @ free``; free entries are copied unchanged.
    """

    names: list
    free: np.ndarray
    base: np.ndarray
    amap: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)

    @property
    def n_free(self):
        return int(self.free.size)

    @property
    def fixed(self):
        mask = np.ones(len(self.names), dtype=bool)
        mask[self.free] = False
        return mask

    def expand(self, free):
        return self.base + self.amap @ np.asarray(free, dtype=float)

    def project(self, full):
        """Free subvector of a full vector, clamped into the bounds."""
        full = np.asarray(full, dtype=float)
        return np.clip(full[self.free], self.lower[self.free], self.upper[self.free])

    def within_bounds(self, full):
        return bool(np.all(full >= self.lower) and np.all(full <= self.upper))


def build_structure(spec, constraints=None):
    """Canonical names and the free-to-full coefficient map.

    Raises
    ------
    SpecificationError
        On dimension mismatches, ties pointing at fixed coefficients (which
        covers chains and cycles), bounds with ``lower > upper``, fixed
        values outside their bounds or unusable special structures.
    """
    constraints = constraints or ConstraintSpec()
    names = list(spec.layout.names)
    n = len(names)
    fix_value = _full_vector(constraints.fix_value, names, np.nan, "fix_value")
    fix_other = _tie_matrix(constraints.fix_other, names)
    lower_specials(spec, list(constraints.special or ()), fix_value, fix_other)
    lower = _full_vector(constraints.lower, names, -np.inf, "lower")
    upper = _full_vector(constraints.upper, names, np.inf, "upper")
    if np.any(lower > upper):
        bad = names[int(np.argmax(lower > upper))]
        raise SpecificationError(f"lower bound exceeds upper bound for {bad!r}")

    tied = ~np.all(np.isnan(fix_other), axis=1)
    fixed = ~np.isnan(fix_value) | tied
    free = np.flatnonzero(~fixed)
    for i in np.flatnonzero(tied):
        refs = np.flatnonzero(~np.isnan(fix_other[i]))
        if np.any(fixed[refs]):
            raise SpecificationError(
                f"{names[i]!r} is tied to a coefficient that is itself fixed; chained or cyclic ties are not allowed"
            )
    pos = {j: c for c, j in enumerate(free)}
    base = np.zeros(n)
    amap = np.zeros((n, free.size))
    for j in free:
        amap[j, pos[j]] = 1.0
    for i in np.flatnonzero(fixed):
        base[i] = 0.0 if np.isnan(fix_value[i]) else fix_value[i]
        for j in np.flatnonzero(~np.isnan(fix_other[i])):
            amap[i, pos[j]] = fix_other[i, j]
        if not tied[i] and not lower[i] <= base[i] <= upper[i]:
            raise SpecificationError(f"fixed value of {names[i]!r} lies outside its bounds")
    return Structure(names, free, base, amap, lower, upper, constraints)


class Objective:
    """Negative log-likelihood over the free coefficients."""

    def __init__(self, problem, structure):
        self.problem = problem
        self.structure = structure

    def loglik(self, free):
        return self.problem.loglik(self.structure.expand(free))

    def __call__(self, free):
        full = self.structure.expand(free)
        if not self.structure.within_bounds(full):
            return np.inf
        ll = self.problem.loglik(full)
        return -ll if np.isfinite(ll) else np.inf


def negative_objective(spec, free, y, x=None, constraints=None, lik_skip=0):
    """Negative log-likelihood at a free coefficient vector; ``+inf`` on failure."""
    structure = build_structure(spec, constraints)
    return Objective(FilterProblem(spec, y, x, lik_skip), structure)(free)


def start_values(spec, y):
    """Link-space start values per distribution parameter."""
    return links.forward(np.asarray(dist_start(spec.distr, y), dtype=float), spec.link_kinds)


def grid_start(spec, structure, y, x=None, lik_skip=0, problem=None):
    """Best free start vector over the default grid.

    Every time-varying parameter takes score coefficient in {0, 0.05} and
    autoregressive coefficient in {0, 0.5, 0.9}; the intercept is set so the
    long-term value equals the link-transformed start value, regression
    coefficients are 0 and static levels sit at their start values.

    Returns
    -------
    free : ndarray
    loglik : float

    Raises
    ------
    EstimationStartError
        If no grid point has a finite likelihood.
    """
    problem = problem or FilterProblem(spec, y, x, lik_skip)
    objective = Objective(problem, structure)
    layout = spec.layout
    init = start_values(spec, y)
    base = np.zeros(len(layout))
    for i, pos in layout.static.items():
        base[pos] = init[i]
    tv = spec.tv_index
    best, best_val, seen = None, np.inf, set()
    for combo in itertools.product(itertools.product(GRID_ALPHA, GRID_PHI), repeat=spec.n_tv):
        full = base.copy()
        for i, (a, ph) in enumerate(combo):
            level = init[tv[i]]
            full[layout.omega[i]] = level * (1.0 - ph) if spec.regress == "joint" and len(layout.phi[i]) else level
            if len(layout.alpha[i]):
                full[layout.alpha[i][0]] = a
            if len(layout.phi[i]):
                full[layout.phi[i][0]] = ph
        free = structure.project(full)
        key = free.tobytes()
        if key in seen:
            continue
        seen.add(key)
        val = objective(free)
        if val < best_val:
            best, best_val = free, val
    if best is None:
        raise EstimationStartError("no starting grid point yields a finite likelihood")
    return best, -best_val


def info_criteria(loglik, k, t_eff=None):
    """Akaike and Bayesian information criteria.

    Parameters
    ----------
    loglik : float
    k : int
        Number of free coefficients.
    t_eff : int, optional
        Number of likelihood terms; BIC is NaN when omitted.

    Returns
    -------
    aic, bic : float
    """
    aic = 2.0 * k - 2.0 * loglik
    if t_eff is None:
        return aic, np.nan
    if t_eff < 1:
        raise ValueError("t_eff must be at least 1")
    return aic, k * np.log(t_eff) - 2.0 * loglik


@dataclass
class Inference:
    vcov: np.ndarray
    sd: np.ndarray
    z: np.ndarray
    p: np.ndarray
    degenerate: bool
    ok: bool


def z_and_p(estimate, sd):
    """Z statistics and two-sided normal p-values; NaN where sd is 0 or missing."""
    estimate = np.asarray(estimate, dtype=float)
    sd = np.asarray(sd, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, estimate / sd, np.nan)
    p = special.erfc(np.abs(z) / np.sqrt(2.0))
    return z, p


def infer(coef, hessian, amap=None):
    """Covariance, standard errors and tests from a log-likelihood Hessian.

    Parameters
    ----------
    coef : array (n,)
        Full coefficient vector.
    hessian : array (k, k)
        Hessian of the log-likelihood over the free coordinates.
    amap : array (n, k), optional
        Linear part of the free-to-full map; identity when omitted.

    Returns
    -------
    Inference
        ``degenerate`` is set when ``-hessian`` is not positive definite and a
        pseudo-inverse (cutoff ``1e-10`` times the largest eigenvalue) was
        used; ``ok`` is False when the Hessian has non-finite entries.
    """
    coef = np.asarray(coef, dtype=float)
    hessian = np.atleast_2d(np.asarray(hessian, dtype=float))
    k = hessian.shape[0]
    amap = np.eye(k) if amap is None else np.asarray(amap, dtype=float)
    n = amap.shape[0]
    if not np.all(np.isfinite(hessian)):
        nan = np.full(n, np.nan)
        return Inference(np.full((n, n), np.nan), nan, nan.copy(), nan.copy(), True, False)
    degenerate = False
    if k:
        w, v = np.linalg.eigh(-0.5 * (hessian + hessian.T))
        cut = 1e-10 * max(w.max(), 0.0)
        keep = w > cut
        degenerate = not bool(np.all(keep)) or w.max() <= 0
        inv_w = np.zeros_like(w)
        inv_w[keep] = 1.0 / w[keep]
        vcov_free = (v * inv_w) @ v.T
    else:
        vcov_free = np.zeros((0, 0))
    vcov = amap @ vcov_free @ amap.T
    vcov = 0.5 * (vcov + vcov.T)
    diag = np.diag(vcov)
    pure_fixed = ~np.any(amap != 0, axis=1)
    sd = np.where(pure_fixed, 0.0, np.where(diag > 0, np.sqrt(np.maximum(diag, 0.0)), np.nan))
    z, p = z_and_p(coef, sd)
    return Inference(vcov, sd, z, p, degenerate, True)


@dataclass
class EstimationResult:
    """Fitted model with inference and diagnostics.

    Attributes
    ----------
    spec : ModelSpec
    constraints : ConstraintSpec
    structure : Structure
    coef_est : CoefSet
    coef_vcov : ndarray or None
        None when the Hessian was not computed or failed.
    coef_sd, z_stat, p_value : ndarray
    filter : FilterOutput
    loglik, aic, bic : float
    k : int
        Number of free coefficients.
    t_eff : int
        Number of likelihood terms used.
    optim : dict
        ``evaluations``, ``converged``, ``message``, ``start``,
        ``start_loglik``, ``degenerate`` and ``hessian_ok``.
    y, x, lik_skip
        The data the model was fitted to.
    options : dict
        Optimizer settings, reused by the bootstrap.
    """

    spec: ModelSpec
    constraints: ConstraintSpec
    structure: Structure
    coef_est: CoefSet
    coef_vcov: np.ndarray | None
    coef_sd: np.ndarray
    z_stat: np.ndarray
    p_value: np.ndarray
    filter: object
    loglik: float
    aic: float
    bic: float
    k: int
    t_eff: int
    optim: dict
    y: np.ndarray
    x: object
    lik_skip: int
    options: dict

    @property
    def coef_names(self):
        return self.coef_est.names

    def summary(self):
        """Human-readable coefficient table and fit statistics."""
        d = self.spec.distr
        lines = [
            f"Score-driven model: {d.label} distribution / {d.parametrization} parametrization / "
            f"{self.spec.scaling} scaling / {self.spec.regress} regression",
            "",
            "Coefficients:",
        ]
        width = max(len(n) for n in self.coef_names) if self.coef_names else 4
        header = f"{'':{width}} {'Estimate':>14} {'Std. Error':>14} {'Z-Test':>12} {'Pr(>|Z|)':>12}"
        lines.append(header)
        for i, name in enumerate(self.coef_names):
            cells = [_fmt7(self.coef_est.values[i]), _fmt7(self.coef_sd[i]),
                     _fmt7(self.z_stat[i]), _fmt7(self.p_value[i])]
            lines.append(f"{name:{width}} {cells[0]:>14} {cells[1]:>14} {cells[2]:>12} {cells[3]:>12}")
        lines.append("")
        lines.append(f"Log-Likelihood: {self.loglik:.7g}, AIC: {self.aic:.7g}, BIC: {self.bic:.7g}")
        if not self.optim["converged"]:
            lines.append("Warning: the optimizer stopped before reaching its tolerance.")
        if self.optim.get("degenerate"):
            lines.append("Warning: the Hessian is singular; standard errors use a pseudo-inverse.")
        return "\n".join(lines)

    def __str__(self):
        return self.summary()


def _fmt7(v):
    return "NA" if not np.isfinite(v) else f"{v:.7g}"


def resolve_lik_skip(spec, lik_skip):
    if lik_skip in ("conditional", "cond"):
        return spec.n_init
    return int(lik_skip)


def estimate(y, spec, x=None, constraints=None, lik_skip=0, coef_start=None, max_eval=1_000_000,
             xtol=1e-10, hessian=True, progress=False):
    """Fit a score-driven model by maximum likelihood.

    Parameters
    ----------
    y : array_like (T,)
        Observations; NaN marks missing values.
    spec : ModelSpec
    x : array_like or list, optional
        Regressors, see :class:`scoredriven.dynamics.FilterProblem`.
    constraints : ConstraintSpec, optional
    lik_skip : int or "conditional"
        Leading likelihood terms to drop; "conditional" drops the
        initialization rows.
    coef_start : array_like, optional
        Start vector, full length or free length. Bypasses the grid.
    max_eval : int
        Optimizer evaluation budget.
    xtol : float
        Optimizer simplex tolerance.
    hessian : bool
        Compute the Hessian and inference. When False, standard errors
        are NaN.
    progress : bool
        Report the objective on standard error every 1000 evaluations.

    Returns
    -------
    EstimationResult
    """
    y = np.asarray(y, dtype=float).ravel()
    constraints = constraints or ConstraintSpec()
    lik_skip = resolve_lik_skip(spec, lik_skip)
    if "random_walk" in (constraints.special or ()) and spec.par_init is None:
        init = start_values(spec, y)
        spec = spec.replace(par_init=tuple(float(v) for v in init[spec.tv_index]))
    structure = build_structure(spec, constraints)
    problem = FilterProblem(spec, y, x, lik_skip)
    objective = Objective(problem, structure)

    if coef_start is not None:
        cs = np.asarray(coef_start, dtype=float).ravel()
        if cs.size == len(structure.names):
            cs = cs[structure.free]
        elif cs.size != structure.n_free:
            raise SpecificationError(
                f"coef_start must have {len(structure.names)} or {structure.n_free} entries"
            )
        start_free = cs
        start_val = objective(start_free)
        if not np.isfinite(start_val):
            raise EstimationStartError("the likelihood is not finite at coef_start")
        start_ll = -start_val
    else:
        start_free, start_ll = grid_start(spec, structure, y, x, lik_skip, problem)

    callback = None
    if progress:
        def callback(nfev, fbest, _last=[0]):
            if nfev - _last[0] >= 1000:
                _last[0] = nfev
                print(f"evaluations {nfev}: log-likelihood {-fbest:.10g}", file=sys.stderr)

    lo, hi = structure.lower[structure.free], structure.upper[structure.free]
    opt = minimize(objective, start_free, lo, hi, max_eval=max_eval, xtol=xtol, callback=callback)
    if not opt.converged and structure.n_free:
        warnings.warn(f"optimizer stopped after {opt.nfev} evaluations: {opt.message}", ConvergenceWarning,
                      stacklevel=2)
    full = structure.expand(opt.x)
    fout = problem.run(full)
    loglik = fout.loglik_sum

    if hessian:
        hess = numeric_hessian(objective.loglik, opt.x)
        inf = infer(full, hess, structure.amap)
    else:
        nan = np.full(len(full), np.nan)
        inf = Inference(None, nan, nan.copy(), nan.copy(), False, False)
    k = structure.n_free
    t_eff = fout.n_used
    aic, bic = info_criteria(loglik, k, t_eff if t_eff >= 1 else None)
    optim = dict(evaluations=opt.nfev, converged=opt.converged, message=opt.message,
                 start=structure.expand(start_free), start_loglik=start_ll,
                 degenerate=inf.degenerate, hessian_ok=inf.ok)
    return EstimationResult(
        spec=spec, constraints=constraints, structure=structure,
        coef_est=CoefSet(full, list(structure.names)),
        coef_vcov=inf.vcov if inf.ok else None, coef_sd=inf.sd, z_stat=inf.z, p_value=inf.p,
        filter=fout, loglik=loglik, aic=aic, bic=bic, k=k, t_eff=t_eff, optim=optim,
        y=y, x=x, lik_skip=lik_skip, options=dict(max_eval=max_eval, xtol=xtol),
    )


def fit(y, distr, x=None, param=None, constraints=None, lik_skip=0, coef_start=None,
        max_eval=1_000_000, xtol=1e-10, hessian=True, progress=False, **model):
    """Build a :class:`ModelSpec` (regressor counts taken from ``x``) and estimate it.

    Extra keyword arguments (``scaling``, ``regress``, ``p``, ``q``,
    ``par_static``, ``par_link``, ``par_init``) go to :meth:`ModelSpec.build`.
    """
    if x is not None and "m" not in model:
        probe = ModelSpec.build(distr, param, par_static=model.get("par_static"))
        m = np.zeros(probe.distr.param_count, dtype=int)
        m[probe.tv_index] = infer_m(x, probe.n_tv)
        model["m"] = m
    spec = ModelSpec.build(distr, param, **model)
    return estimate(y, spec, x, constraints, lik_skip, coef_start, max_eval, xtol, hessian, progress)
