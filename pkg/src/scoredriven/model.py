"""Model specification and coefficient layout.

Coefficients are ordered block-wise: for every time-varying parameter (in
distribution order) its intercept, regression, score and autoregressive
coefficients; then one level coefficient per static parameter.
"""

from dataclasses import dataclass, field

import numpy as np

from .distributions import get_distribution, links
from .errors import SpecificationError

SCALINGS = (
    "unit",
    "fisher_inv",
    "fisher_inv_sqrt",
    "full_fisher_inv",
    "full_fisher_inv_sqrt",
    "diag_fisher_inv",
    "diag_fisher_inv_sqrt",
)
REGRESS = ("joint", "sep")


def _per_param(value, n, name, dtype=int):
    if value is None:
        return None
    arr = np.atleast_1d(np.asarray(value, dtype=dtype))
    if arr.size == 1:
        arr = np.repeat(arr, n)
    if arr.size != n:
        raise SpecificationError(f"{name} must have one entry per parameter ({n}), got {arr.size}")
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Everything defining a score-driven model except coefficient values."""

    distr: object
    scaling: str
    regress: str
    p: tuple
    q: tuple
    par_static: tuple
    par_link: tuple
    m: tuple
    par_init: tuple | None = None
    link_kinds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.distr
        n = d.param_count
        for name in ("p", "q", "par_static", "par_link", "m"):
            if len(getattr(self, name)) != n:
                raise SpecificationError(f"{name} must have {n} entries")
        if self.scaling not in SCALINGS:
            raise SpecificationError(f"unknown scaling {self.scaling!r}; choose from {SCALINGS}")
        if self.regress not in REGRESS:
            raise SpecificationError(f"unknown regress {self.regress!r}; choose from {REGRESS}")
        for i in range(n):
            if d.static_only[i] and not self.par_static[i]:
                raise SpecificationError(f"parameter {d.param_names[i]!r} of {d.label} must be static")
            if min(self.p[i], self.q[i], self.m[i]) < 0:
                raise SpecificationError("orders and regressor counts must be non-negative")
            if self.par_static[i] and (self.p[i] or self.q[i] or self.m[i]):
                raise SpecificationError(f"static parameter {d.param_names[i]!r} cannot have dynamics")
        if self.par_init is not None and len(self.par_init) != self.n_tv:
            raise SpecificationError("par_init must have one value per time-varying parameter")
        object.__setattr__(self, "link_kinds", links.link_kinds(d.param_supports, list(self.par_link)))

    @classmethod
    def build(cls, distr, param=None, scaling="unit", regress="joint", p=1, q=1,
              par_static=None, par_link=None, par_init=None, m=0):
        """Resolve defaults the way the estimation entry points do.

        By default the first parameter is time-varying and the rest static,
        and links are applied to time-varying positive or unit-interval
        parameters only.
        """
        d = get_distribution(distr, param)
        n = d.param_count
        if par_static is None:
            par_static = np.array([i > 0 for i in range(n)])
        par_static = _per_param(par_static, n, "par_static", bool)
        if par_link is None:
            par_link = np.array(d.default_links) & ~par_static
        par_link = _per_param(par_link, n, "par_link", bool)
        p = np.where(par_static, 0, _per_param(p, n, "p"))
        q = np.where(par_static, 0, _per_param(q, n, "q"))
        m = np.where(par_static, 0, _per_param(m, n, "m"))
        if par_init is not None:
            init = np.asarray(par_init, dtype=float).ravel()
            if init.size == n and n != int(np.sum(~par_static)):
                init = init[~par_static]
            par_init = tuple(float(v) for v in init)
        return cls(d, scaling, regress, tuple(int(v) for v in p), tuple(int(v) for v in q),
                   tuple(bool(v) for v in par_static), tuple(bool(v) for v in par_link),
                   tuple(int(v) for v in m), par_init)

    def replace(self, **changes):
        kw = dict(distr=self.distr, scaling=self.scaling, regress=self.regress, p=self.p,
                  q=self.q, par_static=self.par_static, par_link=self.par_link, m=self.m,
                  par_init=self.par_init)
        kw.update(changes)
        return ModelSpec(**kw)

    @property
    def tv_index(self):
        return np.array([i for i, s in enumerate(self.par_static) if not s], dtype=np.intp)

    @property
    def n_tv(self):
        return int(len(self.par_static) - sum(self.par_static))

    @property
    def n_init(self):
        """Number of initial rows set to the initialization values."""
        return max([max(self.p[i], self.q[i]) for i in self.tv_index], default=0)

    @property
    def param_labels(self):
        """Parameter names wrapped in their link function, e.g. ``log(mean)``."""
        return [links.wrap_name(n, k) for n, k in zip(self.distr.param_names, self.link_kinds)]

    @property
    def layout(self):
        return CoefLayout(self)

    def describe(self):
        d = self.distr
        return f"{d.label}/{d.parametrization}, {self.scaling} scaling, {self.regress} regression"


class CoefLayout:
    """Positions and canonical names of every coefficient."""

    def __init__(self, spec):
        self.spec = spec
        names = []
        self.omega = []
        self.beta = []
        self.alpha = []
        self.phi = []
        labels = spec.param_labels
        for i in spec.tv_index:
            lab = labels[i]
            self.omega.append(len(names))
            names.append(f"{lab}_omega")
            blocks = (("beta", spec.m[i], self.beta), ("alpha", spec.p[i], self.alpha),
                      ("phi", spec.q[i], self.phi))
            for block, count, store in blocks:
                start = len(names)
                names.extend(f"{lab}_{block}{j + 1}" for j in range(count))
                store.append(np.arange(start, len(names)))
        self.static = {}
        for i, s in enumerate(spec.par_static):
            if s:
                self.static[i] = len(names)
                names.append(labels[i])
        self.names = names
        self.omega = np.array(self.omega, dtype=np.intp)

    def __len__(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise SpecificationError(f"unknown coefficient {name!r}; known: {self.names}") from None

    def unpack(self, coef):
        """Split a full coefficient vector into recursion arrays."""
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (len(self.names),):
            raise SpecificationError(f"expected {len(self.names)} coefficients, got shape {coef.shape}")
        spec = self.spec
        k = spec.n_tv
        pmax = max([len(a) for a in self.alpha], default=0)
        qmax = max([len(a) for a in self.phi], default=0)
        alpha = np.zeros((k, max(pmax, 1)))
        phi = np.zeros((k, max(qmax, 1)))
        for i in range(k):
            alpha[i, :len(self.alpha[i])] = coef[self.alpha[i]]
            phi[i, :len(self.phi[i])] = coef[self.phi[i]]
        static = np.zeros(spec.distr.param_count)
        for i, pos in self.static.items():
            static[i] = coef[pos]
        return Blocks(coef[self.omega] if k else np.zeros(0),
                      [coef[b] for b in self.beta], alpha, phi, static)


@dataclass
class Blocks:
    omega: np.ndarray
    beta: list
    alpha: np.ndarray
    phi: np.ndarray
    static: np.ndarray


@dataclass
class CoefSet:
    """A full coefficient vector with its canonical names."""

    values: np.ndarray
    names: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != len(self.names):
            raise SpecificationError("coefficient values and names differ in length")

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])


def normalize_x(spec, x, t):
    """Per time-varying parameter regressor matrices of shape (t, m_i)."""
    k = spec.n_tv
    ms = [spec.m[i] for i in spec.tv_index]
    if x is None:
        if any(ms):
            raise SpecificationError("model has regressors but no x was supplied")
        return [np.zeros((t, 0)) for _ in range(k)]
    if isinstance(x, (list, tuple)):
        if len(x) != k:
            raise SpecificationError(f"x must hold one matrix per time-varying parameter ({k})")
        mats = [np.zeros((t, 0)) if xi is None else np.asarray(xi, dtype=float) for xi in x]
    else:
        mats = [np.asarray(x, dtype=float)] * k
    out = []
    for xi, mi in zip(mats, ms):
        xi = xi.reshape(t, -1) if xi.ndim == 1 else xi
        if xi.shape[0] != t:
            raise SpecificationError(f"regressors have {xi.shape[0]} rows, expected {t}")
        if mi == 0:
            xi = np.zeros((t, 0))
        elif xi.shape[1] != mi:
            raise SpecificationError(f"regressors have {xi.shape[1]} columns, expected {mi}")
        out.append(np.ascontiguousarray(xi))
    return out


def infer_m(x, n_tv):
    """Regressor counts implied by an ``x`` argument."""
    if x is None:
        return [0] * n_tv
    if isinstance(x, (list, tuple)):
        return [0 if xi is None else (1 if np.ndim(xi) == 1 else np.shape(xi)[1]) for xi in x]
    x = np.asarray(x)
    return [1 if x.ndim == 1 else x.shape[1]] * n_tv
