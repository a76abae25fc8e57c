from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SUPPORTS = ("real", "positive", "unit-interval", "circular")
DATA_TYPES = ("binary", "count", "integer", "real", "duration", "circular")


@dataclass(frozen=True)
class DistributionDescriptor:
    """Metadata and function table for one distribution/parametrization pair.

    Every function is vectorized: parameter arrays carry the parameter axis
    last, observations broadcast against the remaining axes.
    """

    label: str
    parametrization: str
    data_type: str
    param_names: tuple
    param_supports: tuple
    orthogonal: bool
    kernel_id: int
    loglik: Callable = field(repr=False)
    score: Callable = field(repr=False)
    fisher: Callable = field(repr=False)
    mean: Callable = field(repr=False)
    var: Callable = field(repr=False)
    random: Callable = field(repr=False)
    start: Callable = field(repr=False)
    valid_y: Callable = field(repr=False)
    static_only: tuple = ()
    lower: tuple = ()
    extra_support: Callable | None = field(default=None, repr=False)
    dim_kind: str = "univariate"

    def __post_init__(self):
        if len(self.param_names) != len(self.param_supports):
            raise ValueError("param_names and param_supports differ in length")
        if self.data_type not in DATA_TYPES:
            raise ValueError(f"unknown data type {self.data_type!r}")
        for s in self.param_supports:
            if s not in SUPPORTS:
                raise ValueError(f"unknown support {s!r}")
        n = len(self.param_names)
        if not self.static_only:
            object.__setattr__(self, "static_only", (False,) * n)
        if not self.lower:
            object.__setattr__(self, "lower", (0.0,) * n)

    @property
    def param_count(self):
        return len(self.param_names)

    @property
    def default_links(self):
        return tuple(s in ("positive", "unit-interval") for s in self.param_supports)

    @property
    def discrete(self):
        return self.data_type in ("binary", "count", "integer")

    def in_support(self, f):
        """Boolean array, True where the parameter vector is admissible."""
        f = np.asarray(f, dtype=float)
        ok = np.ones(f.shape[:-1], dtype=bool)
        for i, s in enumerate(self.param_supports):
            v = f[..., i]
            if s in ("real", "circular"):
                ok &= np.isfinite(v)
            elif s == "positive":
                ok &= (v > self.lower[i]) & np.isfinite(v)
            else:
                ok &= (v > 0.0) & (v < 1.0)
        if self.extra_support is not None:
            with np.errstate(invalid="ignore"):
                ok &= self.extra_support(f)
        return ok

    def __reduce__(self):
        # pickle by registry key; function tables hold lambdas
        return (_lookup, (self.label, self.parametrization))


def _lookup(label, parametrization):
    return _REGISTRY[(label, parametrization)]


_REGISTRY: dict = {}


def register(descriptor):
    key = (descriptor.label, descriptor.parametrization)
    if key in _REGISTRY:
        raise ValueError(f"distribution {key} already registered")
    _REGISTRY[key] = descriptor
    return descriptor


def registry():
    return dict(_REGISTRY)
