"""Distribution registry and per-distribution utility functions.

All functions take a :class:`DistributionDescriptor` (or a ``(label, param)``
lookup via :func:`get_distribution`) and natural-scale parameters ``f``
with the parameter axis last.
"""

import numpy as np

from ..errors import DomainError, SpecificationError
from . import families  # noqa: F401  (registers the shipped families)
from . import links
from ._registry import DistributionDescriptor, register, registry

__all__ = [
    "DistributionDescriptor",
    "register",
    "list_distributions",
    "get_distribution",
    "density",
    "loglik",
    "dist_mean",
    "dist_variance",
    "score",
    "fisher",
    "random",
    "start",
    "link_apply",
    "link_inverse",
]

_DEFAULT_PARAM = {}
for _d in registry().values():
    _DEFAULT_PARAM.setdefault(_d.label, _d.parametrization)


def list_distributions(filter_type=None, filter_default=None):
    """Registered descriptors, sorted by label then parametrization.

    Parameters
    ----------
    filter_type : str, optional
        Keep only descriptors with this data type.
    filter_default : bool, optional
        Keep only default (True) or non-default (False) parametrizations.
    """
    out = []
    for key in sorted(registry()):
        d = registry()[key]
        if filter_type is not None and d.data_type != filter_type:
            continue
        is_default = _DEFAULT_PARAM.get(d.label) == d.parametrization
        if filter_default is not None and bool(filter_default) != is_default:
            continue
        out.append(d)
    return out


def get_distribution(distr, param=None):
    if isinstance(distr, DistributionDescriptor):
        return distr
    if param is None:
        param = _DEFAULT_PARAM.get(distr)
    try:
        return registry()[(distr, param)]
    except KeyError:
        raise SpecificationError(f"unknown distribution {distr!r} / {param!r}") from None


def _params(d, f, closed=False):
    f = np.asarray(f, dtype=float)
    if f.shape[-1:] != (d.param_count,):
        raise DomainError(f"{d.label} expects {d.param_count} parameters, got shape {f.shape}")
    ok = d.in_support(f)
    if closed and not np.all(ok):
        # degenerate unit-interval end points are allowed for sampling
        g = np.array(f)
        for i, s in enumerate(d.param_supports):
            if s == "unit-interval":
                g[..., i] = np.where((g[..., i] == 0.0) | (g[..., i] == 1.0), 0.5, g[..., i])
        ok = d.in_support(g)
    if not np.all(ok):
        raise DomainError(f"parameters outside the support of {d.label}/{d.parametrization}")
    return f


def _check_y(d, y):
    y = np.asarray(y, dtype=float)
    valid = d.valid_y(y)
    if not d.discrete and not np.all(valid):
        raise DomainError(f"observation outside the sample space of {d.label}")
    return y, valid


def loglik(d, y, f):
    """Log density (or log mass); -inf where a discrete mass is zero."""
    d = get_distribution(d)
    f = _params(d, f)
    y, _ = _check_y(d, y)
    return d.loglik(y, f)[()]


def density(d, y, f):
    return np.exp(loglik(d, y, f))


def dist_mean(d, f):
    d = get_distribution(d)
    return d.mean(_params(d, f))[()]


def dist_variance(d, f):
    d = get_distribution(d)
    v = d.var(_params(d, f))
    if np.any(np.isnan(v)):
        raise DomainError(f"variance of {d.label} undefined at these parameters")
    return v[()]


def _mask(d, linked):
    if linked is None:
        return np.zeros(d.param_count, dtype=np.intc)
    if np.isscalar(linked):
        linked = [bool(linked)] * d.param_count
    return links.link_kinds(d.param_supports, list(linked))


def score(d, y, f, linked=None):
    """Score vector; components flagged in ``linked`` are in link space."""
    d = get_distribution(d)
    f = _params(d, f)
    y, valid = _check_y(d, y)
    if not np.all(valid):
        raise DomainError(f"observation outside the sample space of {d.label}")
    kinds = _mask(d, linked)
    return d.score(y, f) * links.jacobian(f, kinds)


def fisher(d, f, linked=None):
    """Fisher information matrix, transported to link space where flagged."""
    d = get_distribution(d)
    f = _params(d, f)
    kinds = _mask(d, linked)
    jac = links.jacobian(f, kinds)
    return d.fisher(f) * jac[..., :, None] * jac[..., None, :]


def random(d, f, n, seed=None):
    """``n`` i.i.d. draws at parameter vector ``f``."""
    d = get_distribution(d)
    f = _params(d, f, closed=True)
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.empty(0)
    return d.random(np.broadcast_to(f, (n, d.param_count)), rng)


def start(d, y):
    """Moment-style starting parameter values, clamped into the open support."""
    d = get_distribution(d)
    y = np.asarray(y, dtype=float).ravel()
    y = y[~np.isnan(y)]
    if y.size == 0:
        raise DomainError("no non-missing observations to derive starting values from")
    return d.start(y)


def link_apply(d, p, mask):
    d = get_distribution(d)
    return links.forward(p, links.link_kinds(d.param_supports, list(mask)))


def link_inverse(d, q, mask):
    d = get_distribution(d)
    return links.inverse(q, links.link_kinds(d.param_supports, list(mask)))
