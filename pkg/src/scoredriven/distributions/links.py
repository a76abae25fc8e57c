"""Link functions mapping constrained parameters onto the real line.

Positive parameters use the logarithm and unit-interval parameters the
logit. Real and circular parameters have no link.
"""

import numpy as np

from ..errors import SpecificationError

IDENTITY, LOG, LOGIT = 0, 1, 2

_KIND_BY_SUPPORT = {"positive": LOG, "unit-interval": LOGIT}
_PREFIX = {LOG: "log", LOGIT: "logit"}


def link_kinds(supports, mask):
    """Integer link code per parameter (0 identity, 1 log, 2 logit)."""
    if len(mask) != len(supports):
        raise SpecificationError(
            f"link mask has length {len(mask)}, expected {len(supports)}"
        )
    kinds = []
    for support, on in zip(supports, mask):
        if not on:
            kinds.append(IDENTITY)
        elif support in _KIND_BY_SUPPORT:
            kinds.append(_KIND_BY_SUPPORT[support])
        else:
            raise SpecificationError(f"no link function for a {support} parameter")
    return np.array(kinds, dtype=np.intc)


def wrap_name(name, kind):
    return f"{_PREFIX[kind]}({name})" if kind in _PREFIX else name


def forward(p, kinds):
    """Natural -> link space; ``p`` has the parameter axis last."""
    p = np.asarray(p, dtype=float)
    q = np.array(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, kind in enumerate(kinds):
            if kind == LOG:
                q[..., i] = np.log(p[..., i])
            elif kind == LOGIT:
                q[..., i] = np.log(p[..., i]) - np.log1p(-p[..., i])
    return q


def inverse(q, kinds):
    """Link -> natural space; ``q`` has the parameter axis last."""
    q = np.asarray(q, dtype=float)
    p = np.array(q, dtype=float)
    with np.errstate(over="ignore"):
        for i, kind in enumerate(kinds):
            if kind == LOG:
                p[..., i] = np.exp(q[..., i])
            elif kind == LOGIT:
                p[..., i] = 1.0 / (1.0 + np.exp(-q[..., i]))
    return p


def jacobian(p, kinds):
    """Diagonal of d(natural)/d(link) evaluated at natural values ``p``."""
    p = np.asarray(p, dtype=float)
    jac = np.ones_like(p)
    for i, kind in enumerate(kinds):
        if kind == LOG:
            jac[..., i] = p[..., i]
        elif kind == LOGIT:
            jac[..., i] = p[..., i] * (1.0 - p[..., i])
    return jac
