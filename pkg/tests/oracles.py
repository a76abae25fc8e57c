"""Independent reference densities built on scipy.stats.

Each entry maps our natural parametrization onto a frozen scipy.stats
distribution, so log densities, moments and draws used as test oracles do
not share code with the package.
"""

import numpy as np
from scipy import stats


def _nb2(m, a):
    r = 1.0 / a
    return stats.nbinom(r, r / (r + m))


def _skellam(m, v):
    return stats.skellam(0.5 * (v + m), 0.5 * (v - m))


def _t(m, v, n):
    return stats.t(n, loc=m, scale=np.sqrt(v * (n - 2.0) / n))


FROZEN = {
    "bernoulli": lambda p: stats.bernoulli(p),
    "exp": lambda s: stats.expon(scale=s),
    "gamma": lambda s, k: stats.gamma(k, scale=s),
    "geom": lambda m: stats.geom(1.0 / (1.0 + m), loc=-1),
    "laplace": lambda m, s: stats.laplace(loc=m, scale=s),
    "negbin": _nb2,
    "norm": lambda m, v: stats.norm(loc=m, scale=np.sqrt(v)),
    "pois": lambda m: stats.poisson(m),
    "skellam": _skellam,
    "t": _t,
    "vonmises": lambda m, k: stats.vonmises(k, loc=m),
    "weibull": lambda s, k: stats.weibull_min(k, scale=s),
}

DISCRETE = {"bernoulli", "geom", "negbin", "pois", "skellam"}


def frozen(label, theta):
    return FROZEN[label](*np.asarray(theta, dtype=float))


def logdensity(label, y, theta):
    dist = frozen(label, theta)
    if label == "vonmises":
        # scipy wraps to (-pi, pi] around loc; the density is periodic
        y = np.angle(np.exp(1j * (np.asarray(y) - theta[0]))) + theta[0]
    return dist.logpmf(y) if label in DISCRETE else dist.logpdf(y)


def draw(label, theta, n, rng):
    return np.asarray(frozen(label, theta).rvs(size=n, random_state=rng), dtype=float)


def random_point(label, rng):
    """A random interior parameter vector in natural space.

    The t degrees of freedom stay above 5 so fourth moments of the score
    exist and Monte-Carlo standard errors are meaningful.
    """
    u = rng.uniform
    if label == "bernoulli":
        return np.array([u(0.05, 0.95)])
    if label in ("exp",):
        return np.array([u(0.2, 5.0)])
    if label in ("gamma", "weibull"):
        return np.array([u(0.2, 5.0), u(0.5, 5.0)])
    if label == "geom":
        return np.array([u(0.2, 10.0)])
    if label == "laplace":
        return np.array([u(-3.0, 3.0), u(0.2, 3.0)])
    if label == "negbin":
        return np.array([u(0.2, 10.0), u(0.05, 2.0)])
    if label == "norm":
        return np.array([u(-3.0, 3.0), u(0.2, 5.0)])
    if label == "pois":
        return np.array([u(0.2, 20.0)])
    if label == "skellam":
        m = u(-3.0, 3.0)
        return np.array([m, abs(m) + u(0.2, 5.0)])
    if label == "t":
        return np.array([u(-3.0, 3.0), u(0.2, 5.0), u(5.0, 30.0)])
    if label == "vonmises":
        return np.array([u(-np.pi, np.pi), u(0.2, 10.0)])
    raise KeyError(label)


LABELS = sorted(FROZEN)
