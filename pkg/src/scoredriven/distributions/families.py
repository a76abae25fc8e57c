"""The shipped distribution families.

Conventions: ``f`` carries the parameter axis last, ``y`` broadcasts against
``f[..., 0]``. ``loglik`` returns -inf for observations outside the sample
space; scores are in natural parametrization; Fisher matrices are the
expected outer product of the natural score.
"""

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaln, i0e, i1e

from .._special import bessel_ratio, digamma, log_bessel_i, trigamma
from ._registry import DistributionDescriptor, register

EULER = 0.57721566490153286061
CLAMP = 1e-6


def _b(y, f):
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    shape = np.broadcast_shapes(y.shape, f.shape[:-1])
    return np.broadcast_to(y, shape), np.broadcast_to(f, shape + f.shape[-1:])


def _masked(valid, value):
    return np.where(valid, value, -np.inf)


def _safe(y, valid, fill=1.0):
    return np.where(valid, y, fill)


def _fisher_diag(*diag):
    diag = np.broadcast_arrays(*diag)
    n = len(diag)
    out = np.zeros(diag[0].shape + (n, n))
    for i, d in enumerate(diag):
        out[..., i, i] = d
    return out


def _valid_binary(y):
    return (y == 0.0) | (y == 1.0)


def _valid_count(y):
    with np.errstate(invalid="ignore"):
        return np.isfinite(y) & (y >= 0.0) & (y == np.floor(y))


def _valid_integer(y):
    with np.errstate(invalid="ignore"):
        return np.isfinite(y) & (y == np.floor(y))


def _valid_real(y):
    return np.isfinite(y)


def _valid_nonneg(y):
    with np.errstate(invalid="ignore"):
        return np.isfinite(y) & (y >= 0.0)


def _valid_pos(y):
    with np.errstate(invalid="ignore"):
        return np.isfinite(y) & (y > 0.0)


def _moments(y):
    y = np.asarray(y, dtype=float)
    return float(np.mean(y)), float(np.mean((y - np.mean(y)) ** 2))


# --- bernoulli / prob -------------------------------------------------------

def _bern_loglik(y, f):
    y, f = _b(y, f)
    p = f[..., 0]
    valid = _valid_binary(y)
    ys = _safe(y, valid, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(ys == 1.0, np.log(p), np.log1p(-p))
    return _masked(valid, ll)


def _bern_score(y, f):
    y, f = _b(y, f)
    p = f[..., 0]
    return ((y - p) / (p * (1.0 - p)))[..., None]


def _bern_fisher(f):
    p = np.asarray(f, dtype=float)[..., 0]
    return _fisher_diag(1.0 / (p * (1.0 - p)))


def _bern_random(f, rng):
    p = np.asarray(f, dtype=float)[..., 0]
    return rng.binomial(1, p).astype(float)


def _bern_start(y):
    return np.array([np.clip(np.mean(y), CLAMP, 1.0 - CLAMP)])


register(DistributionDescriptor(
    label="bernoulli", parametrization="prob", data_type="binary",
    param_names=("prob",), param_supports=("unit-interval",), orthogonal=True,
    kernel_id=0,
    loglik=_bern_loglik, score=_bern_score, fisher=_bern_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 0] * (1.0 - np.asarray(f, dtype=float)[..., 0]),
    random=_bern_random, start=_bern_start, valid_y=_valid_binary,
))


# --- exp / scale ------------------------------------------------------------

def _exp_loglik(y, f):
    y, f = _b(y, f)
    s = f[..., 0]
    valid = _valid_nonneg(y)
    ys = _safe(y, valid)
    return _masked(valid, -np.log(s) - ys / s)


def _exp_score(y, f):
    y, f = _b(y, f)
    s = f[..., 0]
    return ((y - s) / (s * s))[..., None]


def _exp_fisher(f):
    s = np.asarray(f, dtype=float)[..., 0]
    return _fisher_diag(1.0 / (s * s))


register(DistributionDescriptor(
    label="exp", parametrization="scale", data_type="duration",
    param_names=("scale",), param_supports=("positive",), orthogonal=True,
    kernel_id=1,
    loglik=_exp_loglik, score=_exp_score, fisher=_exp_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 0] ** 2,
    random=lambda f, rng: rng.exponential(np.asarray(f, dtype=float)[..., 0]),
    start=lambda y: np.array([max(float(np.mean(y)), CLAMP)]),
    valid_y=_valid_nonneg,
))


# --- gamma / scale ----------------------------------------------------------

def _gamma_loglik(y, f):
    y, f = _b(y, f)
    s, k = f[..., 0], f[..., 1]
    valid = _valid_pos(y)
    ys = _safe(y, valid)
    ll = (k - 1.0) * np.log(ys) - ys / s - gammaln(k) - k * np.log(s)
    return _masked(valid, ll)


def _gamma_score(y, f):
    y, f = _b(y, f)
    s, k = f[..., 0], f[..., 1]
    return np.stack([(y - k * s) / (s * s), np.log(y) - np.log(s) - digamma(k)], axis=-1)


def _gamma_fisher(f):
    f = np.asarray(f, dtype=float)
    s, k = f[..., 0], f[..., 1]
    out = np.empty(s.shape + (2, 2))
    out[..., 0, 0] = k / (s * s)
    out[..., 0, 1] = out[..., 1, 0] = 1.0 / s
    out[..., 1, 1] = trigamma(k)
    return out


def _gamma_start(y):
    m, v = _moments(y)
    m = max(m, CLAMP)
    v = max(v, CLAMP)
    return np.array([v / m, m * m / v])


register(DistributionDescriptor(
    label="gamma", parametrization="scale", data_type="duration",
    param_names=("scale", "shape"), param_supports=("positive", "positive"),
    orthogonal=False, kernel_id=2,
    loglik=_gamma_loglik, score=_gamma_score, fisher=_gamma_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0] * np.asarray(f, dtype=float)[..., 1],
    var=lambda f: np.asarray(f, dtype=float)[..., 0] ** 2 * np.asarray(f, dtype=float)[..., 1],
    random=lambda f, rng: rng.gamma(np.asarray(f, dtype=float)[..., 1], np.asarray(f, dtype=float)[..., 0]),
    start=_gamma_start, valid_y=_valid_pos,
))


# --- geom / mean ------------------------------------------------------------

def _geom_loglik(y, f):
    y, f = _b(y, f)
    m = f[..., 0]
    valid = _valid_count(y)
    ys = _safe(y, valid, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(ys > 0, ys * np.log(m), 0.0) - (ys + 1.0) * np.log1p(m)
    return _masked(valid, ll)


def _geom_score(y, f):
    y, f = _b(y, f)
    m = f[..., 0]
    return ((y - m) / (m * (1.0 + m)))[..., None]


def _geom_fisher(f):
    m = np.asarray(f, dtype=float)[..., 0]
    return _fisher_diag(1.0 / (m * (1.0 + m)))


def _geom_random(f, rng):
    m = np.asarray(f, dtype=float)[..., 0]
    return (rng.geometric(1.0 / (1.0 + m)) - 1).astype(float)


register(DistributionDescriptor(
    label="geom", parametrization="mean", data_type="count",
    param_names=("mean",), param_supports=("positive",), orthogonal=True,
    kernel_id=3,
    loglik=_geom_loglik, score=_geom_score, fisher=_geom_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 0] * (1.0 + np.asarray(f, dtype=float)[..., 0]),
    random=_geom_random,
    start=lambda y: np.array([max(float(np.mean(y)), CLAMP)]),
    valid_y=_valid_count,
))


# --- laplace / meanscale ----------------------------------------------------

def _laplace_loglik(y, f):
    y, f = _b(y, f)
    m, s = f[..., 0], f[..., 1]
    valid = _valid_real(y)
    ys = _safe(y, valid)
    return _masked(valid, -np.log(2.0 * s) - np.abs(ys - m) / s)


def _laplace_score(y, f):
    y, f = _b(y, f)
    m, s = f[..., 0], f[..., 1]
    d = y - m
    return np.stack([np.sign(d) / s, (np.abs(d) - s) / (s * s)], axis=-1)


def _laplace_fisher(f):
    s = np.asarray(f, dtype=float)[..., 1]
    return _fisher_diag(1.0 / (s * s), 1.0 / (s * s))


def _laplace_start(y):
    med = float(np.median(y))
    return np.array([med, max(float(np.mean(np.abs(y - med))), CLAMP)])


register(DistributionDescriptor(
    label="laplace", parametrization="meanscale", data_type="real",
    param_names=("mean", "scale"), param_supports=("real", "positive"),
    orthogonal=True, kernel_id=4,
    loglik=_laplace_loglik, score=_laplace_score, fisher=_laplace_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: 2.0 * np.asarray(f, dtype=float)[..., 1] ** 2,
    random=lambda f, rng: rng.laplace(np.asarray(f, dtype=float)[..., 0], np.asarray(f, dtype=float)[..., 1]),
    start=_laplace_start, valid_y=_valid_real,
))


# --- negbin / nb2 -----------------------------------------------------------

def _nb2_loglik(y, f):
    y, f = _b(y, f)
    m, a = f[..., 0], f[..., 1]
    valid = _valid_count(y)
    ys = _safe(y, valid, 0.0)
    r = 1.0 / a
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = (gammaln(ys + r) - gammaln(r) - gammaln(ys + 1.0)
              - r * np.log1p(a * m)
              + np.where(ys > 0, ys * (np.log(a * m) - np.log1p(a * m)), 0.0))
    return _masked(valid, ll)


def _nb2_score(y, f):
    y, f = _b(y, f)
    m, a = f[..., 0], f[..., 1]
    r = 1.0 / a
    s_m = (y - m) / (m * (1.0 + a * m))
    s_r = digamma(y + r) - digamma(r) - np.log1p(a * m) + (m - y) / (r + m)
    return np.stack([s_m, -r * r * s_r], axis=-1)


def nb2_dispersion_info(m, a):
    """Fisher information of the NB2 dispersion, by summing over the support."""
    r = 1.0 / a
    prob = r / (r + m)
    q = m / (r + m)
    pmf = np.exp(r * np.log(prob))
    cdf = pmf
    total = 0.0
    j = 0
    while True:
        surv = max(1.0 - cdf, 0.0)
        total += surv / ((r + j) ** 2)
        # geometric bound on the remaining tail mass
        if (j > m and pmf * (r + m) / r < 1e-17) or j > 10_000_000:
            break
        pmf *= (j + r) / (j + 1.0) * q
        cdf += pmf
        j += 1
    info_r = total - m / (r * (r + m))
    return info_r * r ** 4


def _nb2_fisher(f):
    f = np.asarray(f, dtype=float)
    m, a = f[..., 0], f[..., 1]
    info_a = np.vectorize(nb2_dispersion_info, otypes=[float])(m, a)
    return _fisher_diag(1.0 / (m * (1.0 + a * m)), info_a)


def _nb2_random(f, rng):
    f = np.asarray(f, dtype=float)
    m, a = f[..., 0], f[..., 1]
    r = 1.0 / a
    return rng.negative_binomial(r, r / (r + m)).astype(float)


def _nb2_start(y):
    m, v = _moments(y)
    m = max(m, CLAMP)
    return np.array([m, max((v - m) / (m * m), CLAMP)])


register(DistributionDescriptor(
    label="negbin", parametrization="nb2", data_type="count",
    param_names=("mean", "dispersion"), param_supports=("positive", "positive"),
    orthogonal=True, kernel_id=5,
    loglik=_nb2_loglik, score=_nb2_score, fisher=_nb2_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: (np.asarray(f, dtype=float)[..., 0]
                   + np.asarray(f, dtype=float)[..., 1] * np.asarray(f, dtype=float)[..., 0] ** 2),
    random=_nb2_random, start=_nb2_start, valid_y=_valid_count,
))


# --- norm / meanvar ---------------------------------------------------------

def _norm_loglik(y, f):
    y, f = _b(y, f)
    m, v = f[..., 0], f[..., 1]
    valid = _valid_real(y)
    ys = _safe(y, valid)
    return _masked(valid, -0.5 * np.log(2.0 * np.pi * v) - 0.5 * (ys - m) ** 2 / v)


def _norm_score(y, f):
    y, f = _b(y, f)
    m, v = f[..., 0], f[..., 1]
    d = y - m
    return np.stack([d / v, 0.5 * (d * d - v) / (v * v)], axis=-1)


def _norm_fisher(f):
    v = np.asarray(f, dtype=float)[..., 1]
    return _fisher_diag(1.0 / v, 0.5 / (v * v))


def _norm_start(y):
    m, v = _moments(y)
    return np.array([m, max(v, CLAMP)])


register(DistributionDescriptor(
    label="norm", parametrization="meanvar", data_type="real",
    param_names=("mean", "var"), param_supports=("real", "positive"),
    orthogonal=True, kernel_id=6,
    loglik=_norm_loglik, score=_norm_score, fisher=_norm_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 1],
    random=lambda f, rng: rng.normal(np.asarray(f, dtype=float)[..., 0], np.sqrt(np.asarray(f, dtype=float)[..., 1])),
    start=_norm_start, valid_y=_valid_real,
))


# --- pois / mean ------------------------------------------------------------

def _pois_loglik(y, f):
    y, f = _b(y, f)
    lam = f[..., 0]
    valid = _valid_count(y)
    ys = _safe(y, valid, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(ys > 0, ys * np.log(lam), 0.0) - lam - gammaln(ys + 1.0)
    return _masked(valid, ll)


def _pois_score(y, f):
    y, f = _b(y, f)
    lam = f[..., 0]
    return (y / lam - 1.0)[..., None]


def _pois_fisher(f):
    return _fisher_diag(1.0 / np.asarray(f, dtype=float)[..., 0])


register(DistributionDescriptor(
    label="pois", parametrization="mean", data_type="count",
    param_names=("mean",), param_supports=("positive",), orthogonal=True,
    kernel_id=7,
    loglik=_pois_loglik, score=_pois_score, fisher=_pois_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 0],
    random=lambda f, rng: rng.poisson(np.asarray(f, dtype=float)[..., 0]).astype(float),
    start=lambda y: np.array([max(float(np.mean(y)), CLAMP)]),
    valid_y=_valid_count,
))


# --- skellam / meanvar ------------------------------------------------------

def _skellam_rates(f):
    m, v = f[..., 0], f[..., 1]
    return 0.5 * (v + m), 0.5 * (v - m)


def _skellam_loglik(y, f):
    y, f = _b(y, f)
    valid = _valid_integer(y)
    ys = _safe(y, valid, 0.0)
    mu1, mu2 = _skellam_rates(f)
    z = 2.0 * np.sqrt(mu1 * mu2)
    ll = -(mu1 + mu2) + 0.5 * ys * (np.log(mu1) - np.log(mu2)) + log_bessel_i(np.abs(ys), z)
    return _masked(valid, ll)


def _skellam_score(y, f):
    y, f = _b(y, f)
    mu1, mu2 = _skellam_rates(f)
    n = np.abs(y)
    z = 2.0 * np.sqrt(mu1 * mu2)
    rz = z * bessel_ratio(n, z)
    s1 = -1.0 + (y + n + rz) / (2.0 * mu1)
    s2 = -1.0 + (n - y + rz) / (2.0 * mu2)
    return np.stack([0.5 * (s1 - s2), 0.5 * (s1 + s2)], axis=-1)


def skellam_support_range(m, v):
    sd = np.sqrt(v)
    return int(np.floor(m - 12.0 * sd - 10.0)), int(np.ceil(m + 12.0 * sd + 10.0))


def _skellam_fisher_point(m, v):
    lo, hi = skellam_support_range(m, v)
    ys = np.arange(lo, hi + 1, dtype=float)
    f = np.array([m, v])
    w = np.exp(_skellam_loglik(ys, f))
    s = _skellam_score(ys, f)
    return np.einsum("n,ni,nj->ij", w, s, s)


def _skellam_fisher(f):
    f = np.asarray(f, dtype=float)
    flat = f.reshape(-1, 2)
    out = np.array([_skellam_fisher_point(m, v) for m, v in flat])
    return out.reshape(f.shape[:-1] + (2, 2))


def _skellam_random(f, rng):
    mu1, mu2 = _skellam_rates(np.asarray(f, dtype=float))
    return (rng.poisson(mu1) - rng.poisson(mu2)).astype(float)


def _skellam_start(y):
    m, v = _moments(y)
    return np.array([m, max(v, abs(m) + CLAMP)])


register(DistributionDescriptor(
    label="skellam", parametrization="meanvar", data_type="integer",
    param_names=("mean", "var"), param_supports=("real", "positive"),
    orthogonal=False, kernel_id=8,
    loglik=_skellam_loglik, score=_skellam_score, fisher=_skellam_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: np.asarray(f, dtype=float)[..., 1],
    random=_skellam_random, start=_skellam_start, valid_y=_valid_integer,
    extra_support=lambda f: f[..., 1] > np.abs(f[..., 0]),
))


# --- t / meanvar ------------------------------------------------------------

def _t_loglik(y, f):
    y, f = _b(y, f)
    m, v, n = f[..., 0], f[..., 1], f[..., 2]
    valid = _valid_real(y)
    ys = _safe(y, valid)
    w = v * (n - 2.0)
    ll = (gammaln(0.5 * (n + 1.0)) - gammaln(0.5 * n) - 0.5 * np.log(np.pi * w)
          - 0.5 * (n + 1.0) * np.log1p((ys - m) ** 2 / w))
    return _masked(valid, ll)


def _t_score(y, f):
    y, f = _b(y, f)
    m, v, n = f[..., 0], f[..., 1], f[..., 2]
    d = y - m
    d2 = d * d
    w = v * (n - 2.0)
    s_m = (n + 1.0) * d / (w + d2)
    s_v = -0.5 / v + 0.5 * (n + 1.0) * d2 / (v * (w + d2))
    s_n = (0.5 * (digamma(0.5 * (n + 1.0)) - digamma(0.5 * n)) - 0.5 / (n - 2.0)
           - 0.5 * np.log1p(d2 / w) + 0.5 * (n + 1.0) * d2 / ((n - 2.0) * (w + d2)))
    return np.stack([s_m, s_v, s_n], axis=-1)


def _t_fisher(f):
    f = np.asarray(f, dtype=float)
    v, n = f[..., 1], f[..., 2]
    s = v * (n - 2.0) / n
    # information in (mean, squared scale, df), then mapped to (mean, var, df)
    i_mm = (n + 1.0) / ((n + 3.0) * s)
    i_ss = n / (2.0 * (n + 3.0) * s * s)
    i_sn = -1.0 / ((n + 1.0) * (n + 3.0) * s)
    i_nn = (0.25 * (trigamma(0.5 * n) - trigamma(0.5 * (n + 1.0)))
            - (n + 5.0) / (2.0 * n * (n + 1.0) * (n + 3.0)))
    ds_dv = (n - 2.0) / n
    ds_dn = 2.0 * v / (n * n)
    out = np.zeros(v.shape + (3, 3))
    out[..., 0, 0] = i_mm
    out[..., 1, 1] = ds_dv * ds_dv * i_ss
    out[..., 1, 2] = out[..., 2, 1] = ds_dv * (ds_dn * i_ss + i_sn)
    out[..., 2, 2] = i_nn + 2.0 * ds_dn * i_sn + ds_dn * ds_dn * i_ss
    return out


def _t_random(f, rng):
    f = np.asarray(f, dtype=float)
    m, v, n = f[..., 0], f[..., 1], f[..., 2]
    return m + np.sqrt(v * (n - 2.0) / n) * rng.standard_t(n)


def _t_start(y):
    m, v = _moments(y)
    v = max(v, CLAMP)
    kurt = float(np.mean((np.asarray(y) - m) ** 4)) / (v * v) - 3.0
    df = 4.0 + 6.0 / kurt if kurt > 0 else 100.0
    return np.array([m, v, float(np.clip(df, 2.5, 100.0))])


def _t_var(f):
    f = np.asarray(f, dtype=float)
    return np.where(f[..., 2] > 2.0, f[..., 1], np.nan)


register(DistributionDescriptor(
    label="t", parametrization="meanvar", data_type="real",
    param_names=("mean", "var", "df"), param_supports=("real", "positive", "positive"),
    orthogonal=False, kernel_id=9,
    loglik=_t_loglik, score=_t_score, fisher=_t_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=_t_var, random=_t_random, start=_t_start, valid_y=_valid_real,
    static_only=(False, False, True), lower=(0.0, 0.0, 2.0),
))


# --- vonmises / meanconc ----------------------------------------------------

def _vm_a(k):
    return i1e(k) / i0e(k)


def _vm_loglik(y, f):
    y, f = _b(y, f)
    m, k = f[..., 0], f[..., 1]
    valid = _valid_real(y)
    ys = _safe(y, valid)
    ll = k * np.cos(ys - m) - np.log(2.0 * np.pi) - np.log(i0e(k)) - k
    return _masked(valid, ll)


def _vm_score(y, f):
    y, f = _b(y, f)
    m, k = f[..., 0], f[..., 1]
    return np.stack([k * np.sin(y - m), np.cos(y - m) - _vm_a(k)], axis=-1)


def _vm_fisher(f):
    k = np.asarray(f, dtype=float)[..., 1]
    a = _vm_a(k)
    return _fisher_diag(k * a, 1.0 - a / k - a * a)


def _vm_start(y):
    y = np.asarray(y, dtype=float)
    c, s = float(np.mean(np.cos(y))), float(np.mean(np.sin(y)))
    r = min(np.hypot(c, s), 1.0 - CLAMP)
    # Best & Fisher approximation to the inverse of I1/I0
    if r < 0.53:
        k = 2.0 * r + r ** 3 + 5.0 * r ** 5 / 6.0
    elif r < 0.85:
        k = -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    else:
        k = 1.0 / (r ** 3 - 4.0 * r ** 2 + 3.0 * r)
    return np.array([float(np.arctan2(s, c)), max(k, CLAMP)])


register(DistributionDescriptor(
    label="vonmises", parametrization="meanconc", data_type="circular",
    param_names=("mean", "conc"), param_supports=("circular", "positive"),
    orthogonal=True, kernel_id=10,
    loglik=_vm_loglik, score=_vm_score, fisher=_vm_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0],
    var=lambda f: 1.0 - _vm_a(np.asarray(f, dtype=float)[..., 1]),
    random=lambda f, rng: rng.vonmises(np.asarray(f, dtype=float)[..., 0], np.asarray(f, dtype=float)[..., 1]),
    start=_vm_start, valid_y=_valid_real,
))


# --- weibull / scale --------------------------------------------------------

def _weibull_loglik(y, f):
    y, f = _b(y, f)
    lam, k = f[..., 0], f[..., 1]
    valid = _valid_pos(y)
    ys = _safe(y, valid)
    lz = np.log(ys / lam)
    return _masked(valid, np.log(k) - np.log(lam) + (k - 1.0) * lz - np.exp(k * lz))


def _weibull_score(y, f):
    y, f = _b(y, f)
    lam, k = f[..., 0], f[..., 1]
    lz = np.log(y / lam)
    z = np.exp(k * lz)
    return np.stack([k * (z - 1.0) / lam, 1.0 / k + lz * (1.0 - z)], axis=-1)


def _weibull_fisher(f):
    f = np.asarray(f, dtype=float)
    lam, k = f[..., 0], f[..., 1]
    out = np.empty(lam.shape + (2, 2))
    out[..., 0, 0] = (k / lam) ** 2
    out[..., 0, 1] = out[..., 1, 0] = -(1.0 - EULER) / lam
    out[..., 1, 1] = ((1.0 - EULER) ** 2 + np.pi ** 2 / 6.0) / (k * k)
    return out


def _weibull_var(f):
    f = np.asarray(f, dtype=float)
    lam, k = f[..., 0], f[..., 1]
    return lam * lam * (gamma_fn(1.0 + 2.0 / k) - gamma_fn(1.0 + 1.0 / k) ** 2)


def _weibull_start(y):
    m, v = _moments(y)
    m = max(m, CLAMP)
    cv = np.sqrt(max(v, CLAMP * CLAMP)) / m
    k = float(np.clip(cv ** -1.086, 0.05, 100.0))
    return np.array([m / gamma_fn(1.0 + 1.0 / k), k])


register(DistributionDescriptor(
    label="weibull", parametrization="scale", data_type="duration",
    param_names=("scale", "shape"), param_supports=("positive", "positive"),
    orthogonal=False, kernel_id=11,
    loglik=_weibull_loglik, score=_weibull_score, fisher=_weibull_fisher,
    mean=lambda f: np.asarray(f, dtype=float)[..., 0] * gamma_fn(1.0 + 1.0 / np.asarray(f, dtype=float)[..., 1]),
    var=_weibull_var,
    random=lambda f, rng: np.asarray(f, dtype=float)[..., 0] * rng.weibull(np.asarray(f, dtype=float)[..., 1]),
    start=_weibull_start, valid_y=_valid_pos,
))
