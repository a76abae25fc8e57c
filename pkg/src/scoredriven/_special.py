"""Special functions shared by the distribution families.

The Bessel helpers work for integer order only, which is all Skellam and
von Mises need. ``log_bessel_i`` falls back to the ascending series when the
exponentially scaled value underflows (order much larger than argument).
"""

import numpy as np
from scipy.special import gammaln, ive, polygamma, psi

__all__ = ["digamma", "trigamma", "gammaln", "log_bessel_i", "bessel_ratio", "bessel_i1_i0"]

digamma = psi


def trigamma(x):
    return polygamma(1, x)


def _log_bessel_series(n, z):
    # ln I_n(z) = n ln(z/2) - ln n! + ln sum_k (z^2/4)^k / (k! (n+1)_k)
    q = 0.25 * z * z
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (n + k))
        total += term
        if term < 1e-17 * total or k > 500:
            break
    return n * np.log(0.5 * z) - gammaln(n + 1.0) + np.log(total)


def _bessel_ratio_cf(n, z):
    # I_{n+1}(z)/I_n(z) via the backward continued fraction, modified Lentz.
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    k = 1
    while True:
        b = 2.0 * (n + k) / z
        d = b + d
        d = tiny if d == 0.0 else d
        c = b + 1.0 / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16 or k > 100000:
            break
        k += 1
    return 1.0 / f if f != tiny else 0.0


def _scalar_log_bessel_i(n, z):
    if z == 0.0:
        return 0.0 if n == 0 else -np.inf
    v = ive(n, z)
    if v > 1e-290:
        return np.log(v) + z
    return _log_bessel_series(n, z)


def _scalar_bessel_ratio(n, z):
    if z == 0.0:
        return 0.0
    a = ive(n, z)
    b = ive(n + 1, z)
    if a > 1e-290 and b > 1e-290:
        return b / a
    return _bessel_ratio_cf(n, z)


def log_bessel_i(n, z):
    """Natural log of the modified Bessel function I_n(z), integer n >= 0."""
    n = np.asarray(n, dtype=float)
    z = np.asarray(z, dtype=float)
    n, z = np.broadcast_arrays(n, z)
    out = np.log(ive(n, z)) + z
    bad = ~np.isfinite(out) | (ive(n, z) <= 1e-290)
    if np.any(bad):
        out = np.array(out, dtype=float)
        for idx in zip(*np.nonzero(bad)):
            out[idx] = _scalar_log_bessel_i(float(n[idx]), float(z[idx]))
    return out[()] if out.ndim == 0 else out


def bessel_ratio(n, z):
    """Ratio I_{n+1}(z) / I_n(z) for integer n >= 0 and z >= 0."""
    n = np.asarray(n, dtype=float)
    z = np.asarray(z, dtype=float)
    n, z = np.broadcast_arrays(n, z)
    a = ive(n, z)
    b = ive(n + 1.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = b / a
    bad = (a <= 1e-290) | (b <= 1e-290) | ~np.isfinite(out)
    if np.any(bad):
        out = np.array(out, dtype=float)
        for idx in zip(*np.nonzero(bad)):
            out[idx] = _scalar_bessel_ratio(float(n[idx]), float(z[idx]))
    return out[()] if out.ndim == 0 else out


def bessel_i1_i0(x):
    """A(x) = I_1(x) / I_0(x), the mean resultant length of a von Mises law."""
    return ive(1, x) / ive(0, x)
