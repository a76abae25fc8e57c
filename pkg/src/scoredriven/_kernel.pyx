# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled score-driven filter.

Mirrors ``_filter_python.filter_loop`` term by term. Family identifiers
follow ``DistributionDescriptor.kernel_id``.
"""

from libc.math cimport (INFINITY, NAN, M_PI, cos, exp, fabs, floor, isfinite,
                        log, log1p, sin, sqrt, ceil)
from scipy.special.cython_special cimport gammaln, i0e, i1e, ive, psi

cdef enum:
    NMAX = 3

cdef double EULER = 0.57721566490153286061

cdef enum:
    BERNOULLI = 0
    EXP = 1
    GAMMA = 2
    GEOM = 3
    LAPLACE = 4
    NEGBIN = 5
    NORM = 6
    POIS = 7
    SKELLAM = 8
    STUDENT = 9
    VONMISES = 10
    WEIBULL = 11

cdef int N_PARAMS[12]
N_PARAMS[:] = [1, 1, 2, 1, 2, 2, 2, 1, 2, 3, 2, 2]


# --- special functions -------------------------------------------------------

cdef inline double digamma(double x) noexcept nogil:
    return psi(x)


cdef double trigamma(double x) noexcept nogil:
    cdef double r = 0.0, t, ix
    while x < 20.0:
        r += 1.0 / (x * x)
        x += 1.0
    ix = 1.0 / x
    t = ix * ix
    return r + ix + 0.5 * t + ix * t * (1.0 / 6.0 - t * (1.0 / 30.0 - t * (1.0 / 42.0 - t * (1.0 / 30.0 - t * 5.0 / 66.0))))


cdef double log_bessel_series(double n, double z) noexcept nogil:
    cdef double q = 0.25 * z * z, term = 1.0, total = 1.0
    cdef int k = 0
    while True:
        k += 1
        term *= q / (k * (n + k))
        total += term
        if term < 1e-17 * total or k > 500:
            break
    return n * log(0.5 * z) - gammaln(n + 1.0) + log(total)


cdef double log_bessel_i(double n, double z) noexcept nogil:
    cdef double v
    if z == 0.0:
        return 0.0 if n == 0.0 else -INFINITY
    v = ive(n, z)
    if v > 1e-290:
        return log(v) + z
    return log_bessel_series(n, z)


cdef double bessel_ratio_cf(double n, double z) noexcept nogil:
    cdef double tiny = 1e-300, f = tiny, c = tiny, d = 0.0, b, delta
    cdef int k = 1
    while True:
        b = 2.0 * (n + k) / z
        d = b + d
        if d == 0.0:
            d = tiny
        c = b + 1.0 / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if fabs(delta - 1.0) < 1e-16 or k > 100000:
            break
        k += 1
    return 1.0 / f if f != tiny else 0.0


cdef double bessel_ratio(double n, double z) noexcept nogil:
    cdef double a, b
    if z == 0.0:
        return 0.0
    a = ive(n, z)
    b = ive(n + 1.0, z)
    if a > 1e-290 and b > 1e-290 and isfinite(b / a):
        return b / a
    return bessel_ratio_cf(n, z)


# --- sample spaces and supports ---------------------------------------------

cdef bint valid_y(int dist, double y) noexcept nogil:
    if not isfinite(y):
        return False
    if dist == BERNOULLI:
        return y == 0.0 or y == 1.0
    if dist == POIS or dist == GEOM or dist == NEGBIN:
        return y >= 0.0 and y == floor(y)
    if dist == SKELLAM:
        return y == floor(y)
    if dist == EXP:
        return y >= 0.0
    if dist == GAMMA or dist == WEIBULL:
        return y > 0.0
    return True


cdef bint in_support(int dist, double* th) noexcept nogil:
    cdef int i
    for i in range(N_PARAMS[dist]):
        if not isfinite(th[i]):
            return False
    if dist == BERNOULLI:
        return th[0] > 0.0 and th[0] < 1.0
    if dist == EXP or dist == POIS or dist == GEOM:
        return th[0] > 0.0
    if dist == GAMMA or dist == NEGBIN or dist == WEIBULL:
        return th[0] > 0.0 and th[1] > 0.0
    if dist == LAPLACE or dist == NORM or dist == VONMISES:
        return th[1] > 0.0
    if dist == SKELLAM:
        return th[1] > 0.0 and th[1] > fabs(th[0])
    if dist == STUDENT:
        return th[1] > 0.0 and th[2] > 2.0
    return False


# --- log-likelihood ----------------------------------------------------------

cdef double loglik(int dist, double y, double* th) noexcept nogil:
    cdef double a, b, c, r, mu1, mu2, w, lz
    if not valid_y(dist, y):
        return -INFINITY
    if dist == BERNOULLI:
        return log(th[0]) if y == 1.0 else log1p(-th[0])
    if dist == EXP:
        return -log(th[0]) - y / th[0]
    if dist == GAMMA:
        return (th[1] - 1.0) * log(y) - y / th[0] - gammaln(th[1]) - th[1] * log(th[0])
    if dist == GEOM:
        a = y * log(th[0]) if y > 0.0 else 0.0
        return a - (y + 1.0) * log1p(th[0])
    if dist == LAPLACE:
        return -log(2.0 * th[1]) - fabs(y - th[0]) / th[1]
    if dist == NEGBIN:
        a = th[1] * th[0]
        r = 1.0 / th[1]
        b = y * (log(a) - log1p(a)) if y > 0.0 else 0.0
        return gammaln(y + r) - gammaln(r) - gammaln(y + 1.0) - r * log1p(a) + b
    if dist == NORM:
        return -0.5 * log(2.0 * M_PI * th[1]) - 0.5 * (y - th[0]) * (y - th[0]) / th[1]
    if dist == POIS:
        a = y * log(th[0]) if y > 0.0 else 0.0
        return a - th[0] - gammaln(y + 1.0)
    if dist == SKELLAM:
        mu1 = 0.5 * (th[1] + th[0])
        mu2 = 0.5 * (th[1] - th[0])
        return -(mu1 + mu2) + 0.5 * y * (log(mu1) - log(mu2)) + log_bessel_i(fabs(y), 2.0 * sqrt(mu1 * mu2))
    if dist == STUDENT:
        w = th[1] * (th[2] - 2.0)
        return (gammaln(0.5 * (th[2] + 1.0)) - gammaln(0.5 * th[2]) - 0.5 * log(M_PI * w)
                - 0.5 * (th[2] + 1.0) * log1p((y - th[0]) * (y - th[0]) / w))
    if dist == VONMISES:
        return th[1] * cos(y - th[0]) - log(2.0 * M_PI) - log(i0e(th[1])) - th[1]
    if dist == WEIBULL:
        lz = log(y / th[0])
        return log(th[1]) - log(th[0]) + (th[1] - 1.0) * lz - exp(th[1] * lz)
    return NAN


# --- score (natural parametrization) -----------------------------------------

cdef void score(int dist, double y, double* th, double* out) noexcept nogil:
    cdef double d, d2, w, n, z, rz, s1, s2, mu1, mu2, r, lz, sr
    if dist == BERNOULLI:
        out[0] = (y - th[0]) / (th[0] * (1.0 - th[0]))
    elif dist == EXP:
        out[0] = (y - th[0]) / (th[0] * th[0])
    elif dist == GAMMA:
        out[0] = (y - th[1] * th[0]) / (th[0] * th[0])
        out[1] = log(y) - log(th[0]) - digamma(th[1])
    elif dist == GEOM:
        out[0] = (y - th[0]) / (th[0] * (1.0 + th[0]))
    elif dist == LAPLACE:
        d = y - th[0]
        out[0] = (1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)) / th[1]
        out[1] = (fabs(d) - th[1]) / (th[1] * th[1])
    elif dist == NEGBIN:
        r = 1.0 / th[1]
        out[0] = (y - th[0]) / (th[0] * (1.0 + th[1] * th[0]))
        sr = digamma(y + r) - digamma(r) - log1p(th[1] * th[0]) + (th[0] - y) / (r + th[0])
        out[1] = -r * r * sr
    elif dist == NORM:
        d = y - th[0]
        out[0] = d / th[1]
        out[1] = 0.5 * (d * d - th[1]) / (th[1] * th[1])
    elif dist == POIS:
        out[0] = y / th[0] - 1.0
    elif dist == SKELLAM:
        mu1 = 0.5 * (th[1] + th[0])
        mu2 = 0.5 * (th[1] - th[0])
        n = fabs(y)
        z = 2.0 * sqrt(mu1 * mu2)
        rz = z * bessel_ratio(n, z)
        s1 = -1.0 + (y + n + rz) / (2.0 * mu1)
        s2 = -1.0 + (n - y + rz) / (2.0 * mu2)
        out[0] = 0.5 * (s1 - s2)
        out[1] = 0.5 * (s1 + s2)
    elif dist == STUDENT:
        d = y - th[0]
        d2 = d * d
        n = th[2]
        w = th[1] * (n - 2.0)
        out[0] = (n + 1.0) * d / (w + d2)
        out[1] = -0.5 / th[1] + 0.5 * (n + 1.0) * d2 / (th[1] * (w + d2))
        out[2] = (0.5 * (digamma(0.5 * (n + 1.0)) - digamma(0.5 * n)) - 0.5 / (n - 2.0)
                  - 0.5 * log1p(d2 / w) + 0.5 * (n + 1.0) * d2 / ((n - 2.0) * (w + d2)))
    elif dist == VONMISES:
        out[0] = th[1] * sin(y - th[0])
        out[1] = cos(y - th[0]) - i1e(th[1]) / i0e(th[1])
    elif dist == WEIBULL:
        lz = log(y / th[0])
        z = exp(th[1] * lz)
        out[0] = th[1] * (z - 1.0) / th[0]
        out[1] = 1.0 / th[1] + lz * (1.0 - z)


# --- Fisher information (natural parametrization, row-major n x n) -----------

cdef double nb2_dispersion_info(double m, double a) noexcept nogil:
    cdef double r = 1.0 / a, q = m / (r + m), pmf, cdf, surv, total = 0.0
    cdef long j = 0
    pmf = exp(r * log(r / (r + m)))
    cdf = pmf
    while True:
        surv = 1.0 - cdf
        if surv < 0.0:
            surv = 0.0
        total += surv / ((r + j) * (r + j))
        if (j > m and pmf * (r + m) / r < 1e-17) or j > 10000000:
            break
        pmf *= (j + r) / (j + 1.0) * q
        cdf += pmf
        j += 1
    return (total - m / (r * (r + m))) * r * r * r * r


cdef void skellam_fisher(double* th, double* out) noexcept nogil:
    cdef double sd = sqrt(th[1]), w, s[2]
    cdef long lo = <long>floor(th[0] - 12.0 * sd - 10.0)
    cdef long hi = <long>ceil(th[0] + 12.0 * sd + 10.0)
    cdef long yy
    out[0] = out[1] = out[2] = out[3] = 0.0
    for yy in range(lo, hi + 1):
        w = exp(loglik(SKELLAM, <double>yy, th))
        score(SKELLAM, <double>yy, th, s)
        out[0] += w * s[0] * s[0]
        out[1] += w * s[0] * s[1]
        out[3] += w * s[1] * s[1]
    out[2] = out[1]


cdef void fisher(int dist, double* th, double* out) noexcept nogil:
    cdef int n = N_PARAMS[dist], i
    cdef double a, v, nu, s, i_ss, i_sn, ds_dv, ds_dn
    for i in range(n * n):
        out[i] = 0.0
    if dist == BERNOULLI:
        out[0] = 1.0 / (th[0] * (1.0 - th[0]))
    elif dist == EXP:
        out[0] = 1.0 / (th[0] * th[0])
    elif dist == GAMMA:
        out[0] = th[1] / (th[0] * th[0])
        out[1] = out[2] = 1.0 / th[0]
        out[3] = trigamma(th[1])
    elif dist == GEOM:
        out[0] = 1.0 / (th[0] * (1.0 + th[0]))
    elif dist == LAPLACE:
        out[0] = out[3] = 1.0 / (th[1] * th[1])
    elif dist == NEGBIN:
        out[0] = 1.0 / (th[0] * (1.0 + th[1] * th[0]))
        out[3] = nb2_dispersion_info(th[0], th[1])
    elif dist == NORM:
        out[0] = 1.0 / th[1]
        out[3] = 0.5 / (th[1] * th[1])
    elif dist == POIS:
        out[0] = 1.0 / th[0]
    elif dist == SKELLAM:
        skellam_fisher(th, out)
    elif dist == STUDENT:
        v = th[1]
        nu = th[2]
        s = v * (nu - 2.0) / nu
        i_ss = nu / (2.0 * (nu + 3.0) * s * s)
        i_sn = -1.0 / ((nu + 1.0) * (nu + 3.0) * s)
        ds_dv = (nu - 2.0) / nu
        ds_dn = 2.0 * v / (nu * nu)
        out[0] = (nu + 1.0) / ((nu + 3.0) * s)
        out[4] = ds_dv * ds_dv * i_ss
        out[5] = out[7] = ds_dv * (ds_dn * i_ss + i_sn)
        out[8] = (0.25 * (trigamma(0.5 * nu) - trigamma(0.5 * (nu + 1.0)))
                  - (nu + 5.0) / (2.0 * nu * (nu + 1.0) * (nu + 3.0))
                  + 2.0 * ds_dn * i_sn + ds_dn * ds_dn * i_ss)
    elif dist == VONMISES:
        a = i1e(th[1]) / i0e(th[1])
        out[0] = th[1] * a
        out[3] = 1.0 - a / th[1] - a * a
    elif dist == WEIBULL:
        out[0] = (th[1] / th[0]) * (th[1] / th[0])
        out[1] = out[2] = -(1.0 - EULER) / th[0]
        out[3] = ((1.0 - EULER) * (1.0 - EULER) + M_PI * M_PI / 6.0) / (th[1] * th[1])


# --- small symmetric eigensolver and scaling ---------------------------------

cdef void jacobi_eig(int n, double* a, double* w, double* v) noexcept nogil:
    """Cyclic Jacobi on a symmetric n x n matrix (n <= 3); ``a`` is destroyed."""
    cdef int i, j, k, sweep
    cdef double off, theta, t, c, s, tau, h, g, aip, aiq, vip, viq
    for i in range(n):
        for j in range(n):
            v[i * n + j] = 1.0 if i == j else 0.0
    for sweep in range(60):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i * n + j] * a[i * n + j]
        if off == 0.0:
            break
        for i in range(n):
            for j in range(i + 1, n):
                if a[i * n + j] == 0.0:
                    continue
                theta = 0.5 * (a[j * n + j] - a[i * n + i]) / a[i * n + j]
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    aip = a[k * n + i]
                    aiq = a[k * n + j]
                    a[k * n + i] = c * aip - s * aiq
                    a[k * n + j] = s * aip + c * aiq
                for k in range(n):
                    aip = a[i * n + k]
                    aiq = a[j * n + k]
                    a[i * n + k] = c * aip - s * aiq
                    a[j * n + k] = s * aip + c * aiq
                for k in range(n):
                    vip = v[k * n + i]
                    viq = v[k * n + j]
                    v[k * n + i] = c * vip - s * viq
                    v[k * n + j] = s * vip + c * viq
    for i in range(n):
        w[i] = a[i * n + i]


cdef void pseudo_power(int n, double* a, bint root, double* out) noexcept nogil:
    """out = a^{-1} or a^{-1/2} by eigen-decomposition with a 1e-10 relative cutoff."""
    cdef double w[NMAX], v[NMAX * NMAX], tmp[NMAX * NMAX], lmax = 0.0, cut
    cdef int i, j, k
    for i in range(n * n):
        tmp[i] = a[i]
    if n == 1:
        w[0] = tmp[0]
        v[0] = 1.0
    else:
        jacobi_eig(n, tmp, w, v)
    for i in range(n):
        if w[i] < 0.0:
            w[i] = 0.0
        if w[i] > lmax:
            lmax = w[i]
    cut = 1e-10 * lmax
    for i in range(n):
        if w[i] > cut and w[i] > 0.0:
            w[i] = 1.0 / sqrt(w[i]) if root else 1.0 / w[i]
        else:
            w[i] = 0.0
    for i in range(n):
        for j in range(n):
            out[i * n + j] = 0.0
            for k in range(n):
                out[i * n + j] += v[i * n + k] * w[k] * v[j * n + k]


cdef void scaling_matrix(int code, int n, double* info, int k, const Py_ssize_t[::1] tv,
                         double* out) noexcept nogil:
    cdef double sub[NMAX * NMAX], full[NMAX * NMAX], d
    cdef int i, j
    if code == 1 or code == 2:
        for i in range(k):
            for j in range(k):
                sub[i * k + j] = info[tv[i] * n + tv[j]]
        pseudo_power(k, sub, code == 2, out)
    elif code == 3 or code == 4:
        pseudo_power(n, info, code == 4, full)
        for i in range(k):
            for j in range(k):
                out[i * k + j] = full[tv[i] * n + tv[j]]
    else:
        for i in range(k):
            for j in range(k):
                out[i * k + j] = 0.0
            d = info[tv[i] * n + tv[i]]
            if d > 0.0:
                out[i * k + i] = 1.0 / sqrt(d) if code == 6 else 1.0 / d


# --- the recursion -----------------------------------------------------------

def filter_loop(int dist, const double[::1] y, const Py_ssize_t[::1] tv,
                const int[::1] link_kind, const double[::1] static_vals,
                const double[::1] omega, const double[:, ::1] xb,
                const double[:, ::1] alpha, const double[:, ::1] phi,
                const int[::1] p, const int[::1] q,
                const double[::1] init_f, const double[::1] init_e,
                bint sep, int scaling, Py_ssize_t lik_skip, Py_ssize_t n_init,
                double[:, ::1] par_tv, double[:, ::1] score_tv,
                double[:, ::1] err_tv, double[::1] ll_out):
    """Run the filter in place; returns (loglik_sum, ok)."""
    cdef Py_ssize_t T = y.shape[0], t, j
    cdef int n = N_PARAMS[dist], k = tv.shape[0], i, c
    cdef double th[NMAX], nat[NMAX], jac[NMAX], sc[NMAX], info[NMAX * NMAX]
    cdef double smat[NMAX * NMAX], acc, ll, total = 0.0, val
    cdef bint ok = True
    with nogil:
        for t in range(T):
            for i in range(k):
                if t < n_init:
                    par_tv[t, i] = init_f[i]
                    err_tv[t, i] = init_e[i]
                else:
                    acc = 0.0
                    for j in range(p[i]):
                        acc = acc + alpha[i, j] * score_tv[t - 1 - j, i]
                    if sep:
                        for j in range(q[i]):
                            acc = acc + phi[i, j] * err_tv[t - 1 - j, i]
                        err_tv[t, i] = acc
                    else:
                        for j in range(q[i]):
                            acc = acc + phi[i, j] * par_tv[t - 1 - j, i]
                    par_tv[t, i] = (omega[i] + xb[t, i]) + acc
            for i in range(n):
                th[i] = static_vals[i]
            for i in range(k):
                th[tv[i]] = par_tv[t, i]
            for i in range(n):
                if link_kind[i] == 1:
                    nat[i] = exp(th[i])
                    jac[i] = nat[i]
                elif link_kind[i] == 2:
                    nat[i] = 1.0 / (1.0 + exp(-th[i]))
                    jac[i] = nat[i] * (1.0 - nat[i])
                else:
                    nat[i] = th[i]
                    jac[i] = 1.0
            if not in_support(dist, nat):
                ok = False
                break
            if not isfinite(y[t]):
                ll_out[t] = NAN
                for i in range(k):
                    score_tv[t, i] = 0.0
                continue
            ll = loglik(dist, y[t], nat)
            if not isfinite(ll):
                ok = False
                break
            ll_out[t] = ll
            if t >= lik_skip:
                total += ll
            score(dist, y[t], nat, sc)
            for i in range(n):
                sc[i] = sc[i] * jac[i]
            if scaling == 0:
                for i in range(k):
                    score_tv[t, i] = sc[tv[i]]
            else:
                fisher(dist, nat, info)
                for i in range(n):
                    for c in range(n):
                        info[i * n + c] = info[i * n + c] * jac[i] * jac[c]
                scaling_matrix(scaling, n, info, k, tv, smat)
                for i in range(k):
                    val = 0.0
                    for c in range(k):
                        val = val + smat[i * k + c] * sc[tv[c]]
                    score_tv[t, i] = val
            for i in range(k):
                if not isfinite(score_tv[t, i]):
                    ok = False
            if not ok:
                break
    if not ok:
        return -INFINITY, False
    return total, True


def family_eval(int dist, double y, const double[::1] th_in):
    """Loglik, score and Fisher at one point (natural space); used in tests."""
    cdef int n = N_PARAMS[dist], i
    cdef double th[NMAX], sc[NMAX], info[NMAX * NMAX]
    for i in range(n):
        th[i] = th_in[i]
    ll = loglik(dist, y, th)
    score(dist, y, th, sc)
    fisher(dist, th, info)
    return ll, [sc[i] for i in range(n)], [[info[i * n + c] for c in range(n)] for i in range(n)]
