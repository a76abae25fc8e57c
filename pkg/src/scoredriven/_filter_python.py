"""Pure-Python filter, used when the compiled kernel is unavailable.

``filter_loop`` has the same signature and semantics as
``_kernel.filter_loop``. ``scaled_score`` is batched over a leading axis and
also drives simulation and simulated-path forecasting.
"""

import numpy as np

from .distributions import links

SCALING_CODES = {
    "unit": 0,
    "fisher_inv": 1,
    "fisher_inv_sqrt": 2,
    "full_fisher_inv": 3,
    "full_fisher_inv_sqrt": 4,
    "diag_fisher_inv": 5,
    "diag_fisher_inv_sqrt": 6,
}


def pseudo_power(a, root):
    """Batched a^{-1} or a^{-1/2} via eigh; eigenvalues below 1e-10 * max are dropped."""
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 1:
        w = np.maximum(a[..., 0, 0], 0.0)
        with np.errstate(divide="ignore"):
            inv = np.where(w > 0.0, 1.0 / np.sqrt(w) if root else 1.0 / w, 0.0)
        return inv[..., None, None]
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, 0.0)
    cut = 1e-10 * w.max(axis=-1, keepdims=True)
    keep = (w > cut) & (w > 0.0)
    with np.errstate(divide="ignore"):
        inv = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)) if root
                       else 1.0 / np.where(keep, w, 1.0), 0.0)
    return np.einsum("...ik,...k,...jk->...ij", v, inv, v)


def scaling_matrix(code, info, tv):
    """Scaling matrices (..., k, k) from link-space Fisher matrices (..., n, n)."""
    k = len(tv)
    if code in (1, 2):
        return pseudo_power(info[..., tv[:, None], tv[None, :]], code == 2)
    if code in (3, 4):
        full = pseudo_power(info, code == 4)
        return full[..., tv[:, None], tv[None, :]]
    d = np.diagonal(info, axis1=-2, axis2=-1)[..., tv]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d > 0.0, 1.0 / np.sqrt(d) if code == 6 else 1.0 / d, 0.0)
    out = np.zeros(d.shape + (k,))
    idx = np.arange(k)
    out[..., idx, idx] = inv
    return out


def scaled_score(desc, theta, y, kinds, tv, code):
    """Log-likelihood and scaled link-space score for a batch of states.

    Parameters
    ----------
    theta : ndarray, shape (r, n)
        Link-space parameter vectors.
    y : ndarray, shape (r,)
        Non-missing observations.

    Returns
    -------
    ll : ndarray (r,), s : ndarray (r, k), ok : ndarray (r,) of bool
    """
    nat = links.inverse(theta, kinds)
    ok = desc.in_support(nat)
    safe = np.where(ok[:, None], nat, _fallback_point(desc))
    with np.errstate(all="ignore"):
        ll = desc.loglik(y, safe)
        jac = links.jacobian(safe, kinds)
        g = desc.score(y, safe) * jac
        if code == 0:
            s = g[:, tv]
        else:
            info = desc.fisher(safe) * jac[:, :, None] * jac[:, None, :]
            smat = scaling_matrix(code, info, tv)
            s = np.einsum("rij,rj->ri", smat, g[:, tv])
    ok = ok & np.isfinite(ll) & np.all(np.isfinite(s), axis=1)
    return ll, s, ok


_FALLBACK = {}


def _fallback_point(desc):
    # an interior parameter vector used to keep masked lanes finite
    if desc.label not in _FALLBACK:
        vals = []
        for s, lo in zip(desc.param_supports, desc.lower):
            vals.append(0.5 if s == "unit-interval" else (lo + 1.0 if s == "positive" else 0.0))
        if desc.extra_support is not None:
            vals[-1] = max(vals[-1], 2.0)
        _FALLBACK[desc.label] = np.array(vals)
    return _FALLBACK[desc.label]


def advance(sep, omega, xb_t, alpha, phi, p, q, f_hist, e_hist, s_hist):
    """One recursion step for a batch; histories hold the most recent row last.

    ``f_hist``, ``e_hist``, ``s_hist`` have shape (r, lags, k).
    """
    r, _, k = f_hist.shape
    f = np.empty((r, k))
    e = np.empty((r, k))
    for i in range(k):
        acc = np.zeros(r)
        for j in range(p[i]):
            acc = acc + alpha[i, j] * s_hist[:, -1 - j, i]
        if sep:
            for j in range(q[i]):
                acc = acc + phi[i, j] * e_hist[:, -1 - j, i]
            e[:, i] = acc
        else:
            for j in range(q[i]):
                acc = acc + phi[i, j] * f_hist[:, -1 - j, i]
            e[:, i] = np.nan
        f[:, i] = (omega[i] + xb_t[..., i]) + acc
    return f, e


def filter_loop(desc, y, tv, link_kind, static_vals, omega, xb, alpha, phi, p, q,
                init_f, init_e, sep, scaling, lik_skip, n_init,
                par_tv, score_tv, err_tv, ll_out):
    """Reference implementation of the compiled filter; fills outputs in place."""
    T = y.shape[0]
    k = len(tv)
    n = len(static_vals)
    tv = np.asarray(tv, dtype=np.intp)
    total = 0.0
    theta = np.array(static_vals, dtype=float)[None, :].copy()
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
        theta[0, tv] = par_tv[t]
        if not np.isfinite(y[t]):
            nat = links.inverse(theta, link_kind)
            if not (np.all(np.isfinite(theta)) and desc.in_support(nat)[0]):
                return -np.inf, False
            ll_out[t] = np.nan
            score_tv[t, :] = 0.0
            continue
        ll, s, ok = scaled_score(desc, theta, y[t:t + 1], link_kind, tv, scaling)
        if not ok[0]:
            return -np.inf, False
        ll_out[t] = ll[0]
        if t >= lik_skip:
            total += ll[0]
        score_tv[t, :] = s[0]
    del n
    return total, True
