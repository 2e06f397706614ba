"""Pure numpy implementation of the profile-likelihood kernels.

Same signatures and algorithms as the compiled ``_kernels`` extension. Used
when the extension is not built or when ``GPDNORM_BACKEND=python``.
"""

import numpy as np

ML_GRID = 200
ML_MAX_EXTEND = 4
ML_T_TOP = 1.0 - 1e-12
SERIES_EPS = 1e-8
_INVPHI = 0.6180339887498949

# cap on elements per temporary in the batched ZS path
_CHUNK_ELEMS = 4_000_000


def _neg_mean_log(x, b):
    return -np.log1p(-b * x).mean()


def _loglik(x, b, xbar):
    n = x.shape[0]
    if b == 0.0:
        return n * (-np.log(xbar) - 1.0)
    k = _neg_mean_log(x, b)
    r = b / k
    if not r > 0.0:
        return np.nan
    return n * (np.log(r) + k - 1.0)


def _score(y, t, ybar, y2bar):
    if abs(t) < SERIES_EPS:
        return ybar - y2bar / (2.0 * ybar)
    k = -np.log1p(-t * y).mean()
    kp = (y / (1.0 - t * y)).mean()
    return 1.0 / t - kp / k + kp


def loglik_grid(x, bs):
    x = np.asarray(x, dtype=np.float64)
    bs = np.asarray(bs, dtype=np.float64)
    n = x.shape[0]
    xbar = x.mean()
    out = np.empty(bs.shape[0])
    nz = bs != 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        k = -np.log1p(-np.outer(bs[nz], x)).mean(axis=1)
        r = bs[nz] / k
        vals = n * (np.log(r) + k - 1.0)
    vals[~(r > 0.0)] = np.nan
    out[nz] = vals
    out[~nz] = n * (-np.log(xbar) - 1.0)
    return out


def zs_batch(X, xmax, xq):
    X = np.ascontiguousarray(X, dtype=np.float64)
    xmax = np.asarray(xmax, dtype=np.float64)
    xq = np.asarray(xq, dtype=np.float64)
    rows, n = X.shape
    mg = 20 + int(np.floor(np.sqrt(n)))
    b_out = np.full(rows, np.nan)
    xi_out = np.full(rows, np.nan)
    sig_out = np.full(rows, np.nan)
    ok = (xmax > 0.0) & (xq > 0.0)
    idx = np.flatnonzero(ok)
    step = max(1, _CHUNK_ELEMS // (mg * n))
    j = np.arange(mg)
    shape_term = 1.0 - np.sqrt(mg / (j + 0.5))
    for start in range(0, idx.size, step):
        sel = idx[start:start + step]
        Xc = X[sel]
        xbar = Xc.mean(axis=1)
        bgrid = 1.0 / xmax[sel, None] + shape_term[None, :] / (3.0 * xq[sel, None])
        with np.errstate(invalid="ignore", divide="ignore"):
            k = -np.log1p(-bgrid[:, :, None] * Xc[:, None, :]).mean(axis=2)
            r = bgrid / k
            L = n * (np.log(r) + k - 1.0)
        L[~(r > 0.0)] = np.nan
        zero = bgrid == 0.0
        if zero.any():
            exp_limit = np.broadcast_to(n * (-np.log(xbar)[:, None] - 1.0), L.shape)
            L[zero] = exp_limit[zero]
        with np.errstate(invalid="ignore"):
            lmax = np.max(np.where(np.isnan(L), -np.inf, L), axis=1)
        good = lmax > -np.inf
        w = np.exp(L - lmax[:, None])
        w[np.isnan(w)] = 0.0
        bhat = (w * bgrid).sum(axis=1) / w.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            kh = -np.log1p(-bhat[:, None] * Xc).mean(axis=1)
            xi = -kh
            sig = kh / bhat
        bz = bhat == 0.0
        xi[bz] = 0.0
        sig[bz] = xbar[bz]
        b_out[sel] = np.where(good, bhat, np.nan)
        xi_out[sel] = np.where(good, xi, np.nan)
        sig_out[sel] = np.where(good, sig, np.nan)
    return b_out, xi_out, sig_out


def _ml_row(x):
    n = x.shape[0]
    xmax = x.max()
    xmin = x.min()
    if not xmax > 0.0 or xmin < 0.0 or xmax == xmin:
        return np.nan, np.nan, np.nan, 3
    y = x / xmax
    ybar = y.mean()
    y2bar = (y * y).mean()

    t_lo = -20.0 / ybar
    ext = 0
    while True:
        v_lo = np.log(1.0 - t_lo)
        v_hi = np.log(1.0 - ML_T_TOP)
        tg = 1.0 - np.exp(v_lo + (v_hi - v_lo) * np.arange(ML_GRID) / (ML_GRID - 1.0))
        lg = np.full(ML_GRID, np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            k = -np.log1p(-np.outer(tg, y)).mean(axis=1)
        k[tg == 0.0] = 0.0
        valid = ~(k > 1.0)
        lg[valid] = loglik_grid(y, tg[valid])
        finite = np.where(np.isnan(lg), -np.inf, lg)
        best = int(np.argmax(finite)) if np.isfinite(finite).any() else -1
        if best == 0 and ext < ML_MAX_EXTEND:
            t_lo *= 10.0
            ext += 1
            continue
        break

    status = 0
    if best < 0:
        return np.nan, np.nan, np.nan, 3
    if best == 0:
        status = 1
        t_hat = tg[0]
    elif best == ML_GRID - 1 or np.isnan(lg[best + 1]):
        status = 2
        t_hat = tg[best]
    else:
        a, c = tg[best - 1], tg[best + 1]
        if _score(y, tg[best], ybar, y2bar) > 0.0:
            a = tg[best]
        else:
            c = tg[best]
        sa = _score(y, a, ybar, y2bar)
        sc = _score(y, c, ybar, y2bar)
        if sa > 0.0 and sc < 0.0:
            for _ in range(200):
                m = 0.5 * (a + c)
                if m <= a or m >= c:
                    break
                sm = _score(y, m, ybar, y2bar)
                if sm > 0.0:
                    a = m
                elif sm < 0.0:
                    c = m
                else:
                    a = c = m
                    break
            t_hat = 0.5 * (a + c)
        else:
            status = 4
            a, c = tg[best - 1], tg[best + 1]
            g1 = c - _INVPHI * (c - a)
            g2 = a + _INVPHI * (c - a)
            f1 = _loglik(y, g1, ybar)
            f2 = _loglik(y, g2, ybar)
            for _ in range(200):
                if c - a <= 1e-13 * (1.0 + abs(a)):
                    break
                if f1 >= f2:
                    c, g2, f2 = g2, g1, f1
                    g1 = c - _INVPHI * (c - a)
                    f1 = _loglik(y, g1, ybar)
                else:
                    a, g1, f1 = g1, g2, f2
                    g2 = a + _INVPHI * (c - a)
                    f2 = _loglik(y, g2, ybar)
            t_hat = 0.5 * (a + c)

    if t_hat == 0.0:
        return 0.0, 0.0, ybar * xmax, status
    k = _neg_mean_log(y, t_hat)
    return t_hat / xmax, -k, k / t_hat * xmax, status


def ml_batch(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    rows = X.shape[0]
    b = np.empty(rows)
    xi = np.empty(rows)
    sig = np.empty(rows)
    status = np.empty(rows, dtype=np.int32)
    for r in range(rows):
        b[r], xi[r], sig[r], status[r] = _ml_row(X[r])
    return b, xi, sig, status
