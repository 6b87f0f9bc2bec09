"""Pure-numpy kernels, vectorized over rows where the algorithm allows it."""

import numpy as np

from . import _rowwise

NAME = "numpy"


def project_l1_rows(Y, radius):
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    if radius <= 0:
        return np.zeros_like(Y)
    A = np.abs(Y)
    inside = A.sum(axis=1) <= radius
    srt = -np.sort(-A, axis=1)
    cs = np.cumsum(srt, axis=1) - radius
    j = np.arange(1, d + 1)
    cond = srt - cs / j > 0
    rho = d - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = cs[np.arange(n), rho] / (rho + 1)
    out = np.sign(Y) * np.maximum(A - theta[:, None], 0.0)
    out[inside] = Y[inside]
    return out


def metric_project_l1_rows(Y, S, L, radius, max_iter, tol):
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    out = Y.copy()
    iters = np.zeros(n, dtype=np.int64)
    gaps = np.zeros(n)
    todo = np.abs(Y).sum(axis=1) > radius
    if not np.any(todo):
        return out, iters, gaps
    y = Y[todo]
    step = 1.0 / L

    def gap_of(u):
        G = (u - y) @ S
        return np.einsum("ij,ij->i", G, u) + radius * np.max(np.abs(G), axis=1)

    u = project_l1_rows(y, radius)
    z = u.copy()
    t = np.ones(len(y))
    gap = gap_of(u)
    it = np.zeros(len(y), dtype=np.int64)
    live = gap > tol
    for _ in range(max_iter):
        if not np.any(live):
            break
        zl, ul, tl = z[live], u[live], t[live]
        u_new = project_l1_rows(zl - step * ((zl - y[live]) @ S), radius)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tl * tl))
        restart = np.einsum("ij,ij->i", zl - u_new, u_new - ul) > 0
        t_new[restart] = 1.0
        mom = np.where(restart, 0.0, (tl - 1.0) / t_new)
        z[live] = u_new + mom[:, None] * (u_new - ul)
        u[live] = u_new
        t[live] = t_new
        it[live] += 1
        G = (u_new - y[live]) @ S
        gap[live] = np.einsum("ij,ij->i", G, u_new) + radius * np.max(np.abs(G), axis=1)
        live = gap > tol
    for r in range(len(y)):
        yr = y[r]
        scale = L * radius * (radius + np.sqrt(yr @ yr))
        pol, ok = _rowwise.l1_face_polish(yr, S, u[r], radius, 1e-9 * max(scale, 1e-300))
        if ok:
            pgap = _rowwise.l1_gap(yr, S, pol, radius)
            if pgap <= max(gap[r], 1e-13 * scale):
                u[r] = pol
                gap[r] = pgap
    out[todo] = u
    iters[todo] = it
    gaps[todo] = np.maximum(gap, 0.0)
    return out, iters, gaps


def metric_project_l2_rows(Yh, s, radius, max_iter):
    Yh = np.asarray(Yh, dtype=float)
    n, d = Yh.shape
    out = Yh.copy()
    iters = np.zeros(n, dtype=np.int64)
    res = np.zeros(n)
    nrm = np.sqrt(np.einsum("ij,ij->i", Yh, Yh))
    todo = nrm > radius
    if radius <= 0:
        return np.zeros_like(Yh), iters, res
    if not np.any(todo):
        return out, iters, res
    y = Yh[todo]
    m = len(y)
    lo = np.zeros(m)
    hi = np.full(m, np.max(s)) * nrm[todo] / radius
    mu = np.zeros(m)
    u = y.copy()
    live = np.ones(m, dtype=bool)
    r = np.ones(m)
    it = np.zeros(m, dtype=np.int64)
    for _ in range(max_iter):
        if not np.any(live):
            break
        yl, ml = y[live], mu[live]
        den = s[None, :] + ml[:, None]
        ul = s[None, :] / den * yl
        nu = np.sqrt(np.einsum("ij,ij->i", ul, ul))
        u[live] = ul
        it[live] += 1
        rl = np.abs(nu - radius) / radius
        r[live] = rl
        lol, hil = lo[live], hi[live]
        big = nu > radius
        lol = np.where(big, ml, lol)
        hil = np.where(big, hil, ml)
        dnu = -np.sum(s * s * yl * yl / den ** 3, axis=1) / nu
        phi = 1.0 / radius - 1.0 / nu
        dphi = dnu / (nu * nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(dphi != 0, ml - phi / dphi, 0.5 * (lol + hil))
        bad = ~((lol < cand) & (cand < hil))
        cand[bad] = 0.5 * (lol + hil)[bad]
        lo[live], hi[live] = lol, hil
        done = (rl <= 4e-16) | (hil - lol <= 1e-17 * np.maximum(hil, 1.0))
        mu[live] = np.where(done, ml, cand)
        idx = np.flatnonzero(live)
        live[idx[done]] = False
    nu = np.sqrt(np.einsum("ij,ij->i", u, u))
    over = nu > radius
    u[over] *= (radius / nu[over])[:, None]
    out[todo] = u
    iters[todo] = it
    res[todo] = r
    return out, iters, res


def mnp_rows(Y, R, atoms, max_iter, tol):
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    RA = atoms @ R.T
    out = np.empty_like(Y)
    iters = np.empty(n, dtype=np.int64)
    gaps = np.empty(n)
    for i in range(n):
        lam, x, it, gap = _rowwise.mnp(RA - R @ Y[i], max_iter, tol)
        out[i] = lam @ atoms
        iters[i] = it
        gaps[i] = gap
    return out, iters, gaps


def vertex_argmax_rows(X, V):
    S = np.asarray(X, dtype=float) @ np.asarray(V, dtype=float).T
    N = S.shape[1]
    # interleave (+u_0, -u_0, +u_1, ...) so argmax ties pick the lowest vertex
    both = np.empty((S.shape[0], 2 * N))
    both[:, 0::2] = S
    both[:, 1::2] = -S
    k = np.argmax(both, axis=1)
    i = k // 2
    return np.where(k % 2 == 0, i, N + i)
