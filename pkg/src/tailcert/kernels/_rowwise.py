"""Single-row kernels written in the numba-compilable subset of numpy.

``_numba`` wraps these with @njit; ``_numpy`` calls them as plain Python where
no vectorized form is worth having.
"""

import numpy as np


def project_l1(v, radius):
    """Euclidean projection of v onto {‖u‖₁ <= radius} (sort-based)."""
    d = v.shape[0]
    out = np.empty(d)
    if radius <= 0.0:
        out[:] = 0.0
        return out
    a = np.abs(v)
    if a.sum() <= radius:
        out[:] = v
        return out
    srt = np.sort(a)[::-1]
    cs = 0.0
    theta = 0.0
    for j in range(d):
        cs += srt[j]
        th = (cs - radius) / (j + 1)
        if srt[j] - th > 0.0:
            theta = th
    for j in range(d):
        w = a[j] - theta
        if w > 0.0:
            out[j] = w if v[j] > 0 else -w
        else:
            out[j] = 0.0
    return out


def l1_gap(y, S, u, radius):
    """Frank–Wolfe gap of ½(u-y)ᵀS(u-y) over the ℓ₁ ball at u."""
    g = S @ (u - y)
    return g @ u + radius * np.max(np.abs(g))


def l1_face_polish(y, S, u, radius, slack):
    """Exact minimizer on the ℓ₁-ball face identified by u's signed support.

    Returns (point, ok); ok is False when the face solution fails the KKT
    conditions, in which case ``point`` is u unchanged.
    """
    d = y.shape[0]
    k = 0
    for j in range(d):
        if u[j] != 0.0:
            k += 1
    if k == 0:
        return u.copy(), False
    act = np.empty(k, dtype=np.int64)
    ina = np.empty(d - k, dtype=np.int64)
    ia = 0
    ib = 0
    for j in range(d):
        if u[j] != 0.0:
            act[ia] = j
            ia += 1
        else:
            ina[ib] = j
            ib += 1
    s = np.empty(k)
    for i in range(k):
        s[i] = 1.0 if u[act[i]] > 0 else -1.0
    Saa = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            Saa[i, j] = S[act[i], act[j]]
    rhs = np.zeros(k)
    for i in range(k):
        acc = 0.0
        for j in range(d):
            acc += S[act[i], j] * y[j]
        rhs[i] = acc
    w = np.linalg.solve(Saa, rhs)
    q = np.linalg.solve(Saa, s)
    den = s @ q
    if den <= 0.0:
        return u.copy(), False
    mu = (s @ w - radius) / den
    if mu < -slack:
        return u.copy(), False
    cand = np.zeros(d)
    for i in range(k):
        val = w[i] - mu * q[i]
        if val * s[i] <= 0.0:
            return u.copy(), False
        cand[act[i]] = val
    g = S @ (cand - y)
    for i in range(d - k):
        if abs(g[ina[i]]) > mu + slack:
            return u.copy(), False
    return cand, True


def metric_project_l1(y, S, L, radius, max_iter, tol):
    """argmin_{‖u‖₁ <= radius} ½(u-y)ᵀS(u-y) by restarted FISTA + face polish.

    Returns (u, iterations, gap).
    """
    d = y.shape[0]
    if np.abs(y).sum() <= radius:
        return y.copy(), 0, 0.0
    step = 1.0 / L
    u = project_l1(y, radius)
    z = u.copy()
    t = 1.0
    gap = l1_gap(y, S, u, radius)
    it = 0
    while it < max_iter and gap > tol:
        it += 1
        g = S @ (z - y)
        u_new = project_l1(z - step * g, radius)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # gradient-based adaptive restart
        if (z - u_new) @ (u_new - u) > 0.0:
            t_new = 1.0
            z = u_new.copy()
        else:
            z = u_new + ((t - 1.0) / t_new) * (u_new - u)
        u = u_new
        t = t_new
        gap = l1_gap(y, S, u, radius)
    scale = L * radius * (radius + np.sqrt(y @ y))
    pol, ok = l1_face_polish(y, S, u, radius, 1e-9 * max(scale, 1e-300))
    if ok:
        pgap = l1_gap(y, S, pol, radius)
        if pgap <= max(gap, 1e-13 * scale):
            return pol, it, max(pgap, 0.0)
    return u, it, max(gap, 0.0)


def metric_project_l2(yh, s, radius, max_iter):
    """argmin_{‖u‖₂ <= radius} ½(u-y)ᵀS(u-y) in the eigenbasis of S.

    ``yh`` is y in that basis and ``s`` the (positive) eigenvalues. The
    solution is u(μ) = S(S+μI)⁻¹y with μ >= 0 the root of ‖u(μ)‖ = radius,
    found by safeguarded Newton on 1/‖u(μ)‖ - 1/radius.
    Returns (u in eigenbasis, iterations, relative residual).
    """
    nrm = np.sqrt(yh @ yh)
    if nrm <= radius:
        return yh.copy(), 0, 0.0
    if radius <= 0.0:
        return np.zeros_like(yh), 0, 0.0
    lo = 0.0
    hi = np.max(s) * nrm / radius
    mu = 0.0
    u = yh.copy()
    it = 0
    res = 1.0
    for it in range(1, max_iter + 1):
        c = s / (s + mu)
        u = c * yh
        nu = np.sqrt(u @ u)
        res = abs(nu - radius) / radius
        if res <= 4e-16:
            break
        if nu > radius:
            lo = mu
        else:
            hi = mu
        dnu = -np.sum(s * s * yh * yh / (s + mu) ** 3) / nu
        phi = 1.0 / radius - 1.0 / nu
        dphi = dnu / (nu * nu)
        step_mu = mu - phi / dphi if dphi != 0.0 else 0.5 * (lo + hi)
        if not (lo < step_mu < hi):
            step_mu = 0.5 * (lo + hi)
        if hi - lo <= 1e-17 * max(hi, 1.0):
            break
        mu = step_mu
    nu = np.sqrt(u @ u)
    if nu > radius:
        u = u * (radius / nu)
    return u, it, res


def mnp(P, max_iter, tol):
    """Wolfe's minimum-norm-point algorithm over conv(rows of P).

    A fully corrective Frank–Wolfe method: the linear oracle picks the atom
    minimizing ⟨x, P_j⟩ and each major step re-solves the affine min-norm
    problem on the active corral. Returns (weights, point, iterations, gap).
    """
    m, d = P.shape
    lam = np.zeros(m)
    active = np.zeros(m, dtype=np.bool_)
    sq = np.zeros(m)
    for j in range(m):
        sq[j] = P[j] @ P[j]
    j0 = int(np.argmin(sq))
    lam[j0] = 1.0
    active[j0] = True
    x = P[j0].copy()
    eps = 1e-14
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        dots = P @ x
        j = int(np.argmin(dots))
        gap = x @ x - dots[j]
        if gap <= tol or active[j]:
            break
        active[j] = True
        for _ in range(m + 1):
            k = 0
            for jj in range(m):
                if active[jj]:
                    k += 1
            idx = np.empty(k, dtype=np.int64)
            kk = 0
            for jj in range(m):
                if active[jj]:
                    idx[kk] = jj
                    kk += 1
            A = np.zeros((k + 1, k + 1))
            for a in range(k):
                for b in range(k):
                    A[a, b] = P[idx[a]] @ P[idx[b]]
                A[a, k] = 1.0
                A[k, a] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol = np.linalg.lstsq(A, rhs, -1.0)[0]
            alpha = sol[:k]
            if np.min(alpha) > eps:
                for a in range(k):
                    lam[idx[a]] = alpha[a]
                break
            theta = 1.0
            for a in range(k):
                if alpha[a] <= eps:
                    den = lam[idx[a]] - alpha[a]
                    if den > 0.0:
                        theta = min(theta, lam[idx[a]] / den)
            for a in range(k):
                lam[idx[a]] = (1.0 - theta) * lam[idx[a]] + theta * alpha[a]
                if lam[idx[a]] <= eps:
                    lam[idx[a]] = 0.0
                    active[idx[a]] = False
        tot = lam.sum()
        lam /= tot
        x = lam @ P
    dots = P @ x
    gap = max(x @ x - np.min(dots), 0.0)
    return lam, x, it, gap


def vertex_argmax(x, V):
    """Index of argmax over {±V_i} of ⟨·, x⟩ as i (plus) or N+i (minus); ties to the lowest index."""
    N = V.shape[0]
    best = -np.inf
    arg = 0
    for i in range(N):
        s = V[i] @ x
        if s > best:
            best = s
            arg = i
        if -s > best:
            best = -s
            arg = N + i
    return arg
