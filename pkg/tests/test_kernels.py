import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailcert import kernels
from tailcert._options import HAVE_NUMBA
from tailcert.kernels import get_backend

npk = get_backend("numpy")
BACKENDS = [npk] + ([get_backend("numba")] if HAVE_NUMBA else [])
ids = [b.NAME for b in BACKENDS]


def l1_oracle(y, r):
    # bisection on the soft-threshold level
    if np.abs(y).sum() <= r:
        return y.copy()
    lo, hi = 0.0, np.abs(y).max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.maximum(np.abs(y) - mid, 0).sum() > r:
            lo = mid
        else:
            hi = mid
    return np.sign(y) * np.maximum(np.abs(y) - hi, 0)


def test_active_backend_is_listed():
    assert kernels.NAME in ("numba", "numpy")


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("cuda")


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
@given(st.integers(0, 2 ** 31), st.integers(1, 12), st.floats(0.1, 5.0))
def test_project_l1_matches_bisection(k, seed, d, r):
    Y = np.random.default_rng(seed).standard_normal((8, d)) * 3
    out = k.project_l1_rows(Y, r)
    for y, u in zip(Y, out):
        assert np.allclose(u, l1_oracle(y, r), atol=1e-9)
        assert np.abs(u).sum() <= r * (1 + 1e-12) or np.array_equal(u, y)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_metric_l2_kkt(k, rng):
    d = 6
    s = rng.uniform(0.2, 3.0, d)
    Y = rng.standard_normal((50, d)) * 4
    U, it, res = k.metric_project_l2_rows(Y, s, 1.0, 200)
    nrm = np.linalg.norm(U, axis=1)
    assert np.all(nrm <= 1 + 1e-12)
    for y, u in zip(Y, U):
        if np.linalg.norm(y) <= 1:
            assert np.array_equal(u, y)
            continue
        # S(y - u) is parallel to u at the optimum
        g = s * (y - u)
        cos = g @ u / (np.linalg.norm(g) * np.linalg.norm(u))
        assert cos == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_metric_l1_gap(k, rng):
    d = 5
    A = rng.standard_normal((d, d))
    S = A @ A.T / d + 0.2 * np.eye(d)
    L = float(np.linalg.eigvalsh(S)[-1])
    Y = rng.standard_normal((30, d)) * 3
    U, it, gap = k.metric_project_l1_rows(Y, S, L, 1.0, 20000, 1e-13)
    assert np.all(np.abs(U).sum(axis=1) <= 1 + 1e-9)
    # no feasible candidate does better
    obj = lambda u, y: 0.5 * (y - u) @ S @ (y - u)
    for y, u in zip(Y[:5], U[:5]):
        for _ in range(200):
            v = l1_oracle(u + 0.05 * rng.standard_normal(d), 1.0)
            assert obj(u, y) <= obj(v, y) + 1e-9


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_mnp_identity_metric_is_euclidean_projection(k, rng):
    d = 4
    V = np.eye(d)
    atoms = np.vstack([V, -V])
    Y = rng.standard_normal((40, d)) * 2
    U, it, gap = k.mnp_rows(Y, np.eye(d), atoms, 1000, 1e-13)
    for y, u in zip(Y, U):
        assert np.allclose(u, l1_oracle(y, 1.0), atol=1e-6)


@pytest.mark.parametrize("k", BACKENDS, ids=ids)
def test_vertex_argmax(k, rng):
    X = rng.standard_normal((500, 3))
    V = np.array([[1.0, 0, 0], [0, 1, 1], [1, -1, 0]])
    idx = k.vertex_argmax_rows(X, V)
    S = X @ V.T
    best = np.max(np.abs(S), axis=1)
    i = idx % 3
    sgn = np.where(idx < 3, 1.0, -1.0)
    assert np.allclose(sgn * S[np.arange(500), i], best)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_backend_parity(rng):
    nb = get_backend("numba")
    d = 6
    Y = rng.standard_normal((200, d)) * 3
    A = rng.standard_normal((d, d))
    S = A @ A.T / d + 0.1 * np.eye(d)
    s, Q = np.linalg.eigh(S)
    R = Q @ np.diag(s ** 0.25) @ Q.T
    atoms = np.vstack([np.eye(d), -np.eye(d)])
    assert np.allclose(nb.project_l1_rows(Y, 1.0), npk.project_l1_rows(Y, 1.0), atol=1e-12)
    assert np.array_equal(nb.vertex_argmax_rows(Y, np.eye(d)), npk.vertex_argmax_rows(Y, np.eye(d)))
    a = nb.metric_project_l2_rows(Y @ Q, np.sqrt(s), 1.0, 200)[0]
    b = npk.metric_project_l2_rows(Y @ Q, np.sqrt(s), 1.0, 200)[0]
    assert np.allclose(a, b, atol=1e-10)
    a = nb.metric_project_l1_rows(Y[:20], S, float(s[-1]), 1.0, 5000, 1e-14)[0]
    b = npk.metric_project_l1_rows(Y[:20], S, float(s[-1]), 1.0, 5000, 1e-14)[0]
    assert np.allclose(a, b, atol=1e-7)
    a = nb.mnp_rows(Y[:20], R, atoms, 1000, 1e-13)[0]
    b = npk.mnp_rows(Y[:20], R, atoms, 1000, 1e-13)[0]
    assert np.allclose(a, b, atol=1e-7)
