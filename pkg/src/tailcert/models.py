"""Norms, moment profiles, covariances and seedable samplers.

Every sampler draw is a pure function of ``(spec, n, replica)``: the RNG is a
Philox (counter-based) generator keyed by ``mix_seed(seed, replica)``, where
``mix_seed`` is the SplitMix64 finalizer applied to ``seed + (replica+1)·γ``
with γ = 0x9E3779B97F4A7C15 and multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB. No global RNG state is touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .core_math import SpectralStats, gaussian_abs_moment, spectral_stats
from .errors import ConfigurationError, DomainError

MASK64 = (1 << 64) - 1
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SPLITMIX_M1 = 0xBF58476D1CE4E5B9
_SPLITMIX_M2 = 0x94D049BB133111EB

DEFAULT_CHUNK = 8192


def splitmix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _SPLITMIX_M1) & MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_M2) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, replica: int = 0) -> int:
    """Derive the 64-bit key of replica ``replica`` from a base seed."""
    if seed < 0 or seed > MASK64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return splitmix64(seed + (replica + 1) * SPLITMIX_GAMMA)


def make_rng(seed: int, replica: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=mix_seed(int(seed), int(replica))))


# ----------------------------------------------------------------------------
# Norms


NORM_KINDS = ("euclidean", "sup", "polyhedral", "matrix_operator", "symmetric_operator")


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A norm on ℝ^d (or on matrices) together with its dual.

    Polyhedral norms are described by the extreme points ±u_i of the dual
    ball, stored one per sign pair as the rows of ``vertices``; the primal
    norm is then max_i |⟨u_i, x⟩|.
    """

    kind: str
    shape: tuple
    vertices: Optional[np.ndarray] = None
    radius_l2: float = field(default=math.nan)
    radius_exact: bool = True

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise DomainError(f"unknown norm kind {self.kind!r}")

    # constructors -----------------------------------------------------------
    @classmethod
    def euclidean(cls, d: int) -> "NormSpec":
        return cls("euclidean", (int(d),), radius_l2=1.0)

    @classmethod
    def sup(cls, d: int) -> "NormSpec":
        return cls("sup", (int(d),), radius_l2=math.sqrt(d))

    @classmethod
    def polyhedral(cls, vertices) -> "NormSpec":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if not np.all(np.isfinite(V)):
            raise DomainError("vertices must be finite")
        N, d = V.shape
        if np.linalg.matrix_rank(V) < d:
            raise DomainError("dual-ball vertices must span R^d (otherwise the unit ball is unbounded)")
        V = V.copy()
        V.setflags(write=False)
        rad, exact = _polyhedral_radius(V)
        return cls("polyhedral", (d,), V, rad, exact)

    @classmethod
    def matrix_operator(cls, d1: int, d2: int) -> "NormSpec":
        return cls("matrix_operator", (int(d1), int(d2)), radius_l2=math.sqrt(min(d1, d2)))

    @classmethod
    def symmetric_operator(cls, ell: int) -> "NormSpec":
        return cls("symmetric_operator", (int(ell), int(ell)), radius_l2=math.sqrt(ell))

    # properties -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def is_matrix(self) -> bool:
        return self.kind in ("matrix_operator", "symmetric_operator")

    def extreme_points(self) -> np.ndarray:
        """Rows u_1..u_N with ext(B_*) = {±u_i}; only for polyhedral-type norms."""
        if self.kind == "sup":
            return np.eye(self.shape[0])
        if self.kind == "polyhedral":
            return np.asarray(self.vertices)
        raise DomainError(f"{self.kind} dual ball has no finite vertex list")

    @property
    def n_vertices(self) -> int:
        return self.extreme_points().shape[0]

    # evaluation -------------------------------------------------------------
    def _check(self, X, batch):
        X = np.asarray(X, dtype=float)
        want = self.shape if not batch else (X.shape[0],) + self.shape
        if X.shape != want:
            raise DomainError(f"dimension mismatch: expected {want}, got {X.shape}")
        return X

    def norm_rows(self, X) -> np.ndarray:
        """Primal norm of every row (every matrix for matrix kinds) of a batch."""
        X = self._check(X, batch=True)
        k = self.kind
        if k == "euclidean":
            return np.sqrt(np.einsum("ij,ij->i", X, X))
        if k == "sup":
            return np.max(np.abs(X), axis=1)
        if k == "polyhedral":
            return np.max(np.abs(X @ self.vertices.T), axis=1)
        if k == "symmetric_operator":
            return np.max(np.abs(np.linalg.eigvalsh(0.5 * (X + np.swapaxes(X, 1, 2)))), axis=1)
        return np.linalg.norm(X, ord=2, axis=(1, 2))

    def dual_rows(self, U) -> np.ndarray:
        U = self._check(U, batch=True)
        k = self.kind
        if k == "euclidean":
            return np.sqrt(np.einsum("ij,ij->i", U, U))
        if k == "sup":
            return np.sum(np.abs(U), axis=1)
        if k == "polyhedral":
            return np.array([_polyhedral_gauge(self.vertices, u) for u in U])
        if k == "symmetric_operator":
            return np.sum(np.abs(np.linalg.eigvalsh(0.5 * (U + np.swapaxes(U, 1, 2)))), axis=1)
        return np.array([np.sum(np.linalg.svd(u, compute_uv=False)) for u in U])

    def norm(self, x) -> float:
        x = self._check(x, batch=False)
        return float(self.norm_rows(x[None])[0])

    def dual(self, u) -> float:
        u = self._check(u, batch=False)
        return float(self.dual_rows(u[None])[0])

    def to_boundary(self, Z) -> np.ndarray:
        """Rescale nonzero rows onto the unit sphere ∂B of the primal norm."""
        Z = np.asarray(Z, dtype=float)
        nrm = self.norm_rows(Z)
        if np.any(nrm == 0):
            raise DomainError("cannot normalize a zero vector onto the unit sphere")
        return Z / nrm.reshape((-1,) + (1,) * (Z.ndim - 1))

    def dual_argmax(self, X) -> np.ndarray:
        """argmax_{u ∈ B_*} ⟨u, x⟩ for each row (a dual-ball extreme point)."""
        X = np.asarray(X, dtype=float)
        if self.kind == "euclidean":
            nrm = np.sqrt(np.einsum("ij,ij->i", X, X))
            out = np.zeros_like(X)
            ok = nrm > 0
            out[ok] = X[ok] / nrm[ok, None]
            return out
        V = self.extreme_points()
        S = X @ V.T
        idx = np.argmax(np.abs(S), axis=1)
        sign = np.sign(S[np.arange(len(X)), idx])
        sign[sign == 0] = 1.0
        return sign[:, None] * V[idx]

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("euclidean", "sup"):
            out["d"] = self.shape[0]
        elif self.kind == "polyhedral":
            out["vertices"] = np.asarray(self.vertices).tolist()
        elif self.kind == "matrix_operator":
            out["d1"], out["d2"] = self.shape
        else:
            out["ell"] = self.shape[0]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NormSpec":
        kind = data["kind"]
        if kind == "euclidean":
            return cls.euclidean(data["d"])
        if kind == "sup":
            return cls.sup(data["d"])
        if kind == "polyhedral":
            return cls.polyhedral(data["vertices"])
        if kind == "matrix_operator":
            return cls.matrix_operator(data["d1"], data["d2"])
        if kind == "symmetric_operator":
            return cls.symmetric_operator(data["ell"])
        raise DomainError(f"unknown norm kind {kind!r}")


def norm_eval(spec: NormSpec, x, dual: bool = False) -> float:
    return spec.dual(x) if dual else spec.norm(x)


def _polyhedral_gauge(V, u) -> float:
    # ‖u‖_* = min Σ|λ_i| subject to Σ λ_i u_i = u
    N, d = V.shape
    if not np.any(u):
        return 0.0
    A_eq = np.hstack([V.T, -V.T])
    res = linprog(np.ones(2 * N), A_eq=A_eq, b_eq=u, bounds=(0, None), method="highs")
    if res.status != 0:
        raise DomainError(f"dual norm LP failed: {res.message}")
    return float(res.fun)


def _polyhedral_radius(V, restarts: int = 64, seed: int = 0x5EED):
    """rad(B) = max ‖x‖₂ over B = {x : |⟨u_i, x⟩| <= 1}.

    Exact vertex enumeration for d <= 8, otherwise LP-based convex-maximization
    ascent from random starts (a lower estimate).
    """
    N, d = V.shape
    if d == 1:
        return 1.0 / float(np.max(np.abs(V))), True
    if d <= 8:
        halfspaces = np.vstack([np.hstack([V, -np.ones((N, 1))]), np.hstack([-V, -np.ones((N, 1))])])
        hs = HalfspaceIntersection(halfspaces, np.zeros(d))
        return float(np.max(np.linalg.norm(hs.intersections, axis=1))), True
    A_ub = np.vstack([V, -V])
    b_ub = np.ones(2 * N)
    rng = make_rng(seed)
    best = 0.0
    for _ in range(restarts):
        c = rng.standard_normal(d)
        x = None
        for _ in range(50):
            res = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=(None, None), method="highs")
            if res.status != 0:
                break
            if x is not None and np.allclose(res.x, x):
                break
            x = res.x
            c = x / np.linalg.norm(x)
        if x is not None:
            best = max(best, float(np.linalg.norm(x)))
    return best, False


# ----------------------------------------------------------------------------
# Moment profiles


PROFILE_KINDS = ("sub_gaussian", "sub_exponential", "sub_gamma", "power", "table", "gaussian_relative")


@dataclass(frozen=True, eq=False)
class MomentProfile:
    """A non-decreasing h(p) bounding directional moments by h(p)‖u‖_Σ."""

    kind: str
    eta: float = 1.0
    eta2: float = 0.0
    alpha: float = 1.0
    p_grid: Optional[tuple] = None
    h_values: Optional[tuple] = None
    base: Optional["MomentProfile"] = None
    domain_lo: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.eta < 0 or self.eta2 < 0 or self.alpha < 0:
            raise DomainError("profile parameters must be non-negative")
        if self.domain_lo < 1:
            raise DomainError("domain_lo must be >= 1")
        if self.kind == "table":
            p = np.asarray(self.p_grid, dtype=float)
            h = np.asarray(self.h_values, dtype=float)
            if p.shape != h.shape or p.size < 1 or np.any(np.diff(p) <= 0):
                raise DomainError("table profile needs strictly increasing p_grid matching h_values")
            if np.any(np.diff(h) < 0):
                raise DomainError("table profile must be non-decreasing")
        if self.kind == "gaussian_relative" and self.base is None:
            raise DomainError("gaussian_relative profile wraps a base profile")

    @classmethod
    def sub_gaussian(cls, eta: float, domain_lo: float = 1.0):
        return cls("sub_gaussian", eta=eta, domain_lo=domain_lo)

    @classmethod
    def sub_exponential(cls, eta: float, domain_lo: float = 1.0):
        return cls("sub_exponential", eta=eta, domain_lo=domain_lo)

    @classmethod
    def sub_gamma(cls, eta1: float, eta2: float, domain_lo: float = 1.0):
        return cls("sub_gamma", eta=eta1, eta2=eta2, domain_lo=domain_lo)

    @classmethod
    def power(cls, eta: float, alpha: float, domain_lo: float = 1.0):
        return cls("power", eta=eta, alpha=alpha, domain_lo=domain_lo)

    @classmethod
    def table(cls, p_grid, h_values, domain_lo: float = 1.0):
        return cls("table", p_grid=tuple(map(float, p_grid)), h_values=tuple(map(float, h_values)),
                   domain_lo=domain_lo)

    @classmethod
    def gaussian_relative(cls, base: "MomentProfile"):
        return cls("gaussian_relative", base=base, domain_lo=base.domain_lo)

    def h(self, p: float) -> float:
        k = self.kind
        if k == "sub_gaussian":
            return self.eta * math.sqrt(p)
        if k == "sub_exponential":
            return self.eta * p
        if k == "power":
            return self.eta * p ** self.alpha
        if k == "sub_gamma":
            if self.eta2 > 0:
                raise DomainError(
                    "a sub-Gamma profile with eta2 > 0 mixes ‖u‖_Σ and ‖u‖_*; it has no single h(p)"
                )
            return self.eta * math.exp(math.lgamma(0.5 * p + 1.0) / p)
        if k == "table":
            if p > self.p_grid[-1]:
                return math.inf
            return float(np.interp(p, self.p_grid, self.h_values))
        return self.base.h(p)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "domain_lo": self.domain_lo}
        if self.kind in ("sub_gaussian", "sub_exponential"):
            out["eta"] = self.eta
        elif self.kind == "sub_gamma":
            out.update(eta1=self.eta, eta2=self.eta2)
        elif self.kind == "power":
            out.update(eta=self.eta, alpha=self.alpha)
        elif self.kind == "table":
            out.update(p_grid=list(self.p_grid), h_values=list(self.h_values))
        else:
            out["base"] = self.base.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MomentProfile":
        kind = data["kind"]
        lo = float(data.get("domain_lo", 1.0))
        if kind == "sub_gaussian":
            return cls.sub_gaussian(data["eta"], lo)
        if kind == "sub_exponential":
            return cls.sub_exponential(data["eta"], lo)
        if kind == "sub_gamma":
            return cls.sub_gamma(data["eta1"], data["eta2"], lo)
        if kind == "power":
            return cls.power(data["eta"], data["alpha"], lo)
        if kind == "table":
            return cls.table(data["p_grid"], data["h_values"], lo)
        if kind == "gaussian_relative":
            return cls.gaussian_relative(cls.from_dict(data["base"]))
        raise DomainError(f"unknown profile kind {kind!r}")


# ----------------------------------------------------------------------------
# Covariance


class CovarianceSpec:
    """A PSD covariance with its eigendecomposition-derived quantities cached."""

    def __init__(self, sigma):
        S = np.array(sigma, dtype=float, ndmin=2)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DomainError(f"covariance must be square, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise DomainError("covariance has non-finite entries")
        scale = float(np.max(np.abs(S))) if S.size else 0.0
        if np.max(np.abs(S - S.T)) > 1e-10 * max(scale, 1e-300):
            raise DomainError("covariance is not symmetric")
        S = 0.5 * (S + S.T)
        lam, Q = np.linalg.eigh(S)
        top = float(lam[-1]) if lam.size else 0.0
        if lam[0] < -1e-10 * max(top, 1e-300):
            raise DomainError(f"covariance is not PSD (min eigenvalue {lam[0]:.3e})")
        lam = np.clip(lam, 0.0, None)
        self.eigenvalues = lam
        self.eigenvectors = Q
        self.sigma = S
        self.sqrt = (Q * np.sqrt(lam)) @ Q.T
        self.invertible = bool(lam[0] > 1e-12 * top) if top > 0 else False
        self.inv_sqrt = (Q / np.sqrt(lam)) @ Q.T if self.invertible else None
        self.stats: SpectralStats = spectral_stats(S)
        self.trace_sqrt = float(np.sum(np.sqrt(lam)))
        self.inv_op = float(1.0 / lam[0]) if self.invertible else math.inf
        d = S.shape[0]
        self.is_identity = bool(np.array_equal(S, np.eye(d)))
        self.is_scalar = bool(np.allclose(S, S[0, 0] * np.eye(d), rtol=0, atol=1e-14 * max(top, 1e-300)))
        for arr in (self.sigma, self.sqrt, self.eigenvalues, self.eigenvectors):
            arr.setflags(write=False)

    @classmethod
    def identity(cls, d: int) -> "CovarianceSpec":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def trace(self) -> float:
        return self.stats.trace

    @property
    def op(self) -> float:
        return self.stats.operator_norm

    @property
    def effective_rank(self) -> float:
        return self.stats.effective_rank

    def sigma_norm(self, u) -> np.ndarray:
        """‖u‖_Σ = √(uᵀΣu), row-wise for a batch."""
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", u, self.sigma, u), 0.0))

    def require_invertible(self, what: str):
        if not self.invertible:
            raise ConfigurationError(f"{what} needs an invertible covariance (Σ^(-1/2) is referenced)")

    def box_norm(self, norm: NormSpec) -> float:
        """‖Σ‖_□ = sup_{u ∈ B_*} uᵀΣu for the dual ball of ``norm``."""
        if norm.kind == "euclidean":
            return self.op
        if norm.kind in ("sup", "polyhedral"):
            V = norm.extreme_points()
            return float(np.max(np.einsum("ij,jk,ik->i", V, self.sigma, V)))
        raise DomainError(f"box norm is not defined for {norm.kind}")

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "CovarianceSpec":
        if "sigma" in data:
            return cls(data["sigma"])
        if "diag" in data:
            return cls(np.diag(np.asarray(data["diag"], dtype=float)))
        if "identity" in data:
            return cls.identity(int(data["identity"]))
        raise DomainError("covariance needs one of 'sigma', 'diag', 'identity'")


# ----------------------------------------------------------------------------
# Samplers


SAMPLER_FAMILIES = (
    "gaussian_vector",
    "product_subexp_vector",
    "rademacher_vector",
    "psd_rank_one",
    "empirical_cov",
    "matrix_series",
)
CORES = ("gaussian", "laplace", "rademacher")
_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)  # unit variance


@dataclass(frozen=True, eq=False)
class SamplerSpec:
    family: str
    seed: int
    declared_profile: Optional[MomentProfile] = None
    cov: Optional[CovarianceSpec] = None
    d: Optional[int] = None
    n: Optional[int] = None
    core: str = "gaussian"
    A_list: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in SAMPLER_FAMILIES:
            raise DomainError(f"unknown sampler family {self.family!r}")
        if self.core not in CORES:
            raise DomainError(f"unknown core distribution {self.core!r}")
        if not 0 <= int(self.seed) <= MASK64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @classmethod
    def gaussian_vector(cls, cov: CovarianceSpec, seed: int, profile: Optional[MomentProfile] = None):
        return cls("gaussian_vector", seed, profile or MomentProfile.sub_gaussian(1.0), cov=cov, d=cov.dim)

    @classmethod
    def product_subexp_vector(cls, cov: CovarianceSpec, seed: int, profile=None):
        return cls("product_subexp_vector", seed, profile or MomentProfile.sub_exponential(2.0),
                   cov=cov, d=cov.dim, core="laplace")

    @classmethod
    def rademacher_vector(cls, d: int, seed: int, profile=None):
        return cls("rademacher_vector", seed, profile or MomentProfile.sub_gaussian(1.0), d=int(d),
                   core="rademacher")

    @classmethod
    def psd_rank_one(cls, cov: CovarianceSpec, seed: int, core: str = "gaussian", profile=None):
        # (E|uᵀYYᵀu|^p)^{1/p} = ‖u‖²_Σ ((2p-1)!!)^{1/p} <= 2p ‖u‖²_Σ for Gaussian Y
        return cls("psd_rank_one", seed, profile or MomentProfile.sub_exponential(2.0), cov=cov,
                   d=cov.dim, core=core)

    @classmethod
    def empirical_cov(cls, cov: CovarianceSpec, n: int, seed: int, core: str = "gaussian", profile=None):
        """Draws the deviation n⁻¹ Σ Y_iY_iᵀ - Σ with Y_i = Σ^{1/2}·(i.i.d. core)."""
        eta = 2.0 if core == "laplace" else 1.0
        return cls("empirical_cov", seed, profile or MomentProfile.sub_exponential(eta), cov=cov,
                   d=cov.dim, n=int(n), core=core)

    @classmethod
    def matrix_series(cls, A_list, seed: int, core: str = "gaussian", profile=None):
        A = np.asarray(A_list, dtype=float)
        if A.ndim != 3:
            raise DomainError("A_list must be an (n, d1, d2) array")
        if profile is None:
            base = MomentProfile.power(1.0, 0.0, domain_lo=2.0)
            if core == "laplace":
                base = MomentProfile.power(1.0 / math.sqrt(2.0), 1.0, domain_lo=2.0)
            profile = MomentProfile.gaussian_relative(base)
        return cls("matrix_series", seed, profile, n=A.shape[0], core=core, A_list=A)

    @property
    def draw_shape(self) -> tuple:
        if self.family in ("psd_rank_one", "empirical_cov"):
            return (self.d, self.d)
        if self.family == "matrix_series":
            return tuple(self.A_list.shape[1:])
        return (self.d,)

    def with_seed(self, seed: int) -> "SamplerSpec":
        return SamplerSpec(self.family, int(seed), self.declared_profile, self.cov, self.d, self.n,
                           self.core, self.A_list)

    def to_dict(self) -> dict:
        out = {"family": self.family, "seed": int(self.seed), "core": self.core}
        if self.declared_profile is not None:
            out["declared_profile"] = self.declared_profile.to_dict()
        if self.cov is not None:
            out["cov"] = self.cov.to_dict()
        if self.family == "rademacher_vector":
            out["d"] = self.d
        if self.n is not None and self.family == "empirical_cov":
            out["n"] = self.n
        if self.A_list is not None:
            out["A_list"] = self.A_list.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerSpec":
        fam = data["family"]
        seed = int(data.get("seed", 0))
        core = data.get("core", "gaussian")
        prof = MomentProfile.from_dict(data["declared_profile"]) if "declared_profile" in data else None
        cov = CovarianceSpec.from_dict(data["cov"]) if "cov" in data else None
        if fam == "gaussian_vector":
            return cls.gaussian_vector(cov, seed, prof)
        if fam == "product_subexp_vector":
            return cls.product_subexp_vector(cov, seed, prof)
        if fam == "rademacher_vector":
            return cls.rademacher_vector(data["d"], seed, prof)
        if fam == "psd_rank_one":
            return cls.psd_rank_one(cov, seed, core, prof)
        if fam == "empirical_cov":
            return cls.empirical_cov(cov, data["n"], seed, core, prof)
        if fam == "matrix_series":
            return cls.matrix_series(data["A_list"], seed, core, prof)
        raise DomainError(f"unknown sampler family {fam!r}")


def _core(rng: np.random.Generator, core: str, shape) -> np.ndarray:
    if core == "gaussian":
        return rng.standard_normal(shape)
    if core == "laplace":
        return rng.laplace(0.0, _LAPLACE_SCALE, shape)
    return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0


def _linear(cov: CovarianceSpec, Y: np.ndarray) -> np.ndarray:
    if cov.is_identity:
        return Y
    return Y @ cov.sqrt  # sqrt is symmetric


def _draw(spec: SamplerSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    fam = spec.family
    if fam in ("gaussian_vector", "product_subexp_vector"):
        return _linear(spec.cov, _core(rng, spec.core, (m, spec.d)))
    if fam == "rademacher_vector":
        return _core(rng, "rademacher", (m, spec.d))
    if fam == "psd_rank_one":
        Y = _linear(spec.cov, _core(rng, spec.core, (m, spec.d)))
        return Y[:, :, None] * Y[:, None, :]
    if fam == "empirical_cov":
        Y = _linear(spec.cov, _core(rng, spec.core, (m, spec.n, spec.d)))
        return np.einsum("kni,knj->kij", Y, Y) / spec.n - spec.cov.sigma
    xi = _core(rng, spec.core, (m, spec.n))
    A = spec.A_list
    return (xi @ A.reshape(A.shape[0], -1)).reshape((m,) + A.shape[1:])


def _chunk_rows(spec: SamplerSpec, chunk: Optional[int]) -> int:
    if chunk:
        return int(chunk)
    per = int(np.prod(spec.draw_shape))
    if spec.family == "empirical_cov":
        per = spec.n * spec.d
    return max(1, min(DEFAULT_CHUNK, 4_000_000 // max(per, 1)))


def iter_samples(spec: SamplerSpec, n: int, replica: int = 0, chunk: Optional[int] = None) -> Iterator[np.ndarray]:
    """Yield the n draws of replica ``replica`` in consecutive blocks.

    The block size is fixed by the sampler parameters alone, so the concatenated stream
    is identical to ``sample(spec, n, replica)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = make_rng(spec.seed, replica)
    step = _chunk_rows(spec, chunk)
    done = 0
    while done < n:
        m = min(step, n - done)
        yield _draw(spec, rng, m)
        done += m


def sample(spec: SamplerSpec, n: int, replica: int = 0) -> np.ndarray:
    return np.concatenate(list(iter_samples(spec, n, replica)), axis=0)


def analytic_marginal_moment(spec: SamplerSpec, u, p: float):
    """Closed-form E|⟨u, X⟩|^p where known, else ``None`` (use Monte Carlo)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.d,) or spec.family not in ("gaussian_vector", "product_subexp_vector", "rademacher_vector"):
        return None
    if spec.family == "gaussian_vector":
        return float(spec.cov.sigma_norm(u)) ** p * gaussian_abs_moment(p)
    if spec.d != 1:
        return None
    if spec.family == "rademacher_vector":
        return abs(float(u[0])) ** p
    # Laplace(b) has E|ξ|^p = Γ(p+1) b^p
    s = abs(float(u[0])) * math.sqrt(spec.cov.sigma[0, 0]) * _LAPLACE_SCALE
    return math.exp(math.lgamma(p + 1.0)) * s ** p
