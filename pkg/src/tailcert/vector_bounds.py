"""Tail bounds for norms of random vectors.

All bounds hold with probability at least 1 - e^{-t}. The generic engine
minimizes e^{t/p} (E₀ M_X(U,p))^{1/p} ν^{1/p} over p; the Euclidean and
polyhedral routines instantiate it for particular aggregating laws P₀.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog
from scipy.stats import beta as beta_dist

from . import kernels
from .core_math import LOG2, ScalarSearchDomain, minimize_scalar
from .errors import DomainError, SearchFailure
from .models import CovarianceSpec, MomentProfile, NormSpec, make_rng

METHODS = (
    "lemma1_generic",
    "theorem2",
    "corollary_subgauss",
    "corollary_subexp",
    "polyhedral",
    "linf_gaussian",
    "pushforward",
    "psd_sum",
    "sample_cov",
    "matrix_series",
    "coupling",
)
EXPLICIT_METHODS = frozenset(
    ("lemma1_generic", "theorem2", "corollary_subgauss", "corollary_subexp", "polyhedral", "linf_gaussian",
     "pushforward", "coupling")
)
P_MAX = 1e4
PI_CONFIDENCE = 1e-3


@dataclass
class BoundCertificate:
    """A computed bound on the 1 - e^{-t} quantile of ‖X‖ and how it was obtained."""

    bound_value: float
    confidence_t: float
    method: str
    optimal_params: dict = field(default_factory=dict)
    constant_mode: str = "explicit"
    calibration: Optional[object] = None
    flags: tuple = ()
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not (self.bound_value >= 0 and math.isfinite(self.bound_value)):
            raise DomainError(f"bound_value must be finite and >= 0, got {self.bound_value}")
        if not self.confidence_t >= 0:
            raise DomainError("confidence_t must be >= 0")
        if self.constant_mode == "explicit" and self.method not in EXPLICIT_METHODS:
            raise DomainError(f"{self.method} carries an unspecified constant and must be calibrated")
        if self.constant_mode == "calibrated" and self.calibration is None:
            raise DomainError("calibrated certificates need their calibration constant")

    @property
    def level(self) -> float:
        """Probability level 1 - e^{-t} of the bound."""
        return -math.expm1(-self.confidence_t)

    def to_dict(self) -> dict:
        cal = self.calibration
        return {
            "bound_value": self.bound_value,
            "confidence_t": self.confidence_t,
            "method": self.method,
            "optimal_params": {k: _jsonable(v) for k, v in self.optimal_params.items()},
            "constant_mode": self.constant_mode,
            "calibration": cal.to_dict() if cal is not None else None,
            "flags": list(self.flags),
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, np.integer):
        return int(v)
    return v


def default_p_domain(lo: float = 1.0, hi: float = P_MAX) -> ScalarSearchDomain:
    return ScalarSearchDomain(max(1.0, lo), hi, log_scale=True, tolerance=1e-4)


# ----------------------------------------------------------------------------
# generic engine


def lemma1_bound(
    moment_fn: Callable[[float], float],
    nu: float,
    t: float,
    domain: Optional[ScalarSearchDomain] = None,
    log_moment: bool = False,
) -> BoundCertificate:
    """inf_p e^{t/p} (moment_fn(p))^{1/p} ν^{1/p}.

    ``moment_fn`` returns E₀ M_X(U,p), or its logarithm when ``log_moment``.
    """
    if not nu >= 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    domain = domain or default_p_domain()
    log_nu = math.log(nu)

    def objective(p):
        lm = moment_fn(p) if log_moment else _safe_log(moment_fn(p))
        if lm == -math.inf:
            return 0.0
        return math.exp((t + lm + log_nu) / p)

    p_opt, val = minimize_scalar(objective, domain)
    return BoundCertificate(val, t, "lemma1_generic", {"p": p_opt})


def _safe_log(x):
    if x < 0:
        raise DomainError("moment values must be non-negative")
    if x == 0:
        return -math.inf
    return math.log(x) if math.isfinite(x) else math.inf


# ----------------------------------------------------------------------------
# Euclidean norm


def theorem2_objective(p: float, profile: MomentProfile, cov: CovarianceSpec, t: float) -> float:
    h = profile.h(p)
    if h == 0:
        return 0.0
    return 2.0 * h / math.sqrt(p) * math.sqrt(cov.trace + 0.5 * p * cov.op) * math.exp((t + LOG2) / p)


def theorem2_bound(
    profile: MomentProfile,
    cov: CovarianceSpec,
    t: float,
    domain: Optional[ScalarSearchDomain] = None,
) -> BoundCertificate:
    """Euclidean-norm bound inf_{p>=2} 2p^{-1/2} h(p)(tr Σ + (p/2)‖Σ‖_op)^{1/2} e^{(t+log 2)/p}."""
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if domain is None:
        hi = P_MAX
        if profile.kind == "table":
            hi = min(hi, profile.p_grid[-1])
        domain = default_p_domain(max(2.0, profile.domain_lo), hi)
    elif domain.lo < 2:
        raise DomainError("the p-search domain must lie in [2, inf)")
    p_opt, val = minimize_scalar(lambda p: theorem2_objective(p, profile, cov, t), domain)
    return BoundCertificate(val, t, "theorem2", {"p": p_opt})


def closed_form_euclidean(kind: str, eta: float, cov: CovarianceSpec, t: float) -> BoundCertificate:
    """Explicit sub-Gaussian / sub-exponential Euclidean bounds."""
    if eta < 1:
        raise DomainError(f"eta must be >= 1, got {eta}")
    tr, op = cov.trace, cov.op
    if kind == "sub_gaussian":
        if t < 0:
            raise DomainError("t must be non-negative")
        return BoundCertificate(6.0 * eta * math.sqrt(tr + t * op), t, "corollary_subgauss")
    if kind == "sub_exponential":
        if t < 1:
            raise DomainError(f"the sub-exponential closed form requires t >= 1, got t={t}")
        val = 4.0 * math.sqrt(math.e) * eta * (math.sqrt(t * tr) + t * math.sqrt(op))
        return BoundCertificate(val, t, "corollary_subexp")
    raise DomainError(f"unknown closed-form kind {kind!r}")


# ----------------------------------------------------------------------------
# polyhedral norms of a standard Gaussian vector


@dataclass
class VertexMasses:
    """Monte Carlo masses P₀(U = ±u_i) of the Gaussian vertex-argmax law."""

    counts: np.ndarray  # hits of the pair {+u_i, -u_i}
    n: int
    exact: Optional[np.ndarray] = None  # exact per-pair masses when known

    def point(self) -> np.ndarray:
        """P₀(U = u_i), sign-symmetrized (half the pair mass)."""
        if self.exact is not None:
            return self.exact / 2
        return self.counts / (2.0 * self.n)

    def lower(self, alpha: float) -> np.ndarray:
        if self.exact is not None:
            return self.exact / 2
        k = self.counts
        lo = np.where(k > 0, beta_dist.ppf(alpha, np.maximum(k, 1), self.n - k + 1), 0.0)
        return lo / 2

    def upper(self, alpha: float) -> np.ndarray:
        if self.exact is not None:
            return self.exact / 2
        k = self.counts
        hi = np.where(k < self.n, beta_dist.ppf(1 - alpha, k + 1, np.maximum(self.n - k, 1)), 1.0)
        return hi / 2


def vertex_masses(spec: NormSpec, mc_budget: int, seed: int) -> VertexMasses:
    V = spec.extreme_points()
    N, d = V.shape
    if spec.kind == "sup":
        return VertexMasses(np.zeros(N), 0, exact=np.full(N, 1.0 / N))
    rng = make_rng(seed, 0)
    counts = np.zeros(N, dtype=np.int64)
    done = 0
    step = max(1, min(65536, 4_000_000 // max(d, 1)))
    while done < mc_budget:
        m = min(step, mc_budget - done)
        idx = kernels.vertex_argmax_rows(rng.standard_normal((m, d)), V)
        counts += np.bincount(idx % N, minlength=N)
        done += m
    return VertexMasses(counts, int(mc_budget))


@dataclass
class PolyhedralConstants:
    k: int
    c_k: float
    pi_k: float
    search_budget: int
    minimizer: Optional[np.ndarray] = None
    c_exact: bool = True
    flags: tuple = ()


def kth_largest_abs(V: np.ndarray, x: np.ndarray, k: int) -> float:
    a = np.sort(np.abs(V @ x))[::-1]
    return float(a[k - 1])


def _face_lp(V, J, j, sign):
    """min m s.t. sign⟨u_j,x⟩ = 1, |⟨u_i,x⟩| <= 1 (i ∈ J), |⟨u_i,x⟩| <= m otherwise."""
    N, d = V.shape
    rest = np.setdiff1d(np.arange(N), J)
    c = np.zeros(d + 1)
    c[-1] = 1.0
    rows, rhs = [], []
    for i in rest:
        rows.append(np.append(V[i], -1.0))
        rows.append(np.append(-V[i], -1.0))
        rhs += [0.0, 0.0]
    for i in J:
        if i == j:
            continue
        rows.append(np.append(V[i], 0.0))
        rows.append(np.append(-V[i], 0.0))
        rhs += [1.0, 1.0]
    A_ub = np.array(rows) if rows else None
    b_ub = np.array(rhs) if rows else None
    A_eq = np.append(sign * V[j], 0.0)[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0:
        return None
    return res.x[:d]


def c_k_search(spec: NormSpec, k: int, search_budget: int = 64, seed: int = 0):
    """c_k = 1 / min_{x ∈ ∂B} (k-th largest |⟨u_i,x⟩|).

    Exact by enumerating the LPs over all (k-1)-subsets when that costs at
    most ``search_budget`` · 8 LPs, else LP-based alternating descent from
    ``search_budget`` random starts (then c_k is a lower estimate).
    Returns (c_k, minimizer, exact).
    """
    V = spec.extreme_points()
    N, d = V.shape
    if not 1 <= k <= N:
        raise DomainError(f"k must lie in [1, {N}], got {k}")
    if k == 1:
        # every boundary point has max_i |⟨u_i,x⟩| = 1
        x = _face_lp(V, np.arange(N), 0, 1.0)
        return 1.0, x, True
    n_lp = math.comb(N, k - 1) * (k - 1) * 2
    best_val, best_x = math.inf, None
    if n_lp <= 8 * max(search_budget, 1):
        exact = True
        for J in itertools.combinations(range(N), k - 1):
            J = np.array(J)
            for j in J:
                for sign in (1.0, -1.0):
                    x = _face_lp(V, J, j, sign)
                    if x is None:
                        continue
                    val = kth_largest_abs(V, x, k)
                    if val < best_val:
                        best_val, best_x = val, x
    else:
        exact = False
        rng = make_rng(seed, 17)
        for _ in range(search_budget):
            x = rng.standard_normal(d)
            x = x / np.max(np.abs(V @ x))
            seen = set()
            for _ in range(32):
                order = np.argsort(-np.abs(V @ x), kind="stable")
                J = np.sort(order[: k - 1])
                j = int(order[0])
                key = (tuple(J), j)
                if key in seen:
                    break
                seen.add(key)
                sign = 1.0 if V[j] @ x >= 0 else -1.0
                xn = _face_lp(V, J, j, sign)
                if xn is None:
                    break
                x = xn
                val = kth_largest_abs(V, x, k)
                if val < best_val:
                    best_val, best_x = val, x
    if best_x is None:
        raise SearchFailure(f"no feasible boundary point found for k={k}")
    c = math.inf if best_val <= 1e-12 else 1.0 / best_val
    return c, best_x, exact


def polyhedral_constants(
    spec: NormSpec,
    k: int,
    mc_budget: int = 200_000,
    search_budget: int = 64,
    seed: int = 0,
    masses: Optional[VertexMasses] = None,
) -> PolyhedralConstants:
    """(c_k, π_k) for the Gaussian vertex-argmax law on ext(B_*).

    π_k is the sum of the k smallest per-vertex masses, each replaced by a
    one-sided Clopper–Pearson lower bound at level 10⁻³/N (exact for the sup
    norm by symmetry).
    """
    if spec.kind not in ("sup", "polyhedral"):
        raise DomainError("polyhedral constants need a sup or polyhedral norm")
    N = spec.n_vertices
    if not 1 <= k <= N:
        raise DomainError(f"k must lie in [1, {N}], got {k}")
    flags = []
    if spec.kind == "sup":
        c_k = 1.0 if k == 1 else math.inf
        x = np.zeros(spec.shape[0])
        x[0] = 1.0
        c_exact = True
    else:
        c_k, x, c_exact = c_k_search(spec, k, search_budget, seed)
        if not c_exact:
            flags.append("heuristic-c_k")
    masses = masses or vertex_masses(spec, mc_budget, seed)
    lo = np.sort(masses.lower(PI_CONFIDENCE / N))
    pi_k = float(np.sum(lo[:k]))
    if masses.exact is None and np.any(masses.counts[np.argsort(masses.counts)[:k]] == 0):
        flags.append("zero-mass-vertex")
    return PolyhedralConstants(k, c_k, pi_k, search_budget, x, c_exact, tuple(flags))


def _weighted_norm_sum_upper(masses: VertexMasses, sq_norms: np.ndarray, p: float, alpha: float) -> float:
    """Upper bound on Σ_i 2P₀(U=u_i)‖u_i‖₂^{2p} over the mass confidence box."""
    with np.errstate(over="ignore"):
        a = sq_norms ** p
    if masses.exact is not None:
        return float(np.sum(masses.exact * a))
    lo = 2 * masses.lower(alpha)
    hi = np.minimum(2 * masses.upper(alpha), 1.0)
    w = lo.copy()
    budget = 1.0 - w.sum()
    for i in np.argsort(-a, kind="stable"):
        if budget <= 0:
            break
        add = min(hi[i] - lo[i], budget)
        w[i] += add
        budget -= add
    return float(np.sum(w * a))


def polyhedral_bound(
    spec: NormSpec,
    t: float,
    k_range=None,
    mc_budget: int = 200_000,
    search_budget: int = 64,
    seed: int = 0,
) -> BoundCertificate:
    """Bound on ‖G‖ for standard Gaussian G and a polyhedral norm.

    Evaluates both the simplified closed form
    √(2e) max‖u_i‖₂ min_k c_k max{1, √(t - log π_k)} and the sharper
    p-optimized form with the vertex-mass weighted sum, reporting the smaller.
    """
    if not t >= 0:
        raise DomainError("t must be >= 0")
    if spec.kind not in ("sup", "polyhedral"):
        raise DomainError("polyhedral_bound needs a sup or polyhedral norm")
    V = spec.extreme_points()
    N = V.shape[0]
    k_range = list(k_range) if k_range is not None else list(range(1, N + 1) if spec.kind == "polyhedral" else [1])
    masses = vertex_masses(spec, mc_budget, seed)
    sq = np.einsum("ij,ij->i", V, V)
    umax = math.sqrt(float(np.max(sq)))
    best = (math.inf, None, None, None)  # value, k, p, form
    flags = set()
    per_k = {}
    for k in k_range:
        pc = polyhedral_constants(spec, k, mc_budget, search_budget, seed, masses)
        flags.update(pc.flags)
        per_k[k] = pc
        if not (math.isfinite(pc.c_k) and pc.pi_k > 0):
            continue
        simple = math.sqrt(2 * math.e) * umax * pc.c_k * max(1.0, math.sqrt(t - math.log(pc.pi_k)))
        if simple < best[0]:
            best = (simple, k, max(1.0, t - math.log(pc.pi_k)), "simplified")
        alpha = PI_CONFIDENCE / N

        def sharp(p, pc=pc):
            W = _weighted_norm_sum_upper(masses, sq, p, alpha)
            return math.exp(t / (2 * p)) * math.sqrt(2 * p) * W ** (1 / (2 * p)) * pc.c_k * pc.pi_k ** (-1 / (2 * p))

        p_opt, val = minimize_scalar(sharp, default_p_domain())
        if val < best[0]:
            best = (val, k, p_opt, "sharp")
    if best[1] is None:
        raise SearchFailure("no k gives a finite polyhedral bound (c_k infinite or π_k = 0 for every k)")
    value, k, p, form = best
    method = "linf_gaussian" if spec.kind == "sup" else "polyhedral"
    pc = per_k[k]
    return BoundCertificate(
        value, t, method, {"p": p, "k": k}, flags=tuple(sorted(flags)),
        details={"form": form, "c_k": pc.c_k, "pi_k": pc.pi_k},
    )


def linf_gaussian_bound(d: int, t: float) -> BoundCertificate:
    """‖G‖_∞ <= √(2e(log(2d)+t)) for standard Gaussian G ∈ ℝ^d."""
    return polyhedral_bound(NormSpec.sup(d), t)
