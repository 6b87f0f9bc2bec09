"""Gaussian-pushforward bounds.

The aggregating law is U = ∇f₀(Σ^{1/2}G), the Σ^{1/2}-metric projection of
κ₀G onto ρ₀B_*. The bound is
inf e^{t/(2p)} Ω_Σ(p,κ₀,ρ₀) ν̄_Σ(κ₀,ρ₀)^{1/(2p)} over p >= 1, κ₀ > 0, ρ₀ >= 0,
for X with sub-Gamma marginals
E|⟨u,X⟩|^{2p} <= p!(η₁‖u‖_Σ)^{2p} + (2p)!(η₂‖u‖_*)^{2p}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import gammaincc
from scipy.stats import beta as beta_dist
from scipy.stats import norm as normal

from . import kernels
from .core_math import ScalarSearchDomain, minimize_scalar
from .errors import ConfigurationError, DegenerateParameters, DomainError, NumericError, SearchFailure
from .models import CovarianceSpec, NormSpec, make_rng
from .vector_bounds import BoundCertificate, default_p_domain, vertex_masses

INF = math.inf
FW_MAX_ITER = 1000
PG_MAX_ITER = 20000
SECULAR_MAX_ITER = 200
CONVERGENCE_LIMIT = 1e-6
LAMBDA_Z = float(normal.isf(1e-3))  # one-sided 10⁻³ normal quantile
TAIL_ALPHA = 1e-3


@dataclass(frozen=True)
class PushforwardParams:
    kappa0: float
    rho0: float
    tau: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not self.kappa0 > 0:
            raise DomainError(f"kappa0 must be > 0, got {self.kappa0}")
        if not self.rho0 >= 0:
            raise DomainError(f"rho0 must be >= 0, got {self.rho0}")
        if math.isinf(self.kappa0) and math.isinf(self.rho0):
            raise DomainError("kappa0 and rho0 cannot both be infinite")
        if not 0 < self.tau <= 1:
            raise DomainError(f"tau must lie in (0, 1], got {self.tau}")
        if not self.p >= 1:
            raise DomainError(f"p must be >= 1, got {self.p}")


@dataclass
class ProjectionResult:
    point: np.ndarray
    iterations: int
    residual: float
    boundary: bool


# ----------------------------------------------------------------------------
# the projection ∇f₀


def _quarter_root(cov: CovarianceSpec) -> np.ndarray:
    Q, lam = cov.eigenvectors, cov.eigenvalues
    return (Q * lam ** 0.25) @ Q.T


def _project(Y: np.ndarray, cov: CovarianceSpec, rho0: float, spec: NormSpec):
    """Rows argmin_{u ∈ ρ₀B_*} ½‖y - u‖²_{Σ^{1/2}}; returns (U, iterations, residuals)."""
    n, d = Y.shape
    zeros = np.zeros(n, dtype=np.int64), np.zeros(n)
    if rho0 == 0:
        return (np.zeros_like(Y),) + zeros
    kind = spec.kind
    if kind == "euclidean":
        if cov.is_scalar:
            nrm = np.sqrt(np.einsum("ij,ij->i", Y, Y))
            f = np.minimum(1.0, rho0 / np.where(nrm > 0, nrm, 1.0))
            return (Y * f[:, None],) + zeros
        Q = cov.eigenvectors
        s = np.sqrt(cov.eigenvalues)
        Uh, it, res = kernels.metric_project_l2_rows(np.ascontiguousarray(Y @ Q), s, float(rho0), SECULAR_MAX_ITER)
        return Uh @ Q.T, it, res
    if kind == "sup":
        if cov.is_scalar:
            return (kernels.project_l1_rows(np.ascontiguousarray(Y), float(rho0)),) + zeros
        S = np.ascontiguousarray(cov.sqrt)
        L = float(np.sqrt(cov.op))
        scale = L * rho0 * (rho0 + float(np.max(np.abs(Y).sum(axis=1), initial=0.0)))
        U, it, gap = kernels.metric_project_l1_rows(np.ascontiguousarray(Y), S, L, float(rho0), PG_MAX_ITER,
                                                    1e-14 * max(scale, 1e-300))
        return U, it, gap / max(scale, 1e-300)
    if kind == "polyhedral":
        V = spec.extreme_points()
        atoms = np.ascontiguousarray(rho0 * np.vstack([V, -V]))
        R = np.ascontiguousarray(_quarter_root(cov))
        ymax = float(np.max(np.sqrt(np.einsum("ij,ij->i", Y, Y)), initial=0.0))
        amax = float(np.max(np.linalg.norm(atoms, axis=1)))
        scale = np.sqrt(cov.op) * (amax + ymax) ** 2
        U, it, gap = kernels.mnp_rows(np.ascontiguousarray(Y), R, atoms, FW_MAX_ITER, 1e-13 * max(scale, 1e-300))
        return U, it, gap / max(scale, 1e-300)
    raise DomainError(f"no projection for dual balls of kind {kind}")


def _check_converged(res):
    worst = float(np.max(res, initial=0.0))
    if worst > CONVERGENCE_LIMIT:
        raise NumericError(f"projection did not converge (relative gap {worst:.3e})", residual=worst)


def pushforward_rows(G: np.ndarray, cov: CovarianceSpec, kappa0: float, rho0: float, spec: NormSpec):
    """U = ∇f₀(Σ^{1/2}g) for each row g of G."""
    G = np.asarray(G, dtype=float)
    if math.isinf(rho0):
        return kappa0 * G
    if math.isinf(kappa0):
        X = G if cov.is_identity else G @ cov.sqrt
        return rho0 * spec.dual_argmax(X)
    cov.require_invertible("a finite (kappa0, rho0) projection")
    U, _, res = _project(kappa0 * G, cov, rho0, spec)
    _check_converged(res)
    return U


def moreau_grad(x, cov: CovarianceSpec, params: PushforwardParams, spec: NormSpec) -> ProjectionResult:
    """∇f₀(x) = argmin_{u ∈ ρ₀B_*} ½‖κ₀Σ^{-1/2}x - u‖²_{Σ^{1/2}}."""
    x = np.asarray(x, dtype=float)
    if x.shape != spec.shape or spec.is_matrix:
        raise DomainError(f"x must be a vector of shape {spec.shape}")
    k0, r0 = params.kappa0, params.rho0
    if math.isinf(k0):
        u = r0 * spec.dual_argmax(x[None])[0]
        return ProjectionResult(u, 0, 0.0, r0 > 0)
    cov.require_invertible("the projection metric")
    y = k0 * (cov.inv_sqrt @ x)
    if math.isinf(r0):
        return ProjectionResult(y, 0, 0.0, False)
    U, it, res = _project(y[None], cov, r0, spec)
    _check_converged(res)
    u = U[0]
    on_bd = r0 > 0 and abs(spec.dual(u) - r0) <= 1e-8 * r0
    return ProjectionResult(u, int(it[0]), float(res[0]), bool(on_bd))


# ----------------------------------------------------------------------------
# tails of ‖G‖_*


@dataclass
class DualTail:
    """T_⩾(s) = P(‖G‖_* >= s) for standard Gaussian G, exact or Monte Carlo."""

    spec: NormSpec
    samples: Optional[np.ndarray] = None  # sorted ‖G‖_* draws

    @classmethod
    def build(cls, spec: NormSpec, mc_budget: int = 20000, seed: int = 0) -> "DualTail":
        if spec.kind == "euclidean":
            return cls(spec)
        d = spec.shape[0]
        G = make_rng(seed, 7).standard_normal((mc_budget, d))
        return cls(spec, np.sort(spec.dual_rows(G)))

    @property
    def exact(self) -> bool:
        return self.samples is None

    def estimate(self, s: float):
        """(T_⩾, T_<, half_width, ci_lo, ci_hi) with a two-sided 1 - 10⁻³ Clopper–Pearson interval."""
        if s < 0:
            raise DomainError("s must be >= 0")
        if s == 0:
            return 1.0, 0.0, 0.0, 1.0, 1.0
        if math.isinf(s):
            return 0.0, 1.0, 0.0, 0.0, 0.0
        if self.exact:
            T = float(gammaincc(0.5 * self.spec.shape[0], 0.5 * s * s))
            return T, 1.0 - T, 0.0, T, T
        n = len(self.samples)
        k = n - int(np.searchsorted(self.samples, s, side="left"))
        lo = float(beta_dist.ppf(TAIL_ALPHA / 2, k, n - k + 1)) if k > 0 else 0.0
        hi = float(beta_dist.ppf(1 - TAIL_ALPHA / 2, k + 1, n - k)) if k < n else 1.0
        T = k / n
        return T, 1.0 - T, 0.5 * (hi - lo), lo, hi

    def conservative(self, s: float):
        """Upper confidence values (T_⩾, T_<) for use inside upper bounds."""
        T, Tl, _, lo, hi = self.estimate(s)
        return hi, 1.0 - lo


def dual_tail_T(s: float, spec: NormSpec, mc_budget: int = 20000, seed: int = 0):
    """(T_⩾(s), T_<(s), CI half-width)."""
    T, Tl, hw, _, _ = DualTail.build(spec, mc_budget, seed).estimate(s)
    return T, Tl, hw


# ----------------------------------------------------------------------------
# Ω_Σ


def _omega_bracket(tau, p, k0, r0, cov, box_sqrt, tails):
    s = r0 / (tau * k0)
    Tg, Tl = tails.conservative(s)
    inner = k0 * ((1 - tau) * cov.op ** 0.25 * math.sqrt(cov.trace_sqrt) + tau * math.sqrt(cov.trace)
                  + math.sqrt(2 * p) * math.sqrt(cov.op))
    first = Tg ** (1 / (2 * p)) * r0 * box_sqrt if Tg > 0 else 0.0
    second = Tl ** (1 / (4 * p)) * inner if Tl > 0 else 0.0
    return first + second


def omega_eval(params: PushforwardParams, cov: CovarianceSpec, eta1: float, eta2: float, spec: NormSpec,
               tails: Optional[DualTail] = None, return_tau: bool = False):
    """Ω_Σ(p, κ₀, ρ₀), with the τ-infimum taken numerically."""
    if eta1 < 0 or eta2 < 0:
        raise DomainError("eta1, eta2 must be >= 0")
    p, k0, r0 = params.p, params.kappa0, params.rho0
    tau = 1.0
    if eta1 == 0 and eta2 == 0:
        val = 0.0
    elif math.isinf(r0):
        val = math.inf if eta2 > 0 else eta1 * math.sqrt(p) * k0 * (math.sqrt(cov.trace) + math.sqrt(2 * p * cov.op))
    else:
        box_sqrt = math.sqrt(cov.box_norm(spec))
        cap = r0 * box_sqrt
        if math.isinf(k0) or r0 == 0:
            m = cap
        else:
            tails = tails or DualTail.build(spec)
            dom = ScalarSearchDomain(1e-8, 1.0, log_scale=True, tolerance=1e-6)
            tau, m = minimize_scalar(lambda tt: _omega_bracket(tt, p, k0, r0, cov, box_sqrt, tails), dom,
                                     coarse_points=33)
            if cap <= m:
                m, tau = cap, math.nan
        val = eta1 * math.sqrt(p) * m + 2 * eta2 * p * r0
    if not (val >= 0):
        raise NumericError(f"Ω evaluated to {val}")
    return (val, tau) if return_tau else val


# ----------------------------------------------------------------------------
# λ̲_Σ and ν̄_Σ


def min_boundary_l2(spec: NormSpec) -> float:
    """min_{x ∈ ∂B} ‖x‖₂."""
    if spec.kind in ("euclidean", "sup"):
        return 1.0
    if spec.kind == "polyhedral":
        return 1.0 / float(np.max(np.linalg.norm(spec.vertices, axis=1)))
    raise DomainError(f"not available for {spec.kind}")


def gaussian_partial_moment(a: float) -> float:
    """E(a|g| - 1)₊ = 2(aφ(1/a) - Φ(-1/a)) for standard Gaussian g."""
    if a <= 0:
        return 0.0
    z = 1.0 / a
    return 2.0 * (a * float(normal.pdf(z)) - float(normal.sf(z)))


def _facet_lp_min(W: np.ndarray, w: np.ndarray, V: np.ndarray):
    """min over x ∈ ∂B of Σ_j w_j (|⟨W_j, x⟩| - 1)₊ for the polytope B = {max_i |⟨u_i,x⟩| <= 1}.

    ∂B is the union of facets {⟨u_f,x⟩ = 1} ∩ B (and their negatives, which
    give the same values); on each the objective is convex piecewise linear,
    so one LP per facet gives the exact minimum. Returns (value, x).
    """
    m, d = W.shape
    N = V.shape[0]
    c = np.concatenate([np.zeros(d), w])
    Wm = sparse.csr_matrix(W)
    Im = sparse.identity(m, format="csr")
    Vm = sparse.csr_matrix(V)
    Zn = sparse.csr_matrix((N, m))
    A_ub = sparse.vstack([
        sparse.hstack([Wm, -Im]),
        sparse.hstack([-Wm, -Im]),
        sparse.hstack([Vm, Zn]),
        sparse.hstack([-Vm, Zn]),
    ]).tocsc()
    b_ub = np.concatenate([np.ones(2 * m), np.ones(2 * N)])
    bounds = [(None, None)] * d + [(0, None)] * m
    best, best_x = math.inf, None
    for f in range(N):
        A_eq = np.concatenate([V[f], np.zeros(m)])[None, :]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
        if res.status == 0 and res.fun < best:
            best, best_x = float(res.fun), res.x[:d]
    if best_x is None:
        raise SearchFailure("facet LPs failed")
    return max(best, 0.0), best_x


def _sphere_min(U: np.ndarray, restarts: int, rng, iters: int = 300):
    """min over the unit sphere of mean_j (|⟨U_j, x⟩| - 1)₊ by projected subgradient restarts."""
    m, d = U.shape
    best, best_x = math.inf, None

    def val(x):
        return float(np.mean(np.maximum(np.abs(U @ x) - 1.0, 0.0)))

    starts = list(np.eye(d)[: min(d, restarts)]) + [rng.standard_normal(d) for _ in range(restarts)]
    for x in starts:
        x = x / np.linalg.norm(x)
        f = val(x)
        step = 0.5
        for k in range(iters):
            a = U @ x
            g = (np.sign(a) * (np.abs(a) > 1.0)) @ U / m
            g = g - (g @ x) * x
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            xn = x - step * g / gn
            xn /= np.linalg.norm(xn)
            fn = val(xn)
            if fn < f:
                x, f = xn, fn
            else:
                step *= 0.5
                if step < 1e-8:
                    break
        if f < best:
            best, best_x = f, x
    return best, best_x


@dataclass
class LambdaNu:
    lambda_lower: float
    nu_bar: float
    branch: str
    flags: tuple = ()
    details: dict = field(default_factory=dict)


def lambda_nu_eval(params: PushforwardParams, cov: CovarianceSpec, spec: NormSpec, mc_budget: int = 4000,
                   x_search_budget: int = 8, seed: int = 0, tails: Optional[DualTail] = None,
                   masses=None) -> LambdaNu:
    """λ̲_Σ(κ₀,ρ₀) (conservative lower value) and ν̄_Σ(κ₀,ρ₀)."""
    k0, r0 = params.kappa0, params.rho0
    if spec.is_matrix:
        raise DomainError("the pushforward bound is implemented for vector norms")
    rad = spec.radius_l2
    flags = []
    details = {}
    if math.isinf(r0):
        # U = κ₀G: ⟨U,x⟩ ~ κ₀‖x‖₂ g, smallest at the boundary point nearest the origin
        rmin = min_boundary_l2(spec)
        a = k0 * rmin
        lam = gaussian_partial_moment(a)
        if lam <= 0:
            raise DegenerateParameters("λ̲ underflows to 0 for this κ₀", residual=lam)
        displayed = k0 * k0 * rad * rad / (lam * lam) + 1.0
        exact_nu = 1.0 / (2.0 * float(normal.sf(1.0 / a)))
        details.update(displayed_nu_bar=displayed, exact_nu=exact_nu)
        if exact_nu < displayed:
            return LambdaNu(lam, exact_nu, "exact-gaussian-nu", ("nu-exact",), details)
        return LambdaNu(lam, displayed, "variance", (), details)

    if r0 <= 0:
        raise DegenerateParameters("ρ₀ = 0 gives U = 0 and an infinite ν", residual=0.0)

    if math.isinf(k0):
        if spec.kind not in ("sup", "polyhedral"):
            raise DomainError("the κ₀ = ∞ limit needs a finite vertex list")
        V = spec.extreme_points()
        N = V.shape[0]
        masses = masses or vertex_masses(spec, max(mc_budget, 100_000), seed)
        w = 2.0 * masses.lower(1e-3 / N)  # 2P₀(U = ρ₀u_i), conservative
        lam, x = _facet_lp_min(r0 * V, w, V)
        details["minimizer"] = x
        if lam <= 0:
            raise DegenerateParameters("λ̲ <= 0: the bound is vacuous for these parameters", residual=lam)
        return LambdaNu(lam, r0 / lam, "rho-over-lambda", (), details)

    cov.require_invertible("a finite (kappa0, rho0) pushforward")
    rng = make_rng(seed, 3)
    G = rng.standard_normal((mc_budget, spec.shape[0]))
    U = pushforward_rows(G, cov, k0, r0, spec)
    if spec.kind == "euclidean":
        emp, x = _sphere_min(U, x_search_budget, rng)
        flags.append("heuristic-x-search")
    else:
        V = spec.extreme_points()
        emp, x = _facet_lp_min(U, np.full(mc_budget, 1.0 / mc_budget), V)
    z = np.maximum(np.abs(U @ x) - 1.0, 0.0)
    se = float(np.std(z, ddof=1)) / math.sqrt(mc_budget)
    lam = emp - LAMBDA_Z * se
    details.update(lambda_point=emp, lambda_se=se, minimizer=x)
    if lam <= 0:
        raise DegenerateParameters(
            f"λ̲ lower confidence value {lam:.3e} <= 0 (point {emp:.3e}); the bound would be vacuous", residual=lam
        )
    first = r0 / lam
    if cov.invertible:
        tails = tails or DualTail.build(spec, seed=seed)
        Tg, _ = tails.conservative(r0 / k0)
        cond = cov.inv_op * cov.op
        second = k0 * k0 * (Tg * (cond - 1.0) + 1.0) * rad * rad / (lam * lam) + 1.0
    else:
        second = math.inf
        flags.append("singular-first-branch-only")
    branch = "rho-over-lambda" if first <= second else "variance"
    return LambdaNu(lam, min(first, second), branch, tuple(flags), details)


# ----------------------------------------------------------------------------
# the optimized bound


def gaussian_limit_closed_form(eta: float, cov: CovarianceSpec, t: float) -> float:
    """4√e η (3 tr Σ + (2/(3 log 2)) ‖Σ‖_op t)^{1/2}."""
    return 4.0 * math.sqrt(math.e) * eta * math.sqrt(3.0 * cov.trace + 2.0 / (3.0 * math.log(2.0)) * cov.op * t)


def gaussian_limit_chain(eta: float, cov: CovarianceSpec, t: float) -> float:
    """√e η e^{(t+log 8)/(2p)}(√tr Σ + √(2p‖Σ‖_op)) at p = 1 + t/log 8."""
    p = 1.0 + t / math.log(8.0)
    return math.sqrt(math.e) * eta * math.exp((t + math.log(8.0)) / (2 * p)) * (
        math.sqrt(cov.trace) + math.sqrt(2 * p * cov.op))


def _p_search(fn, t):
    return minimize_scalar(fn, default_p_domain(), coarse_points=25)


def theorem3_bound(cov: CovarianceSpec, spec: NormSpec, eta1: float, eta2: float, t: float,
                   budgets: Optional[dict] = None, seed: int = 0) -> BoundCertificate:
    """inf over (p, κ₀, ρ₀) of e^{t/(2p)} Ω_Σ(p,κ₀,ρ₀) ν̄_Σ(κ₀,ρ₀)^{1/(2p)}.

    Candidates: the ρ₀ = ∞ Gaussian limit (κ₀ optimized), the κ₀ = ∞ vertex
    limit (ρ₀ optimized, polytopes only) and a grid of finite (κ₀, ρ₀) pairs.
    """
    if eta1 < 0 or eta2 < 0:
        raise DomainError("eta1, eta2 must be >= 0")
    if not t >= 0:
        raise DomainError("t must be >= 0")
    if spec.is_matrix or spec.shape[0] != cov.dim:
        raise DomainError("cov and spec dimensions differ")
    b = {"mc_budget": 4000, "x_search_budget": 8, "mass_budget": 200_000, "tail_budget": 20000,
         "finite_kappa": (0.5, 1.0, 2.0), "finite_rho": (2.0, 4.0)}
    b.update(budgets or {})
    if eta1 == 0 and eta2 == 0:
        return BoundCertificate(0.0, t, "pushforward", {"p": 1.0}, details={"candidate": "zero-profile"})

    results = []  # (value, kappa0, rho0, p, tag, flags)
    failures = []
    closed = None

    # ρ₀ = ∞: Ω = η₁√p κ₀(√tr + √(2p op)), ν̄ in closed form
    if eta2 == 0:
        def gauss_obj(p):
            def in_k(k0):
                try:
                    ln = lambda_nu_eval(PushforwardParams(k0, INF), cov, spec)
                except DegenerateParameters:
                    return math.inf
                om = omega_eval(PushforwardParams(k0, INF, p=p), cov, eta1, 0.0, spec)
                return math.exp(t / (2 * p)) * om * ln.nu_bar ** (1 / (2 * p))
            return minimize_scalar(in_k, ScalarSearchDomain(1e-2, 1e2, tolerance=1e-5), coarse_points=17)

        p_opt, val = _p_search(lambda p: gauss_obj(p)[1], t)
        k_opt = gauss_obj(p_opt)[0]
        results.append((val, k_opt, INF, p_opt, "gaussian-limit", ()))
        if spec.kind == "euclidean":
            closed = gaussian_limit_closed_form(eta1, cov, t)

    # κ₀ = ∞: U = ρ₀ × (Gaussian argmax vertex)
    if spec.kind in ("sup", "polyhedral"):
        masses = vertex_masses(spec, b["mass_budget"], seed)
        cache = {}

        def vert_nu(r0):
            if r0 not in cache:
                cache[r0] = lambda_nu_eval(PushforwardParams(INF, r0), cov, spec, masses=masses, seed=seed).nu_bar
            return cache[r0]

        def vert_obj(r0):
            nu = vert_nu(r0)
            return _p_search(lambda p: math.exp(t / (2 * p)) * omega_eval(
                PushforwardParams(INF, r0, p=p), cov, eta1, eta2, spec) * nu ** (1 / (2 * p)), t)

        try:
            r_opt, val = minimize_scalar(lambda r: vert_obj(r)[1], ScalarSearchDomain(1.05, 64.0, tolerance=1e-3),
                                         coarse_points=13)
            p_opt = vert_obj(r_opt)[0]
            results.append((val, INF, r_opt, p_opt, "vertex-limit", ()))
        except (SearchFailure, DegenerateParameters) as exc:
            failures.append(f"vertex-limit: {exc}")

    # finite grid
    if cov.invertible:
        tails = DualTail.build(spec, b["tail_budget"], seed)
        rmin = min_boundary_l2(spec)
        for k0 in b["finite_kappa"]:
            for rr in b["finite_rho"]:
                r0 = rr / rmin
                try:
                    ln = lambda_nu_eval(PushforwardParams(k0, r0), cov, spec, b["mc_budget"], b["x_search_budget"],
                                        seed, tails=tails)
                except (DegenerateParameters, NumericError) as exc:
                    failures.append(f"finite({k0},{r0}): {exc}")
                    continue
                p_opt, val = _p_search(lambda p: math.exp(t / (2 * p)) * omega_eval(
                    PushforwardParams(k0, r0, p=p), cov, eta1, eta2, spec, tails) * ln.nu_bar ** (1 / (2 * p)), t)
                results.append((val, k0, r0, p_opt, "finite", ln.flags))

    if not results:
        raise SearchFailure("every pushforward parameter candidate was degenerate: " + "; ".join(failures))
    results.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    val, k0, r0, p, tag, flags = results[0]
    details = {"candidate": tag, "failures": failures, "n_candidates": len(results)}
    if closed is not None:
        details["appendix_closed_form"] = closed
        details["appendix_chain"] = gaussian_limit_chain(eta1, cov, t)
    return BoundCertificate(val, t, "pushforward", {"p": p, "kappa0": k0, "rho0": r0}, flags=tuple(flags),
                            details=details)
