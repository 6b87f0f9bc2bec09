"""Bounds through a coupling (X, Y).

For F(X) and a conditional law of Y given X, ν_F = sup_x 1/P(Y >= F(x) | X=x)
converts moments and tails of Y into bounds on F(X):

    F(X) <= b + e^{t/p} (E(Y-b)₊^p)^{1/p} ν_F^{1/p}   w.p. >= 1 - e^{-t},
    P(F(X) >= s) <= ν_F P(Y >= s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .core_math import LOG2, ScalarSearchDomain, minimize_scalar
from .errors import DomainError, SearchFailure, UnboundedNu
from .models import SamplerSpec, make_rng, mix_seed, sample
from .vector_bounds import P_MAX, BoundCertificate

B_GRID_POINTS = 33


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """X from a sampler, Y drawn given X, and the target functional F.

    ``conditional_y(X, rng)`` returns one draw of Y per row of X and must be
    deterministic given the generator state. ``F(X)`` acts row-wise.
    ``support_probe`` lists probe points for ν_F; None probes sampled X.
    """

    x_sampler: SamplerSpec
    conditional_y: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    support_probe: Optional[np.ndarray] = None
    name: str = "custom"

    def draw(self, n: int, seed: int, replica: int = 0):
        """n joint draws (X, F(X), Y)."""
        X = sample(self.x_sampler.with_seed(mix_seed(self.x_sampler.seed, seed)), n, replica)
        rng = make_rng(seed, 1000 + replica)
        return X, np.asarray(self.F(X), dtype=float), np.asarray(self.conditional_y(X, rng), dtype=float)


def identity_coupling(x_sampler: SamplerSpec, F: Callable) -> CouplingSpec:
    """Y = F(X), for which ν_F = 1."""
    return CouplingSpec(x_sampler, lambda X, rng: F(X), F, name="identity")


def shifted_gaussian_coupling(x_sampler: SamplerSpec, F: Callable, shift: float = 0.0,
                              scale: float = 1.0) -> CouplingSpec:
    """Y | X ~ Normal(F(X) + shift, scale²)."""
    def cond(X, rng):
        f = F(X)
        return f + shift + scale * rng.standard_normal(np.shape(f))
    return CouplingSpec(x_sampler, cond, F, name="shifted-gaussian")


def example2_coupling(x_sampler: SamplerSpec) -> CouplingSpec:
    """F(x) = ‖x‖_∞ and Y = |X_J| with J uniform on the coordinates; ν_F = d."""
    def cond(X, rng):
        J = rng.integers(0, X.shape[1], size=X.shape[0])
        return np.abs(X[np.arange(X.shape[0]), J])
    return CouplingSpec(x_sampler, cond, lambda X: np.max(np.abs(X), axis=1), name="example2")


# ----------------------------------------------------------------------------
# ν_F


@dataclass
class NuFEstimate:
    """Estimate of ν_F over the probed support.

    The probe with the smallest conditional frequency is chosen on one set of
    Y draws and re-estimated on fresh draws; ``value`` inverts a one-sided
    lower confidence bound at level ``conf`` and ``ci`` is the matching
    two-sided interval for 1/P at that probe.
    """

    value: float
    point: float
    ci: tuple
    worst_probe: int
    n_probes: int
    n_y_per_x: int
    zero_probes: tuple = ()
    flags: tuple = ()


def _conditional_hits(coupling: CouplingSpec, x, n_y, seed, index, replica):
    Xr = np.repeat(np.asarray(x, dtype=float)[None], n_y, axis=0)
    f = float(np.asarray(coupling.F(Xr[:1]))[0])
    y = np.asarray(coupling.conditional_y(Xr, make_rng(seed, 2 * (index + 1) + replica)), dtype=float)
    return int(np.sum(y >= f))


def nu_F_estimate(coupling: CouplingSpec, n_x: int = 100, n_y_per_x: int = 1000, seed: int = 0,
                  conf: float = 0.99) -> NuFEstimate:
    if n_x < 1 or n_y_per_x < 1:
        raise DomainError("budgets must be positive")
    if coupling.support_probe is not None:
        probes = np.atleast_2d(np.asarray(coupling.support_probe, dtype=float))
    else:
        probes = sample(coupling.x_sampler.with_seed(mix_seed(coupling.x_sampler.seed, seed)), n_x)
    hits = np.array([_conditional_hits(coupling, x, n_y_per_x, seed, i, 0) for i, x in enumerate(probes)])
    zero = tuple(int(i) for i in np.flatnonzero(hits == 0))
    if len(zero) == len(probes):
        raise UnboundedNu("P(Y >= F(x) | X=x) was zero at every probe")
    flags = ("zero_success_probes",) if zero else ()
    worst = int(np.lexsort((np.arange(len(hits)), hits))[0])
    k = _conditional_hits(coupling, probes[worst], n_y_per_x, seed, worst, 1)
    m = n_y_per_x
    a = 1.0 - conf
    p_lo = float(beta_dist.ppf(a, k, m - k + 1)) if k > 0 else 0.0
    p_lo2 = float(beta_dist.ppf(a / 2, k, m - k + 1)) if k > 0 else 0.0
    p_hi2 = float(beta_dist.ppf(1 - a / 2, k + 1, m - k)) if k < m else 1.0
    inv = lambda q: 1.0 / q if q > 0 else math.inf
    if zero:
        value = point = math.inf
    else:
        value = max(1.0, inv(p_lo))
        point = max(1.0, inv(k / m))
    return NuFEstimate(value, point, (max(1.0, inv(p_hi2)), inv(p_lo2)), worst, len(probes), m, zero, flags)


# ----------------------------------------------------------------------------
# moment and tail bounds


def default_b_grid(y_sample) -> np.ndarray:
    """33 points geometric around the sample median of Y (or of |Y| if that median is <= 0)."""
    y = np.asarray(y_sample, dtype=float)
    med = float(np.median(y))
    if med <= 0:
        med = float(np.median(np.abs(y))) or 1.0
    return med * 2.0 ** np.linspace(-4.0, 4.0, B_GRID_POINTS)


def _mc_y_moment(y: np.ndarray):
    def m(p, b):
        with np.errstate(over="ignore"):
            return float(np.mean(np.maximum(y - b, 0.0) ** p))
    return m


def coupling_tail_bound(
    coupling: Optional[CouplingSpec],
    t: float,
    nu: float,
    b_grid: Optional[Sequence[float]] = None,
    p_domain: Optional[ScalarSearchDomain] = None,
    y_moment: Optional[Callable[[float, float], float]] = None,
    n_mc: int = 100_000,
    seed: int = 0,
) -> BoundCertificate:
    """min_b inf_p b + e^{t/p} (E(Y-b)₊^p)^{1/p} ν^{1/p}.

    ``y_moment(p, b)`` supplies E(Y-b)₊^p; without it the moment is estimated
    from n_mc joint draws of the coupling.
    """
    if not nu >= 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if y_moment is None:
        if coupling is None:
            raise DomainError("need a coupling or a y_moment estimator")
        _, _, y = coupling.draw(n_mc, seed)
        y_moment = _mc_y_moment(y)
        if b_grid is None:
            b_grid = default_b_grid(y)
    if b_grid is None:
        raise DomainError("b_grid is required with an explicit y_moment")
    p_domain = p_domain or ScalarSearchDomain(1.0, P_MAX, log_scale=True, tolerance=1e-6)
    log_nu = math.log(nu)
    best = (math.inf, None, None)
    for b in b_grid:
        b = float(b)

        def obj(p, b=b):
            m = y_moment(p, b)
            if m <= 0:
                return b
            return b + math.exp((t + math.log(m) + log_nu) / p)

        try:
            p, val = minimize_scalar(obj, p_domain, coarse_points=17)
        except SearchFailure:
            continue
        if val < best[0]:
            best = (val, b, p)
    if not math.isfinite(best[0]):
        raise SearchFailure("no finite (b, p) pair")
    val, b, p = best
    return BoundCertificate(max(val, 0.0), t, "coupling", {"b": b, "p": p},
                            details={"nu": nu, "n_b": len(b_grid), "name": getattr(coupling, "name", None)})


def tail_conversion(nu: float, y_tail, s_grid) -> np.ndarray:
    """min(1, ν P(Y >= s)) on s_grid.

    ``y_tail`` is a callable s -> P(Y >= s) or a sample of Y.
    """
    if not nu >= 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    s = np.asarray(s_grid, dtype=float)
    if callable(y_tail):
        prob = np.array([y_tail(v) for v in s.ravel()]).reshape(s.shape)
    else:
        y = np.sort(np.asarray(y_tail, dtype=float))
        prob = 1.0 - np.searchsorted(y, s, side="left") / y.size
    return np.minimum(1.0, nu * prob)


def moment_bound(y_moment_p: Callable[[float], float], nu_sup: float,
                 p_domain: Optional[ScalarSearchDomain] = None):
    """inf_p (E Y₊^p)^{1/p} ν^{1/p}; bounds E sup_θ F_θ(X) when ν_sup = sup_θ ν_{F_θ}.

    Returns (value, p).
    """
    if not nu_sup >= 1:
        raise DomainError(f"nu must be >= 1, got {nu_sup}")
    p_domain = p_domain or ScalarSearchDomain(1.0, P_MAX, log_scale=True, tolerance=1e-6)
    log_nu = math.log(nu_sup)

    def obj(p):
        m = y_moment_p(p)
        return 0.0 if m <= 0 else math.exp((math.log(m) + log_nu) / p)

    p, val = minimize_scalar(obj, p_domain, coarse_points=17)
    return val, p


# ----------------------------------------------------------------------------
# Rényi divergence


@dataclass(frozen=True, eq=False)
class DiscreteOrGaussianMeasure:
    kind: str
    atoms: Optional[tuple] = None
    weights: Optional[tuple] = None
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.kind == "discrete":
            w = np.asarray(self.weights, dtype=float)
            if self.atoms is None or len(self.atoms) != w.size:
                raise DomainError("discrete measure needs one weight per atom")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise DomainError("weights must be non-negative and sum to 1")
        elif self.kind == "gaussian":
            if not self.variance > 0:
                raise DomainError("variance must be positive")
        else:
            raise DomainError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def discrete(cls, atoms, weights):
        return cls("discrete", tuple(atoms), tuple(float(w) for w in weights))

    @classmethod
    def gaussian(cls, mean: float, variance: float):
        return cls("gaussian", mean=float(mean), variance=float(variance))


def renyi_divergence(mu: DiscreteOrGaussianMeasure, mu_ref: DiscreteOrGaussianMeasure, alpha: float) -> float:
    """D_α(μ, μ_ref) = (α-1)⁻¹ log E_ref (dμ/dμ_ref)^α for α > 1."""
    if not alpha > 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if mu.kind != mu_ref.kind:
        raise DomainError("Rényi divergence between a discrete and a Gaussian measure is not supported")
    if mu.kind == "discrete":
        ref = dict(zip(mu_ref.atoms, mu_ref.weights))
        terms, ratios = [], []
        for a, w in zip(mu.atoms, mu.weights):
            if w == 0:
                continue
            r = ref.get(a, 0.0)
            if r == 0:
                raise DomainError(f"mu is not absolutely continuous w.r.t. mu_ref at atom {a!r}")
            ratios.append(math.log(w) - math.log(r))
            if not math.isinf(alpha):
                terms.append(alpha * math.log(w) + (1 - alpha) * math.log(r))
        if math.isinf(alpha):
            return max(max(ratios), 0.0)
        lse = np.logaddexp.reduce(terms)
        return max(float(lse) / (alpha - 1), 0.0)
    m1, v1, m2, v2 = mu.mean, mu.variance, mu_ref.mean, mu_ref.variance
    va = alpha * v2 + (1 - alpha) * v1
    if va <= 0:
        return math.inf
    return (0.5 * math.log(v2 / v1) + math.log(v2 / va) / (2 * (alpha - 1))
            + alpha * (m1 - m2) ** 2 / (2 * va))


def renyi_sup_multiplier(D_alpha: float, alpha: float, p: float) -> float:
    """e^{D_α/p + α log 2/((α-1)p)}, the replacement of ν^{1/p}."""
    if not D_alpha >= 0:
        raise DomainError("D_alpha must be >= 0")
    if not alpha > 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    ratio = 1.0 if math.isinf(alpha) else alpha / (alpha - 1)
    return math.exp(D_alpha / p + ratio * LOG2 / p)


def renyi_moment_bound(f_moment_p: Callable[[float], float], D_sup: float, alpha: float,
                       p_domain: Optional[ScalarSearchDomain] = None):
    """inf_p (E f₊^p)^{1/p} e^{D/p + α log 2/((α-1)p)}; returns (value, p)."""
    nu = math.exp(D_sup + (1.0 if math.isinf(alpha) else alpha / (alpha - 1)) * LOG2)
    return moment_bound(f_moment_p, nu, p_domain)


# ----------------------------------------------------------------------------
# heterogeneous Gaussian ℓ∞


def _check_sigmas(sigmas) -> np.ndarray:
    s = np.asarray(sigmas, dtype=float).ravel()
    if s.size < 1 or np.any(~(s > 0)) or not np.all(np.isfinite(s)):
        raise DomainError("sigmas must be positive and finite")
    if np.any(np.diff(s) > 0):
        raise DomainError("sigmas must be sorted in non-increasing order")
    return s


def hetero_sigma_star(sigmas) -> float:
    s = _check_sigmas(sigmas)
    return float(np.max(s * np.sqrt(np.log(np.arange(2, s.size + 2)))))


def hetero_objective(b: float, p: float, sigmas) -> float:
    """b + √(2p) (Σ σ_i^p e^{-b²/(2σ_i²)})^{1/p}, summed in log space."""
    s = np.asarray(sigmas, dtype=float)
    logs = p * np.log(s) - b * b / (2 * s * s)
    return b + math.sqrt(2 * p) * math.exp(float(np.logaddexp.reduce(logs)) / p)


def hetero_b_grid(sigmas) -> np.ndarray:
    ss = hetero_sigma_star(sigmas)
    return np.concatenate([[0.0], ss * 2.0 ** np.linspace(-3.0, 2.0, B_GRID_POINTS - 1)])


def hetero_linf_bound(sigmas, mode: str = "optimized", b_grid=None,
                      p_domain: Optional[ScalarSearchDomain] = None) -> BoundCertificate:
    """Bound on E‖X‖_∞ for independent X_i ~ Normal(0, σ_i²).

    ``optimized`` minimizes the display over a b-grid and p >= 1;
    ``closed_form`` returns 2σ* + √2 σ_1 with σ* = max_i σ_i √log(i+1).
    """
    s = _check_sigmas(sigmas)
    ss = hetero_sigma_star(s)
    if mode == "closed_form":
        return BoundCertificate(2 * ss + math.sqrt(2) * s[0], 0.0, "coupling", {"b": 2 * ss},
                                details={"mode": mode, "sigma_star": ss})
    if mode != "optimized":
        raise DomainError(f"unknown mode {mode!r}")
    b_grid = hetero_b_grid(s) if b_grid is None else b_grid
    p_domain = p_domain or ScalarSearchDomain(1.0, P_MAX, log_scale=True, tolerance=1e-6)
    best = (math.inf, None, None)
    for b in b_grid:
        p, val = minimize_scalar(lambda p, b=float(b): hetero_objective(b, p, s), p_domain, coarse_points=17)
        if val < best[0]:
            best = (val, float(b), p)
    val, b, p = best
    return BoundCertificate(val, 0.0, "coupling", {"b": b, "p": p},
                            details={"mode": mode, "sigma_star": ss, "nu": s.size})


def hetero_y_moment(sigmas):
    """(p, b) -> d⁻¹ Σ σ_i^p e^{-b²/(2σ_i²)} (2p)^{p/2}, an upper bound on E(|X_J| - b)₊^p."""
    s = np.asarray(sigmas, dtype=float)

    def m(p, b):
        logs = p * np.log(s) - b * b / (2 * s * s)
        return math.exp(float(np.logaddexp.reduce(logs)) - math.log(s.size) + 0.5 * p * math.log(2 * p))
    return m
