"""Monte Carlo checks of computed bounds.

A bound b on the 1 - e^{-t} quantile of ‖X‖ is *covered* when the upper end
of an exact order-statistic confidence interval for that quantile is <= b,
*violated* when the lower end exceeds b, and inconclusive otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import binom

from .errors import DomainError
from .models import (
    NormSpec,
    SamplerSpec,
    analytic_marginal_moment,
    iter_samples,
    make_rng,
    mix_seed,
    sample,
)
from .vector_bounds import BoundCertificate

VERDICTS = ("covered", "violated", "inconclusive")
CSV_COLUMNS = ("method", "d", "n", "t", "bound", "q_emp", "ci_lo", "ci_hi", "verdict", "seed")
# draws per replica block; fixed so that results do not depend on the worker count
BLOCK = 1 << 15


def empirical_quantile_ci(values, level: float, conf: float = 0.99):
    """Order-statistic quantile estimate with an exact binomial two-sided CI.

    The point estimate is the k-th smallest value with k = ceil(level·n)
    (the lower of the two middle values when level·n is an integer). The
    interval [x_(l), x_(u)] satisfies P(l <= B <= u-1) >= conf for
    B ~ Binomial(n, level); an end that would need an order statistic outside
    1..n is reported as ∓inf.
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    if not 0 < conf < 1:
        raise DomainError(f"conf must lie in (0, 1), got {conf}")
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n < 1:
        raise DomainError("no values")
    k = min(max(int(math.ceil(level * n - 1e-9)), 1), n)
    a = 0.5 * (1.0 - conf)
    lo_i = int(binom.ppf(a, n, level))
    hi_i = int(binom.ppf(1.0 - a, n, level)) + 1
    lo = x[lo_i - 1] if lo_i >= 1 else -math.inf
    hi = x[hi_i - 1] if hi_i <= n else math.inf
    return float(x[k - 1]), float(lo), float(hi)


def verdict_of(bound: float, ci_lo: float, ci_hi: float) -> str:
    if ci_hi <= bound:
        return "covered"
    if ci_lo > bound:
        return "violated"
    return "inconclusive"


@dataclass
class VerificationReport:
    certificate: BoundCertificate
    empirical_quantile: float
    quantile_ci: tuple
    n_samples: int
    verdict: str
    seed: int
    d: int = 0
    n: int = 0

    def __post_init__(self):
        lo, hi = self.quantile_ci
        want = verdict_of(self.certificate.bound_value, lo, hi)
        if self.verdict != want:
            raise DomainError(f"verdict {self.verdict!r} inconsistent with the CI (expected {want!r})")

    def row(self) -> dict:
        c = self.certificate
        return {
            "method": c.method,
            "d": self.d,
            "n": self.n,
            "t": c.confidence_t,
            "bound": c.bound_value,
            "q_emp": self.empirical_quantile,
            "ci_lo": self.quantile_ci[0],
            "ci_hi": self.quantile_ci[1],
            "verdict": self.verdict,
            "seed": self.seed,
        }

    def to_dict(self) -> dict:
        out = self.row()
        out["n_samples"] = self.n_samples
        out["certificate"] = self.certificate.to_dict()
        for key in ("q_emp", "ci_lo", "ci_hi"):
            v = out[key]
            if not math.isfinite(v):
                out[key] = "inf" if v > 0 else "-inf"
        return out


def _block_norms(spec: SamplerSpec, norm: NormSpec, m: int, replica: int) -> np.ndarray:
    return np.concatenate([norm.norm_rows(X) for X in iter_samples(spec, m, replica)])


def sample_norms(spec: SamplerSpec, norm: NormSpec, n: int, workers: int = 1) -> np.ndarray:
    """‖X‖ for n draws, generated in fixed replica blocks and merged in block order."""
    if tuple(norm.shape) != tuple(spec.draw_shape):
        raise DomainError(f"sampler draws {spec.draw_shape} but the norm acts on {norm.shape}")
    sizes = [BLOCK] * (n // BLOCK) + ([n % BLOCK] if n % BLOCK else [])
    jobs = [(m, r) for r, m in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda j: _block_norms(spec, norm, *j), jobs))
    else:
        parts = [_block_norms(spec, norm, m, r) for m, r in jobs]
    return np.concatenate(parts)


def certify(
    cert: BoundCertificate,
    sampler: SamplerSpec,
    norm: NormSpec,
    n_mc: int = 100_000,
    conf: float = 0.99,
    seed: Optional[int] = None,
    workers: int = 1,
) -> VerificationReport:
    """Compare ``cert`` against the empirical 1 - e^{-t} quantile of ‖X‖."""
    if n_mc < 1:
        raise DomainError("n_mc must be positive")
    seed = sampler.seed if seed is None else int(seed)
    vals = sample_norms(sampler.with_seed(seed), norm, n_mc, workers)
    q, lo, hi = empirical_quantile_ci(vals, cert.level, conf)
    return VerificationReport(
        cert, q, (lo, hi), n_mc, verdict_of(cert.bound_value, lo, hi), seed,
        d=norm.shape[0], n=int(sampler.n or 0),
    )


# ----------------------------------------------------------------------------
# ν(P₀)


@dataclass
class NuEstimate:
    """Estimate of sup_{x ∈ ∂B} 1/P₀(|⟨U,x⟩| >= 1).

    ``value`` inverts a one-sided lower confidence bound on the probability at
    the worst direction found, so it errs upward; ``point`` inverts the plain
    frequency. Both use samples independent of those that drove the search.
    """

    value: float
    point: float
    prob: float
    prob_lower: float
    x: np.ndarray
    n_search: int
    n_final: int
    flags: tuple = ()
    details: dict = field(default_factory=dict)


def _u_draws(u_sampler, n: int, replica: int) -> np.ndarray:
    if isinstance(u_sampler, SamplerSpec):
        return sample(u_sampler, n, replica)
    return np.asarray(u_sampler(n, replica), dtype=float)


def _hit_rate(U: np.ndarray, X: np.ndarray, block: int = 64) -> np.ndarray:
    out = np.empty(len(X))
    for i in range(0, len(X), block):
        out[i:i + block] = np.mean(np.abs(U @ X[i:i + block].T) >= 1.0, axis=0)
    return out


def estimate_nu_adversarial(
    u_sampler: Union[SamplerSpec, Callable[[int, int], np.ndarray]],
    norm: NormSpec,
    x_search_budget: int = 1000,
    mc_budget: int = 100_000,
    seed: int = 0,
    conf: float = 0.99,
    local_steps: int = 40,
) -> NuEstimate:
    """Adversarial estimate of ν(P₀) for the law of U on the dual space.

    ``u_sampler`` is a SamplerSpec or a callable (n, replica) -> (n, d) draws.
    The search shares one U sample across all candidate x; replica 1 then
    re-estimates the probability at the chosen x.
    """
    if x_search_budget < 1 or mc_budget < 1:
        raise DomainError("budgets must be positive")
    if norm.is_matrix:
        raise DomainError("the adversarial search runs over vector norms")
    d = norm.dim
    U = _u_draws(u_sampler, mc_budget, 0)
    if U.shape != (mc_budget, d):
        raise DomainError(f"U draws have shape {U.shape}, expected {(mc_budget, d)}")
    rng = make_rng(seed, 7)
    X = norm.to_boundary(rng.standard_normal((x_search_budget, d)))
    cands = [X]
    if norm.kind in ("sup", "polyhedral"):
        # sparse boundary points are natural worst cases for vertex-type laws
        E = np.eye(d)
        cands.append(norm.to_boundary(np.concatenate([E, -E])))
    X = np.concatenate(cands)
    P = _hit_rate(U, X)
    order = np.lexsort((np.arange(len(P)), P))
    n_local = min(8, len(order))
    best_x, best_p = X[order[0]], P[order[0]]
    for i in order[:n_local]:
        x, px = X[i], P[i]
        step = 0.5
        for _ in range(local_steps):
            y = norm.to_boundary((x + step * rng.standard_normal(d) / math.sqrt(d))[None])[0]
            py = _hit_rate(U, y[None])[0]
            if py <= px:
                x, px = y, py
            else:
                step *= 0.8
        if px < best_p:
            best_x, best_p = x, px
    V = _u_draws(u_sampler, mc_budget, 1)
    hits = int(np.sum(np.abs(V @ best_x) >= 1.0))
    prob = hits / mc_budget
    p_lo = float(beta_dist.ppf(1.0 - conf, hits, mc_budget - hits + 1)) if hits > 0 else 0.0
    flags = ()
    if hits == 0:
        flags = ("unbounded",)
    value = 1.0 / p_lo if p_lo > 0 else math.inf
    point = 1.0 / prob if prob > 0 else math.inf
    return NuEstimate(max(value, 1.0), max(point, 1.0), prob, p_lo, best_x, mc_budget, mc_budget, flags,
                      {"search_prob": float(best_p), "n_candidates": len(X)})


# ----------------------------------------------------------------------------
# moment profiles


@dataclass
class ProfileCheck:
    passed: bool
    worst_ratio: float
    worst_u: np.ndarray
    worst_p: float
    ratios: np.ndarray
    details: dict = field(default_factory=dict)


def profile_check(
    sampler: SamplerSpec,
    grid_u: int = 16,
    grid_p=(2.0, 4.0, 6.0),
    n_mc: int = 100_000,
    seed: int = 0,
    n_se: float = 3.0,
) -> ProfileCheck:
    """Check (E|⟨u,X⟩|^p)^{1/p} <= h(p)‖u‖_Σ on a set of directions.

    Moments come from closed forms when available and otherwise from n_mc
    draws; a Monte Carlo moment passes when it is within ``n_se`` standard
    errors of the bound. For PSD rank-one matrices the marginal is uᵀZu and
    the scale is ‖u‖²_Σ.
    """
    prof = sampler.declared_profile
    if prof is None:
        raise DomainError("sampler has no declared profile")
    fam = sampler.family
    if fam not in ("gaussian_vector", "product_subexp_vector", "rademacher_vector", "psd_rank_one"):
        raise DomainError(f"{fam} has no directional marginal to check")
    d = sampler.d
    rng = make_rng(seed, 11)
    Us = rng.standard_normal((grid_u, d))
    Us = np.concatenate([np.eye(d), Us / np.linalg.norm(Us, axis=1, keepdims=True)])
    if sampler.cov is not None:
        scale = sampler.cov.sigma_norm(Us)
    else:
        scale = np.linalg.norm(Us, axis=1)
    quad = fam == "psd_rank_one"
    X = None
    ratios = np.empty((len(Us), len(grid_p)))
    margins = np.ones_like(ratios)
    for i, u in enumerate(Us):
        for j, p in enumerate(grid_p):
            m = None if quad else analytic_marginal_moment(sampler, u, p)
            if m is None:
                if X is None:
                    X = sample(sampler.with_seed(mix_seed(sampler.seed, seed)), n_mc)
                proj = np.einsum("kij,i,j->k", X, u, u) if quad else X @ u
                a = np.abs(proj) ** p
                m = float(np.mean(a))
                se = float(np.std(a)) / math.sqrt(n_mc)
                margins[i, j] = (1.0 + n_se * se / m) ** (1.0 / p) if m > 0 else 1.0
            s = scale[i] ** (2 if quad else 1)
            bound = prof.h(p) * s
            ratios[i, j] = m ** (1.0 / p) / bound if bound > 0 else (0.0 if m == 0 else math.inf)
    slack = ratios / margins
    wi, wj = np.unravel_index(np.argmax(slack), slack.shape)
    return ProfileCheck(
        bool(np.all(slack <= 1.0)), float(ratios[wi, wj]), Us[wi], float(grid_p[wj]), ratios,
        {"n_directions": len(Us), "monte_carlo": X is not None},
    )

