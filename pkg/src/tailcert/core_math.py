"""Scalar and small dense-matrix numerics shared by all bound computations."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NumericError, SearchFailure

LOG2 = math.log(2.0)
LOG_SQRT_PI = 0.5 * math.log(math.pi)
_FACTORIAL_OVERFLOW = 170.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SYMMETRY_RTOL = 1e-10


def _check_finite_nonneg(p, name="p"):
    if not math.isfinite(p):
        raise DomainError(f"{name} must be finite, got {p!r}")
    if p < 0:
        raise DomainError(f"{name} must be non-negative, got {p!r}")


def log_factorial(p: float) -> float:
    """log Γ(p+1)."""
    _check_finite_nonneg(p)
    return math.lgamma(p + 1.0)


def gamma_factorial(p: float):
    """Real-argument factorial p! = Γ(p+1).

    Returns a float for p <= 170. Beyond that Γ(p+1) overflows a double, and
    the pair ``(log Γ(p+1), True)`` is returned instead so callers can stay in
    the log domain.
    """
    _check_finite_nonneg(p)
    if p > _FACTORIAL_OVERFLOW:
        return math.lgamma(p + 1.0), True
    return math.gamma(p + 1.0)


LOG_FLOAT_MAX = math.log(sys.float_info.max)


def log_gaussian_abs_moment(p: float) -> float:
    if not math.isfinite(p):
        raise DomainError(f"p must be finite, got {p!r}")
    if p < 0:
        raise DomainError(f"p must be non-negative, got {p!r}")
    return 0.5 * p * LOG2 + math.lgamma(0.5 * (p + 1.0)) - LOG_SQRT_PI


def gaussian_abs_moment(p: float) -> float:
    """E|g|^p for a standard Gaussian g (inf once it overflows a double)."""
    lm = log_gaussian_abs_moment(p)
    return math.exp(lm) if lm < LOG_FLOAT_MAX else math.inf


def gaussian_cdf_lower(z: float) -> float:
    """Lower bound e^{-2z^2/3}/4 on the Gaussian tail Φ(-z), valid for z >= 0."""
    if not z >= 0:
        raise DomainError(f"z must be >= 0, got {z!r}")
    return 0.25 * math.exp(-2.0 * z * z / 3.0)


def _symmetrize(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise DomainError("matrix has non-finite entries")
    scale = np.max(np.abs(B)) if B.size else 0.0
    if np.max(np.abs(B - B.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise DomainError("matrix is not symmetric")
    return 0.5 * (B + B.T)


def quadratic_form_moment_bound(B, p: float, form: str = "product", log: bool = False) -> float:
    """Upper bound on E|GᵀBG|^p for standard Gaussian G and symmetric B.

    ``form="product"`` is ‖B‖_*^p Π_{i=1}^{⌊p⌋}(1 + 2(p-i)‖B‖_op/‖B‖_*);
    ``form="simplified"`` is (‖B‖_* + p‖B‖_op)^p. With ``log=True`` the
    logarithm is returned (``-inf`` for B = 0).
    """
    if form not in ("product", "simplified"):
        raise DomainError(f"unknown form {form!r}")
    if not (math.isfinite(p) and p >= 1):
        raise DomainError(f"p must be >= 1, got {p!r}")
    eig = np.linalg.eigvalsh(_symmetrize(B))
    nuc = float(np.sum(np.abs(eig)))
    op = float(np.max(np.abs(eig), initial=0.0))
    if nuc == 0.0:
        return -math.inf if log else 0.0
    if form == "simplified":
        out = p * math.log(nuc + p * op)
    else:
        ratio = op / nuc
        i = np.arange(1, math.floor(p) + 1, dtype=float)
        out = p * math.log(nuc) + float(np.sum(np.log1p(2.0 * (p - i) * ratio)))
    return out if log else math.exp(out)


def second_moment_lower(mean_plus: float, sq_plus: float) -> float:
    """(E(ξ-s)₊)² / E(ξ-s)₊², a lower bound on P(ξ >= s)."""
    if mean_plus < 0 or sq_plus < 0:
        raise DomainError("moments of a positive part must be non-negative")
    if sq_plus == 0:
        if mean_plus > 0:
            raise NumericError("E(ξ-s)₊² = 0 but E(ξ-s)₊ > 0: inconsistent moments")
        raise DomainError("sq_plus must be positive")
    ratio = mean_plus * mean_plus / sq_plus
    # Cauchy–Schwarz caps the ratio at 1; allow rounding slack only
    if ratio > 1.0 + 1e-12:
        raise NumericError(f"mean_plus² > sq_plus (ratio {ratio}); violates Cauchy–Schwarz")
    return min(ratio, 1.0)


def second_moment_lower_centered(mean: float, var: float, rho: float) -> float:
    """Lower bound on P(ξ >= ρEξ) from the mean and variance, for Eξ >= 0."""
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    if mean < 0 or var < 0:
        raise DomainError("need E ξ >= 0 and var >= 0")
    num = (1.0 - rho) ** 2 * mean * mean
    if num == 0:
        return 0.0
    return num / (var + num)


class SpectralStats(NamedTuple):
    operator_norm: float
    nuclear_norm: float
    frobenius_norm: float
    trace: float
    effective_rank: float


def spectral_stats(M) -> SpectralStats:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DomainError(f"expected a matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    s = np.linalg.svd(M, compute_uv=False)
    op = float(s[0]) if s.size else 0.0
    tr = float(np.trace(M))
    return SpectralStats(
        operator_norm=op,
        nuclear_norm=float(np.sum(s)),
        frobenius_norm=float(np.sqrt(np.sum(s * s))),
        trace=tr,
        effective_rank=tr / op if op > 0 else 0.0,
    )


@dataclass(frozen=True)
class ScalarSearchDomain:
    lo: float
    hi: float
    log_scale: bool = True
    tolerance: float = 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("search bounds must be finite")
        if self.lo > self.hi:
            raise DomainError(f"lo={self.lo} exceeds hi={self.hi}")
        if self.log_scale and self.lo <= 0:
            raise DomainError("log-scale search needs lo > 0")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")

    def to_axis(self, x):
        return math.log(x) if self.log_scale else x

    def from_axis(self, u):
        return math.exp(u) if self.log_scale else u


def minimize_scalar(
    objective: Callable[[float], float],
    domain: ScalarSearchDomain,
    coarse_points: int = 9,
) -> tuple[float, float]:
    """Bracketed derivative-free minimization of a scalar function.

    A coarse probe grid (``coarse_points`` evenly spaced on the search axis,
    endpoints included) brackets the best probe, golden-section search shrinks
    the bracket to ``domain.tolerance`` and a 17-point grid refines around the
    incumbent. Non-finite objective values count as +inf. Ties resolve to the
    smaller argument, so a constant objective returns ``domain.lo``.
    """
    a, b = domain.to_axis(domain.lo), domain.to_axis(domain.hi)
    seen: dict[float, float] = {}

    def f(u):
        u = min(max(u, a), b)
        if u not in seen:
            x = domain.lo if u == a else domain.hi if u == b else domain.from_axis(u)
            try:
                val = float(objective(x))
            except (OverflowError, ZeroDivisionError, FloatingPointError):
                val = math.inf
            seen[u] = val if math.isfinite(val) else math.inf
        return seen[u]

    if a == b:
        val = f(a)
        if not math.isfinite(val):
            raise SearchFailure("objective is non-finite at the only feasible point")
        return domain.lo, val

    n_probe = max(int(coarse_points), 3)
    probes = np.linspace(a, b, n_probe)
    vals = np.array([f(u) for u in probes])
    if np.count_nonzero(~np.isfinite(vals)) > 0.5 * n_probe:
        raise SearchFailure(
            f"objective non-finite at {np.count_nonzero(~np.isfinite(vals))}/{n_probe} probe points"
        )
    i = int(np.argmin(vals))
    lo_u = probes[max(i - 1, 0)]
    hi_u = probes[min(i + 1, n_probe - 1)]

    tol = domain.tolerance
    x1 = hi_u - _GOLDEN * (hi_u - lo_u)
    x2 = lo_u + _GOLDEN * (hi_u - lo_u)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if hi_u - lo_u <= tol:
            break
        if f1 <= f2:
            hi_u, x2, f2 = x2, x1, f1
            x1 = hi_u - _GOLDEN * (hi_u - lo_u)
            f1 = f(x1)
        else:
            lo_u, x1, f1 = x1, x2, f2
            x2 = lo_u + _GOLDEN * (hi_u - lo_u)
            f2 = f(x2)

    best_u = min(seen, key=lambda u: (seen[u], u))
    half = max(hi_u - lo_u, tol)
    for u in np.linspace(best_u - half, best_u + half, 17):
        f(u)

    best_u = min(seen, key=lambda u: (seen[u], u))
    best = seen[best_u]
    if not math.isfinite(best):
        raise SearchFailure("objective is non-finite everywhere it was probed")
    if best_u == a:
        return domain.lo, best
    if best_u == b:
        return domain.hi, best
    return domain.from_axis(best_u), best
