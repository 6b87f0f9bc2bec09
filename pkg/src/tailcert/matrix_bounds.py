"""Operator-norm tail bounds for random matrices.

Three models: averages of i.i.d. PSD matrices, sample covariances of
sub-exponential vectors, and series Σ ξ_i A_i with a Gaussian-relative moment
profile for ξ. Their displays hold up to an unspecified absolute constant,
so every bound here multiplies by a CalibrationConstant that records where
it came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .core_math import ScalarSearchDomain, minimize_scalar
from .errors import DomainError
from .models import CovarianceSpec, MomentProfile, NormSpec, SamplerSpec, make_rng
from .vector_bounds import P_MAX, BoundCertificate

LOG8 = math.log(8.0)
SERIES_RESTARTS = 64
SERIES_SWEEPS = 200
SERIES_TOL = 1e-10


@dataclass(frozen=True)
class CalibrationConstant:
    """Stand-in for an unspecified absolute constant, with its provenance."""

    C: float
    calibration_family: str = "uncalibrated"
    calibration_seed: int = 0
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.C > 0 and math.isfinite(self.C)):
            raise DomainError(f"calibration constant must be positive and finite, got {self.C}")

    def to_dict(self) -> dict:
        return {"C": self.C, "calibration_family": self.calibration_family,
                "calibration_seed": int(self.calibration_seed)}

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationConstant":
        return cls(float(data["C"]), data.get("calibration_family", "uncalibrated"),
                   int(data.get("calibration_seed", 0)))


# ----------------------------------------------------------------------------
# C_{n,p}


def _cnp_term(n, p, q):
    return p * q * (n / p) ** (1.0 / q)


def latala_Cnp(n: int, p: float, grid: int = 0) -> float:
    """sup_{q ∈ [max(2, p/n), p]} p q (n/p)^{1/q}.

    q ↦ p q (n/p)^{1/q} has no interior maximum, so the endpoints suffice.
    With ``grid > 0`` the sup is instead taken over that many equispaced q,
    endpoints included, as a diagnostic.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not p >= 2:
        raise DomainError(f"p must be >= 2, got {p}")
    lo = max(2.0, p / n)
    if grid:
        q = np.linspace(lo, p, int(grid))
        return float(np.max(p * q * (n / p) ** (1.0 / q)))
    return max(_cnp_term(n, p, lo), _cnp_term(n, p, p))


# ----------------------------------------------------------------------------
# PSD sums and sample covariances


def _check_common(eta, n, t):
    if not eta >= 1:
        raise DomainError(f"eta must be >= 1, got {eta}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")


def psd_sum_shape(eta: float, cov: CovarianceSpec, n: int, t: float) -> float:
    """η‖Σ‖_op √((2r+t)/n) max{1, √((r+t/2)/n)} without the constant."""
    _check_common(eta, n, t)
    r = cov.effective_rank
    return eta * cov.op * math.sqrt((2 * r + t) / n) * max(1.0, math.sqrt((r + 0.5 * t) / n))


def psd_sum_bound(eta: float, cov: CovarianceSpec, n: int, t: float, cal: CalibrationConstant) -> BoundCertificate:
    """Bound on ‖n⁻¹ Σ Z_i - Σ‖_op for i.i.d. PSD Z_i with (E|uᵀZu|^p)^{1/p} <= ηp‖u‖²_Σ."""
    val = cal.C * psd_sum_shape(eta, cov, n, t)
    return BoundCertificate(val, t, "psd_sum", {}, "calibrated", cal,
                            details={"r_eff": cov.effective_rank, "eta": eta, "n": n})


def sample_cov_branches(eta: float, cov: CovarianceSpec, n: int, t: float) -> dict:
    """Both branches of the sample-covariance display, without the constant."""
    _check_common(eta, n, t)
    r = cov.effective_rank
    s = eta * eta * cov.op
    a = r + t + LOG8
    b = n ** (1.0 / 3.0) + t + LOG8
    small = s * max(a * a / n, math.sqrt(a / n))
    large = s * max(b * b / n, r * b / n)
    return {"r_eff": r, "n_cbrt": n ** (1.0 / 3.0), "small_rank": small, "large_rank": large,
            "branch": "small_rank" if r <= n ** (1.0 / 3.0) else "large_rank"}


def sample_cov_bound(eta: float, cov: CovarianceSpec, n: int, t: float, cal: CalibrationConstant) -> BoundCertificate:
    """Bound on ‖n⁻¹ Σ Z_iZ_iᵀ - Σ‖_op for sub-exponential marginals (E|⟨u,Z⟩|^p)^{1/p} <= ηp‖u‖_Σ.

    The branch is picked by r_eff <= n^{1/3}; both values are kept in details.
    """
    br = sample_cov_branches(eta, cov, n, t)
    flags = ()
    if math.isclose(br["r_eff"], br["n_cbrt"], rel_tol=1e-12):
        flags = ("branch_boundary",)
    br["branch_gap"] = br["large_rank"] - br["small_rank"]
    val = cal.C * br[br["branch"]]
    return BoundCertificate(val, t, "sample_cov", {}, "calibrated", cal, flags,
                            details=dict(br, eta=eta, n=n))


# ----------------------------------------------------------------------------
# matrix series


@dataclass(frozen=True)
class SeriesStats:
    sigma_star: float
    sigma: float
    upsilon: float
    sigma_diamond: float
    n: int
    d1: int
    d2: int
    restarts: int = 0
    w_star: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def scaled(self, s: float) -> "SeriesStats":
        s = abs(s)
        return SeriesStats(s * self.sigma_star, s * self.sigma, s * self.upsilon, s * self.sigma_diamond,
                           self.n, self.d1, self.d2, self.restarts, self.w_star)

    def to_dict(self) -> dict:
        return {"sigma_star": self.sigma_star, "sigma": self.sigma, "upsilon": self.upsilon,
                "sigma_diamond": self.sigma_diamond, "n": self.n, "d1": self.d1, "d2": self.d2,
                "restarts": self.restarts}


def _as_stack(A_list) -> np.ndarray:
    try:
        A = np.asarray(A_list, dtype=float)
    except ValueError as exc:
        raise DomainError("all A_i must share one shape") from exc
    if A.ndim == 2:
        A = A[None]
    if A.ndim != 3 or A.shape[0] < 1:
        raise DomainError("A_list must be a non-empty list of equally shaped matrices")
    return A


def _sigma_star_ascent(A, w, sweeps, tol):
    val = -1.0
    for _ in range(sweeps):
        U, s, Vt = np.linalg.svd(np.tensordot(w, A, axes=1))
        g = np.einsum("i,kij,j->k", U[:, 0], A, Vt[0])
        gn = float(np.linalg.norm(g))
        if gn == 0:
            return 0.0, w
        w = g / gn
        if gn - val <= tol * max(gn, 1.0):
            return gn, w
        val = gn
    return val, w


def series_stats(
    A_list,
    restarts: int = SERIES_RESTARTS,
    sweeps: int = SERIES_SWEEPS,
    seed: int = 0,
    tol: float = SERIES_TOL,
) -> SeriesStats:
    """σ*, σ, υ and σ⋄ of the series Σ ξ_i A_i.

    σ, υ and σ⋄ are exact. σ* = sup_{‖w‖₂<=1} ‖Σ w_i A_i‖_op is found by
    alternating maximization of Σ w_i uᵀA_iv (top singular pair given w, then
    w ∝ (uᵀA_iv)_i), started from the top right singular vector of the
    stacked matrix and from ``restarts`` random points; it is a lower estimate.
    """
    A = _as_stack(A_list)
    n, d1, d2 = A.shape
    left = np.einsum("kij,klj->il", A, A)
    right = np.einsum("kji,kjl->il", A, A)
    sigma = math.sqrt(max(np.linalg.eigvalsh(left)[-1], 0.0)) + math.sqrt(max(np.linalg.eigvalsh(right)[-1], 0.0))
    flat = A.reshape(n, -1)
    sigma_diamond = float(np.sqrt(np.sum(flat * flat)))
    if sigma_diamond == 0:
        return SeriesStats(0.0, 0.0, 0.0, 0.0, n, d1, d2, 0)
    _, sv, Vt = np.linalg.svd(flat.T, full_matrices=False)
    upsilon = min(float(sv[0]), sigma_diamond)  # υ <= σ⋄ exactly; clip SVD rounding
    starts = [Vt[0]]
    rng = make_rng(seed, 0)
    for _ in range(restarts):
        w = rng.standard_normal(n)
        starts.append(w / np.linalg.norm(w))
    best, best_w = -1.0, None
    for w0 in starts:
        val, w = _sigma_star_ascent(A, w0, sweeps, tol)
        if val > best:
            best, best_w = val, w
    return SeriesStats(min(best, upsilon), float(sigma), upsilon, sigma_diamond, n, d1, d2, len(starts), best_w)


def series_objective(p: float, stats: SeriesStats, profile: MomentProfile, t: float) -> float:
    s = stats
    core = s.sigma_star * math.sqrt(p) + s.sigma + s.upsilon + s.sigma_diamond / math.sqrt(p)
    if core == 0:
        return 0.0
    return math.exp(t / p) * profile.h(p) * core


def _is_unit_relative(profile: MomentProfile) -> bool:
    base = profile.base if profile.kind == "gaussian_relative" else profile
    return base.kind == "power" and base.alpha == 0 and base.eta == 1


def series_bound(
    stats: SeriesStats,
    profile: MomentProfile,
    t: float,
    cal: CalibrationConstant,
    domain: Optional[ScalarSearchDomain] = None,
) -> BoundCertificate:
    """C inf_{p>=2} e^{t/p} h(p) (σ*√p + σ + υ + σ⋄/√p).

    For h ≡ 1 the details also carry the value at p = 2t + 2σ⋄/σ* and the
    shape σ + υ + √(σ⋄σ*) + √(2t)σ* it leads to.
    """
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if profile.kind != "gaussian_relative":
        raise DomainError("series bounds take a moment profile relative to the standard Gaussian")
    details = stats.to_dict()
    flags = ()
    if stats.sigma_diamond == 0:
        return BoundCertificate(0.0, t, "matrix_series", {"p": 2.0}, "calibrated", cal, details=details)
    domain = domain or ScalarSearchDomain(max(2.0, profile.domain_lo), P_MAX, log_scale=True, tolerance=1e-6)
    if domain.lo < 2:
        raise DomainError("the p-search domain must lie in [2, inf)")
    p_opt, val = minimize_scalar(lambda p: series_objective(p, stats, profile, t), domain, coarse_points=17)
    if _is_unit_relative(profile):
        if stats.sigma_star > 0:
            pc = 2 * t + 2 * stats.sigma_diamond / stats.sigma_star
            details["closed_path_p"] = pc
            details["closed_path_value"] = cal.C * series_objective(pc, stats, profile, t)
            details["closed_path_shape"] = (stats.sigma + stats.upsilon
                                            + math.sqrt(stats.sigma_diamond * stats.sigma_star)
                                            + math.sqrt(2 * t) * stats.sigma_star)
        else:
            flags = ("closed_path_undefined",)
    return BoundCertificate(cal.C * val, t, "matrix_series", {"p": p_opt}, "calibrated", cal, flags, details)


# ----------------------------------------------------------------------------
# calibration


def mc_quantile(sampler: SamplerSpec, norm: NormSpec, t: float, n_mc: int, conf: float = 0.99):
    """Empirical 1 - e^{-t} quantile of ‖X‖ and its exact CI."""
    from .verify import empirical_quantile_ci, sample_norms

    vals = sample_norms(sampler, norm, n_mc)
    return empirical_quantile_ci(vals, -math.expm1(-t), conf)


def calibrate_constant(
    shape_fn: Callable[[], float],
    sampler: SamplerSpec,
    norm: NormSpec,
    t: float,
    n_mc: int = 4000,
    conf: float = 0.99,
    family: Optional[str] = None,
) -> CalibrationConstant:
    """Smallest C for which C·shape covers the upper CI end of the MC quantile.

    ``shape_fn`` returns the bound with the constant set to one.
    """
    shape = float(shape_fn())
    if not shape > 0:
        raise DomainError("cannot calibrate against a zero bound shape")
    q, lo, hi = mc_quantile(sampler, norm, t, n_mc, conf)
    if not math.isfinite(hi):
        raise DomainError("the quantile CI is unbounded; increase n_mc")
    fam = family or f"{sampler.family}/{sampler.core}/d={sampler.d}/n={sampler.n}/t={t}"
    return CalibrationConstant(hi / shape, fam, int(sampler.seed),
                               {"q_emp": q, "ci": (lo, hi), "shape": shape, "n_mc": n_mc})


@lru_cache(maxsize=8)
def default_calibration(seed: int = 20240601, n_mc: int = 4000) -> CalibrationConstant:
    """C fitted on the Gaussian rank-one Wishart average at d=8, n=128, t=1 with η=2."""
    d, n, t = 8, 128, 1.0
    cov = CovarianceSpec.identity(d)
    sampler = SamplerSpec.empirical_cov(cov, n, seed)
    return calibrate_constant(lambda: psd_sum_shape(2.0, cov, n, t), sampler, NormSpec.symmetric_operator(d), t,
                              n_mc, family="psd_rank_one/gaussian/d=8/n=128/t=1")
