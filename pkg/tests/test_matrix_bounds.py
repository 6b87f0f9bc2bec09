import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailcert.core_math import ScalarSearchDomain
from tailcert.errors import DomainError
from tailcert.matrix_bounds import (
    CalibrationConstant,
    calibrate_constant,
    latala_Cnp,
    psd_sum_bound,
    psd_sum_shape,
    sample_cov_bound,
    sample_cov_branches,
    series_bound,
    series_objective,
    series_stats,
)
from tailcert.models import CovarianceSpec, MomentProfile, NormSpec, SamplerSpec

UNIT = CalibrationConstant(1.0)
H1 = MomentProfile.gaussian_relative(MomentProfile.power(1.0, 0.0, domain_lo=2.0))


def diag_stack(d):
    return np.stack([np.outer(e, e) for e in np.eye(d)])


class TestCalibrationConstant:
    def test_validation(self):
        with pytest.raises(DomainError):
            CalibrationConstant(0.0)
        with pytest.raises(DomainError):
            CalibrationConstant(math.inf)

    def test_round_trip(self):
        c = CalibrationConstant(2.5, "fam", 7)
        assert CalibrationConstant.from_dict(c.to_dict()) == c

    def test_provenance_in_certificate(self):
        cal = CalibrationConstant(3.0, "fam", 9)
        c = psd_sum_bound(2.0, CovarianceSpec.identity(4), 64, 1.0, cal)
        assert c.constant_mode == "calibrated"
        assert c.to_dict()["calibration"] == {"C": 3.0, "calibration_family": "fam", "calibration_seed": 9}


class TestCnp:
    def test_examples(self):
        assert latala_Cnp(16, 2) == pytest.approx(2 * 2 * 8 ** 0.5)
        assert latala_Cnp(1, 4) == pytest.approx(4 * 4 * 0.25 ** 0.25)

    @given(st.integers(1, 1000), st.floats(2.0, 100.0))
    def test_endpoint_equals_grid(self, n, p):
        assert latala_Cnp(n, p) == pytest.approx(latala_Cnp(n, p, grid=10_000), rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            latala_Cnp(0, 3)
        with pytest.raises(DomainError):
            latala_Cnp(4, 1.5)


class TestPsdSum:
    def test_rank_one_decay(self):
        cov = CovarianceSpec(np.diag([1.0, 0.0, 0.0]))
        a = psd_sum_shape(1.0, cov, 10_000, 0.0)
        b = psd_sum_shape(1.0, cov, 40_000, 0.0)
        assert b / a == pytest.approx(0.5)
        assert a == pytest.approx(math.sqrt(2 / 10_000))

    def test_identity_effective_rank(self):
        c = psd_sum_bound(2.0, CovarianceSpec.identity(6), 64, 1.0, UNIT)
        assert c.details["r_eff"] == 6

    def test_scaling(self):
        S = np.diag([3.0, 1.0, 0.5])
        for fn in (psd_sum_shape, lambda *a: sample_cov_branches(*a)["small_rank"]):
            a = fn(1.5, CovarianceSpec(S), 100, 2.0)
            b = fn(1.5, CovarianceSpec(4 * S), 100, 2.0)
            assert b == pytest.approx(4 * a)

    def test_monotone_in_t(self):
        cov = CovarianceSpec.identity(8)
        for fn in (lambda t: psd_sum_shape(2.0, cov, 128, t), lambda t: sample_cov_bound(1.0, cov, 128, t, UNIT).bound_value):
            v = [fn(t) for t in np.linspace(0, 10, 21)]
            assert np.all(np.diff(v) >= 0)

    def test_bad_eta(self):
        with pytest.raises(DomainError):
            psd_sum_shape(0.5, CovarianceSpec.identity(2), 10, 1.0)


class TestSampleCov:
    def test_first_branch_arithmetic(self):
        c = sample_cov_bound(1.0, CovarianceSpec.identity(8), 4096, 1.0, UNIT)
        a = 8 + 1 + math.log(8)
        assert c.details["branch"] == "small_rank"
        assert c.bound_value == pytest.approx(max(a * a / 4096, math.sqrt(a / 4096)))

    def test_second_branch(self):
        c = sample_cov_bound(2.0, CovarianceSpec.identity(8), 64, 1.0, UNIT)
        b = 4 + 1 + math.log(8)
        assert c.details["branch"] == "large_rank"
        assert c.bound_value == pytest.approx(4 * max(b * b / 64, 8 * b / 64))

    def test_boundary_probe(self):
        c = sample_cov_bound(1.0, CovarianceSpec.identity(4), 64, 1.0, UNIT)
        assert "branch_boundary" in c.flags
        d = c.details
        assert d["branch_gap"] == pytest.approx(d["large_rank"] - d["small_rank"])


class TestSeriesStats:
    @pytest.mark.parametrize("d", [4, 16])
    def test_diagonal_units(self, d):
        s = series_stats(diag_stack(d))
        assert (s.sigma_star, s.upsilon, s.sigma) == (1.0, 1.0, 2.0)
        assert s.sigma_diamond == pytest.approx(math.sqrt(d))

    def test_single_matrix(self, rng):
        A = rng.standard_normal((3, 4))
        s = series_stats([A])
        assert s.sigma_star == pytest.approx(np.linalg.norm(A, 2))
        assert s.upsilon == pytest.approx(np.linalg.norm(A)) and s.sigma_diamond == pytest.approx(np.linalg.norm(A))

    @given(st.integers(0, 2 ** 31), st.integers(1, 5))
    def test_chain(self, seed, n):
        A = np.random.default_rng(seed).standard_normal((n, 3, 3))
        s = series_stats(A, restarts=8)
        assert s.sigma_star <= s.upsilon * (1 + 1e-12) <= s.sigma_diamond * (1 + 1e-12)

    def test_sigma_star_random_search_oracle(self, rng):
        A = rng.standard_normal((2, 3, 3))
        s = series_stats(A)
        W = rng.standard_normal((100_000, 2))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        oracle = np.max(np.linalg.norm(np.einsum("kn,nij->kij", W, A), ord=2, axis=(1, 2)))
        assert s.sigma_star >= oracle * (1 - 1e-9)
        assert s.sigma_star == pytest.approx(oracle, rel=0.01)

    def test_scaling(self, rng):
        A = rng.standard_normal((4, 3, 2))
        s, s3 = series_stats(A), series_stats(-3 * A)
        for k in ("sigma_star", "sigma", "upsilon", "sigma_diamond"):
            assert getattr(s3, k) == pytest.approx(3 * getattr(s, k), rel=1e-9)
        b = series_bound(s, H1, 1.0, UNIT).bound_value
        assert series_bound(s3, H1, 1.0, UNIT).bound_value == pytest.approx(3 * b, rel=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            series_stats([np.eye(2), np.eye(3)])


class TestSeriesBound:
    def test_zero_series(self):
        assert series_bound(series_stats(np.zeros((3, 2, 2))), H1, 1.0, UNIT).bound_value == 0.0

    def test_closed_path_diagonal(self):
        c = series_bound(series_stats(diag_stack(16)), H1, 0.0, UNIT)
        assert c.details["closed_path_shape"] == pytest.approx(2 + 1 + 16 ** 0.25)
        assert c.details["closed_path_p"] == 8.0
        # the numeric inf over p >= 2 is attained at p = 4
        assert c.bound_value == pytest.approx(7.0, rel=1e-6)
        assert c.bound_value <= c.details["closed_path_value"]

    def test_subexp_grid_oracle(self, rng):
        prof = MomentProfile.gaussian_relative(MomentProfile.power(1 / math.sqrt(2), 1.0, domain_lo=2.0))
        s = series_stats(rng.standard_normal((5, 3, 3)))
        c = series_bound(s, prof, 2.0, UNIT)
        grid = np.exp(np.linspace(math.log(2), math.log(1e4), 200_000))
        oracle = min(series_objective(p, s, prof, 2.0) for p in grid)
        assert c.bound_value == pytest.approx(oracle, rel=1e-6)

    def test_needs_relative_profile(self):
        with pytest.raises(DomainError):
            series_bound(series_stats(diag_stack(2)), MomentProfile.sub_gaussian(1.0), 1.0, UNIT)
        with pytest.raises(DomainError):
            series_bound(series_stats(diag_stack(2)), H1, 1.0, UNIT, ScalarSearchDomain(1.0, 10.0))

    def test_monotone_in_t(self, rng):
        s = series_stats(rng.standard_normal((4, 3, 3)))
        v = [series_bound(s, H1, t, UNIT).bound_value for t in np.linspace(0, 8, 9)]
        assert np.all(np.diff(v) >= 0)


def test_calibration_covers_its_own_fit():
    cov = CovarianceSpec.identity(4)
    s = SamplerSpec.empirical_cov(cov, 32, seed=11)
    cal = calibrate_constant(lambda: psd_sum_shape(2.0, cov, 32, 1.0), s, NormSpec.symmetric_operator(4), 1.0, 1000)
    assert cal.C > 0 and cal.details["ci"][1] == pytest.approx(cal.C * cal.details["shape"])
