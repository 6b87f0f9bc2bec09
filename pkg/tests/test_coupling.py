import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import ndtr

from tailcert.core_math import ScalarSearchDomain, gaussian_abs_moment
from tailcert.coupling import (
    CouplingSpec,
    DiscreteOrGaussianMeasure,
    coupling_tail_bound,
    example2_coupling,
    hetero_linf_bound,
    hetero_objective,
    hetero_sigma_star,
    hetero_y_moment,
    identity_coupling,
    moment_bound,
    nu_F_estimate,
    renyi_divergence,
    renyi_moment_bound,
    renyi_sup_multiplier,
    shifted_gaussian_coupling,
    tail_conversion,
)
from tailcert.errors import DomainError, UnboundedNu
from tailcert.models import CovarianceSpec, SamplerSpec

Gd = lambda d, seed=0: SamplerSpec.gaussian_vector(CovarianceSpec.identity(d), seed)
first = lambda X: X[:, 0]


class TestNuF:
    def test_identity_is_one(self):
        e = nu_F_estimate(identity_coupling(Gd(3), first), n_x=20, n_y_per_x=200)
        assert e.point == 1.0 and e.zero_probes == ()
        assert 1.0 <= e.value <= 1.03

    def test_shifted_gaussian(self):
        # P(F + 0.5 g >= F) = 1/2 at every x
        c = shifted_gaussian_coupling(Gd(2), first, shift=0.0, scale=0.5)
        e = nu_F_estimate(c, n_x=10, n_y_per_x=20_000, seed=1)
        assert e.ci[0] <= 2.0 <= e.ci[1] * 1.2
        assert e.value >= e.point * 0.95

    def test_example2_probe(self):
        # at x = (1, 0, 0, 0) only J = 0 reaches F(x) = 1
        c = example2_coupling(Gd(4))
        c = CouplingSpec(c.x_sampler, c.conditional_y, c.F, np.array([[1.0, 0, 0, 0]]))
        e = nu_F_estimate(c, n_y_per_x=20_000)
        assert e.point == pytest.approx(4.0, rel=0.05)

    def test_unbounded(self):
        c = shifted_gaussian_coupling(Gd(2), first, shift=-1e6)
        with pytest.raises(UnboundedNu):
            nu_F_estimate(c, n_x=5, n_y_per_x=50)

    def test_draw_reproducible(self):
        c = example2_coupling(Gd(5))
        a, b = c.draw(100, 3), c.draw(100, 3)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestMomentsAndTails:
    def test_identity_moment_equality(self):
        # with ν = 1 and Y = F(X) the moment bound at a fixed p is the moment itself
        y = np.abs(np.random.default_rng(0).standard_normal(200_000))
        val, p = moment_bound(lambda p: float(np.mean(y ** p)), 1.0, ScalarSearchDomain(2.0, 2.0 + 1e-9))
        assert val == pytest.approx(1.0, rel=0.01)

    def test_moment_bound_scales_with_nu(self):
        m = lambda p: gaussian_abs_moment(p)
        a, _ = moment_bound(m, 1.0)
        b, _ = moment_bound(m, 10.0)
        assert b >= a

    def test_tail_conversion(self):
        v = tail_conversion(1.0, lambda s: 2 * (1 - ndtr(s)), [1.0])
        assert v[0] == pytest.approx(0.31731, rel=1e-4)
        assert np.all(tail_conversion(50.0, np.arange(10.0), [0.0, 5.0, 20.0]) <= 1.0)

    def test_coupling_bound_covers_identity(self):
        c = identity_coupling(Gd(1, 2), lambda X: np.abs(X[:, 0]))
        cert = coupling_tail_bound(c, 2.0, 1.0, n_mc=50_000)
        q = float(np.quantile(np.abs(np.random.default_rng(5).standard_normal(200_000)), 1 - math.exp(-2)))
        assert cert.bound_value >= q

    def test_coupling_bound_validation(self):
        with pytest.raises(DomainError):
            coupling_tail_bound(None, 1.0, 1.0)
        with pytest.raises(DomainError):
            coupling_tail_bound(None, 1.0, 0.5, y_moment=lambda p, b: 1.0, b_grid=[0.0])


class TestRenyi:
    def test_bernoulli(self):
        mu = DiscreteOrGaussianMeasure.discrete([0, 1], [0.5, 0.5])
        ref = DiscreteOrGaussianMeasure.discrete([0, 1], [0.25, 0.75])
        want = math.log(0.25 * 4 + 0.25 / 0.75)
        assert renyi_divergence(mu, ref, 2.0) == pytest.approx(want)
        assert renyi_divergence(mu, ref, math.inf) == pytest.approx(math.log(2))

    def test_gaussian_quadrature(self):
        mu, ref = DiscreteOrGaussianMeasure.gaussian(1.0, 0.5), DiscreteOrGaussianMeasure.gaussian(0.0, 1.0)
        lpdf = lambda x, m, v: -(x - m) ** 2 / (2 * v) - 0.5 * math.log(2 * math.pi * v)
        for a in (1.5, 2.0, 3.0):
            val, _ = quad(lambda x: math.exp(a * lpdf(x, 1, 0.5) + (1 - a) * lpdf(x, 0, 1)), -15, 15)
            assert renyi_divergence(mu, ref, a) == pytest.approx(math.log(val) / (a - 1), rel=1e-8)

    def test_unit_shift(self):
        g = DiscreteOrGaussianMeasure.gaussian
        assert renyi_divergence(g(1, 1), g(0, 1), 2.0) == pytest.approx(1.0)

    def test_divergent_case(self):
        g = DiscreteOrGaussianMeasure.gaussian
        assert renyi_divergence(g(0, 4), g(0, 1), 2.0) == math.inf

    def test_not_abs_continuous(self):
        with pytest.raises(DomainError):
            renyi_divergence(DiscreteOrGaussianMeasure.discrete([0, 2], [0.5, 0.5]),
                             DiscreteOrGaussianMeasure.discrete([0, 1], [0.5, 0.5]), 2.0)

    @given(st.floats(1.01, 20), st.floats(0, 5), st.floats(1, 50))
    def test_multiplier_is_nu_power(self, alpha, D, p):
        nu = math.exp(D + alpha / (alpha - 1) * math.log(2))
        assert renyi_sup_multiplier(D, alpha, p) == pytest.approx(nu ** (1 / p), rel=1e-12)

    def test_multiplier_examples(self):
        assert renyi_sup_multiplier(0.0, 2.0, 2.0) == pytest.approx(2.0)
        assert renyi_sup_multiplier(0.0, math.inf, 1.0) == pytest.approx(2.0)

    def test_moment_bound_zero_divergence(self):
        v, _ = renyi_moment_bound(lambda p: 1.0, 0.0, 2.0, ScalarSearchDomain(1.0, 1.0 + 1e-9))
        assert v == pytest.approx(4.0, rel=1e-6)


class TestHeterogeneous:
    sig = 1 / np.sqrt(np.arange(1, 101))

    @given(st.floats(0.1, 3.0), st.floats(0.0, 5.0), st.floats(1.0, 12.0))
    def test_partial_moment_bound_quadrature(self, s, b, p):
        f = lambda z: max(abs(s * z) - b, 0) ** p * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
        lo = b / s
        val = 2 * quad(f, lo, lo + 60, limit=200)[0]
        assert val <= hetero_y_moment([s])(p, b) * (1 + 1e-9)

    def test_sigma_star(self):
        assert hetero_sigma_star([1.0]) == pytest.approx(math.sqrt(math.log(2)))

    def test_closed_form_above_optimized(self):
        opt = hetero_linf_bound(self.sig).bound_value
        cf = hetero_linf_bound(self.sig, "closed_form").bound_value
        assert opt <= cf
        ss = hetero_sigma_star(self.sig)
        assert cf == pytest.approx(2 * ss + math.sqrt(2))

    def test_optimized_matches_generic_engine(self):
        s = self.sig
        a = hetero_linf_bound(s)
        b = coupling_tail_bound(None, 0.0, float(s.size), b_grid=[a.optimal_params["b"]],
                                y_moment=hetero_y_moment(s))
        assert b.bound_value == pytest.approx(a.bound_value, rel=1e-9)

    def test_objective_log_space(self):
        assert math.isfinite(hetero_objective(3.0, 5000.0, self.sig))

    def test_mc_mean_below_bound(self):
        X = np.random.default_rng(0).standard_normal((20_000, 100)) * self.sig
        assert np.abs(X).max(axis=1).mean() <= hetero_linf_bound(self.sig).bound_value

    def test_validation(self):
        with pytest.raises(DomainError):
            hetero_linf_bound([1.0, 2.0])
        with pytest.raises(DomainError):
            hetero_linf_bound([1.0], mode="bogus")
