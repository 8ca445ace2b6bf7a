import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from ellipvol.errors import DomainError
from ellipvol.linalg import Spectrum
from ellipvol.sampling import (
    EllipticalModel,
    RadialLaw,
    RandomStream,
    derive_replicate_seed,
    elliptical_sample,
    fmix64,
    gaussian_matrix,
    mix128,
    pareto_tail_constant,
    sample_log_radii,
    sample_radii,
    stable_reference_sample,
    unit_sphere_vector,
)

M = 100_000


class TestStreams:
    def test_reproducible(self):
        a = gaussian_matrix(1, 1, RandomStream(7, 3))
        b = gaussian_matrix(1, 1, RandomStream(7, 3))
        assert a[0, 0] == b[0, 0]

    def test_derive_same(self):
        x = derive_replicate_seed(5, 9).generator.random(64)
        y = derive_replicate_seed(5, 9).generator.random(64)
        np.testing.assert_array_equal(x, y)

    def test_index_and_master_differ(self):
        base = derive_replicate_seed(5, 0).generator.random(64)
        assert np.any(base != derive_replicate_seed(5, 1).generator.random(64))
        assert np.any(base != derive_replicate_seed(6, 0).generator.random(64))

    def test_children_independent_of_order(self):
        s = RandomStream(1, 2)
        first = s.child(4).generator.random(8)
        s.child(0).generator.random(100)
        np.testing.assert_array_equal(first, RandomStream(1, 2).child(4).generator.random(8))

    @settings(max_examples=200)
    @given(a=st.integers(0, 2**64 - 1), b=st.integers(0, 2**64 - 1),
           c=st.integers(0, 2**64 - 1), d=st.integers(0, 2**64 - 1))
    def test_key_injective(self, a, b, c, d):
        if (a, b) != (c, d):
            assert mix128(a, b) != mix128(c, d)

    def test_fmix_bijective_sample(self):
        xs = np.arange(10_000)
        assert len({fmix64(int(x)) for x in xs}) == xs.size


class TestGaussian:
    def test_moments(self):
        x = gaussian_matrix(1, M, RandomStream(3, 1)).ravel()
        assert abs(x.mean()) <= 4 / math.sqrt(M)
        assert abs(x.var() - 1) <= 4 * math.sqrt(2 / M)

    def test_shape_checks(self, stream):
        with pytest.raises(DomainError):
            gaussian_matrix(0, 3, stream)


class TestSphere:
    def test_n1(self, stream):
        assert unit_sphere_vector(1, stream)[0] in (-1.0, 1.0)

    def test_second_moment(self):
        s = RandomStream(11, 0)
        u1 = np.array([unit_sphere_vector(3, s)[0] for _ in range(M)])
        v = u1**2
        assert abs(v.mean() - 1 / 3) <= 4 * v.std() / math.sqrt(M)

    def test_fourth_moment(self):
        s = RandomStream(12, 0)
        u1 = np.array([unit_sphere_vector(2, s)[0] for _ in range(M)])
        v = u1**4
        assert abs(v.mean() - 3 / 8) <= 4 * v.std() / math.sqrt(M)


class TestRadii:
    def test_degenerate(self, stream):
        np.testing.assert_array_equal(sample_radii(RadialLaw.degenerate(), 5, stream), np.ones(5))

    def test_positive(self, stream):
        r = sample_radii(RadialLaw.lognormal(0, 1), 1000, stream)
        assert np.all(r > 0)

    def test_lognormal_law(self):
        x = sample_log_radii(RadialLaw.lognormal(1.5, 0.5), 5000, RandomStream(2, 0))
        assert sps.kstest(x, "norm", args=(1.5, 0.5)).pvalue > 0.001

    def test_logcauchy_law(self):
        x = sample_log_radii(RadialLaw.logcauchy(-1, 2), 5000, RandomStream(2, 1))
        assert sps.kstest(x, "cauchy", args=(-1, 2)).pvalue > 0.001

    def test_logpareto_tail(self):
        alpha, c = 1.5, 0.7
        x = sample_log_radii(RadialLaw.logpareto(alpha, c), 200_000, RandomStream(2, 2))
        t = 30.0
        # exact for t >= c * D_alpha, so a binomial z-score is the right yardstick
        expected = 0.5 * (c * pareto_tail_constant(alpha) / t) ** alpha
        got = np.mean(x > t)
        assert abs(got - expected) <= 5 * math.sqrt(expected * (1 - expected) / x.size)
        assert abs(np.mean(x > 0) - 0.5) < 0.005

    def test_pareto_constant_matches_stable_tail(self):
        # P(S_alpha > t) ~ Gamma(alpha) sin(pi alpha/2) / pi * t^-alpha
        alpha = 1.5
        t = 50.0
        tail = sps.levy_stable.sf(t, alpha, 0.0)
        approx = 0.5 * (pareto_tail_constant(alpha) / t) ** alpha
        assert tail == pytest.approx(approx, rel=0.05)

    def test_roundtrip(self):
        for law in (RadialLaw.degenerate(), RadialLaw.lognormal(1, 2),
                    RadialLaw.logcauchy(0, 3), RadialLaw.logpareto(1.2, 0.5)):
            assert RadialLaw.from_dict(law.to_dict()) == law

    def test_bad_laws(self):
        with pytest.raises(DomainError):
            RadialLaw("LogLaplace")
        with pytest.raises(DomainError):
            RadialLaw.lognormal(0, 0)
        with pytest.raises(DomainError):
            RadialLaw.logpareto(2.5)
        with pytest.raises(DomainError):
            RadialLaw.from_dict({"kind": "LogNormal", "sigma": 1})


class TestElliptical:
    def test_degenerate_x_equals_y(self, stream):
        X, log_r, Y = elliptical_sample(EllipticalModel(8, 4, Spectrum.identity(8)), stream)
        np.testing.assert_array_equal(X, Y)
        np.testing.assert_array_equal(log_r, 0)

    def test_identity_unit_rows(self, stream):
        _, _, Y = elliptical_sample(EllipticalModel(10, 5, Spectrum.identity(10)), stream)
        np.testing.assert_allclose(np.linalg.norm(Y, axis=1), 1, atol=1e-12)

    def test_row_norm_bound(self, stream):
        lam = Spectrum.from_values([4.0, 1, 1, 1, 0.5, 0.5], normalize=True)
        _, _, Y = elliptical_sample(EllipticalModel(6, 3, lam), stream)
        assert np.all(np.linalg.norm(Y, axis=1) <= math.sqrt(lam.values[0]) + 1e-12)

    def test_radial_scaling(self, stream):
        X, log_r, Y = elliptical_sample(
            EllipticalModel(6, 3, Spectrum.identity(6), RadialLaw.lognormal(0, 1)), stream
        )
        np.testing.assert_allclose(X, np.exp(log_r)[:, None] * Y, rtol=1e-15)

    def test_model_checks(self):
        with pytest.raises(DomainError):
            EllipticalModel(4, 5, Spectrum.identity(4))
        with pytest.raises(DomainError):
            EllipticalModel(3, 2, Spectrum.from_values([3.0, 2.0, 1.0]))


class TestStable:
    def test_gaussian(self):
        x = stable_reference_sample(2.0, 10_000, RandomStream(4, 0))
        assert sps.kstest(x, "norm").pvalue > 0.01

    def test_cauchy_median_and_quartiles(self):
        x = stable_reference_sample(1.0, 10_000, RandomStream(4, 1))
        assert abs(np.mean(x <= 0) - 0.5) <= 4 * 0.005
        # sample quartile SE = sqrt(3/16 / m) * 2 pi ~ 0.027 at m = 1e4
        se = math.sqrt(3 / 16 / x.size) * 2 * math.pi
        q1, q3 = np.quantile(x, [0.25, 0.75])
        assert abs(q1 + 1) <= 4 * se and abs(q3 - 1) <= 4 * se

    def test_cauchy_quartiles_tight(self):
        x = stable_reference_sample(1.0, 100_000, RandomStream(4, 3))
        q1, q3 = np.quantile(x, [0.25, 0.75])
        assert abs(q1 + 1) <= 0.05 and abs(q3 - 1) <= 0.05

    @pytest.mark.parametrize("alpha", [0.7, 1.3, 1.8])
    def test_against_scipy(self, alpha):
        x = stable_reference_sample(alpha, 4000, RandomStream(4, 2))
        assert sps.kstest(x, sps.levy_stable(alpha, 0.0).cdf).pvalue > 0.001

    def test_domain(self, stream):
        with pytest.raises(DomainError):
            stable_reference_sample(2.5, 10, stream)
