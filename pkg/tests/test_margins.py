import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from returncurves.exceptions import ConvergenceWarning
from returncurves.margins import (
    STANDARD_MARGINS,
    GpdModel,
    MarginalModel,
    convert_margin,
    fit_margins,
    gpd_cdf,
    gpd_fit,
    gpd_isf,
    gpd_ppf,
    gpd_sf,
    sample_to_margin,
)


class TestGpdPrimitives:
    def test_unit_shape_cdf(self):
        assert float(gpd_cdf(1.0, 1.0, 1.0)) == pytest.approx(0.5)

    def test_exponential_limit(self):
        assert float(gpd_cdf(2.0, 2.0, 0.0)) == pytest.approx(1 - np.exp(-1), abs=1e-12)
        # the series-safe branch is continuous across |xi| = 1e-6
        assert float(gpd_cdf(2.0, 2.0, 2e-6)) == pytest.approx(1 - np.exp(-1), abs=1e-5)

    def test_exceed_prob_one_median(self):
        assert float(gpd_ppf(0.5, 1.0, 0.0)) == pytest.approx(np.log(2), abs=1e-12)

    def test_negative_shape_upper_endpoint(self):
        # xi = -0.5, sigma = 1: support ends at 2
        assert float(gpd_sf(2.5, 1.0, -0.5)) == 0.0
        assert float(gpd_cdf(2.5, 1.0, -0.5)) == 1.0

    @given(
        st.floats(0.1, 10), st.floats(-0.9, 2.0), st.floats(1e-12, 0.999),
    )
    def test_isf_inverts_sf(self, sigma, xi, s):
        x = gpd_isf(s, sigma, xi)
        assert float(gpd_sf(x, sigma, xi)) == pytest.approx(s, rel=1e-9)


class TestGpdFit:
    def test_exponential_sample(self):
        rng = np.random.default_rng(11)
        fit = gpd_fit(rng.standard_exponential(100_000))
        assert abs(fit.sigma - 1) < 0.03
        assert abs(fit.xi) < 0.03
        assert fit.converged

    def test_heavy_tail_recovered(self):
        rng = np.random.default_rng(12)
        x = gpd_isf(rng.uniform(size=50_000), 2.0, 0.3)
        fit = gpd_fit(x)
        assert fit.sigma == pytest.approx(2.0, rel=0.05)
        assert fit.xi == pytest.approx(0.3, abs=0.04)

    @pytest.mark.parametrize("scale", [0.01, 3.0, 250.0])
    def test_scale_equivariance(self, scale):
        rng = np.random.default_rng(13)
        x = gpd_isf(rng.uniform(size=5000), 1.3, 0.1)
        base = gpd_fit(x)
        scaled = gpd_fit(scale * x)
        assert scaled.sigma == pytest.approx(scale * base.sigma, rel=1e-4)
        assert scaled.xi == pytest.approx(base.xi, abs=1e-4)

    def test_bounds_on_shape(self):
        rng = np.random.default_rng(14)
        fit = gpd_fit(rng.uniform(size=2000))
        assert -0.95 <= fit.xi <= 5

    @pytest.mark.parametrize("bad", [[], [1.0, -0.5], [0.0, 1.0]])
    def test_invalid_input(self, bad):
        with pytest.raises(ValueError):
            gpd_fit(np.array(bad))

    def test_nonconvergence_is_flagged(self):
        rng = np.random.default_rng(15)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            fit = gpd_fit(rng.standard_exponential(500), maxiter=3)
        assert not fit.converged
        assert any(issubclass(w.category, ConvergenceWarning) for w in rec)
        assert np.isfinite(fit.nll)


class TestMarginalModel:
    def test_rank_branch(self):
        model = MarginalModel(GpdModel(10.0, 1.0, 0.0, 0.25), np.array([1.0, 2.0, 3.0]))
        assert float(model.cdf(2.0)) == pytest.approx(0.5)

    def test_exponential_tail_arithmetic(self):
        # F(u) = 0.95 at u = 0, unit exponential tail: cdf(ln 10) = 1 - 0.05/10
        sample = np.linspace(-19, 0, 19)  # 19 points <= 0, so rank cdf at 0 is 19/20
        model = MarginalModel(GpdModel(0.0, 1.0, 0.0, 0.05), sample)
        assert float(model.cdf(np.log(10))) == pytest.approx(0.995, abs=1e-12)

    def test_continuity_at_threshold(self):
        rng = np.random.default_rng(20)
        model = MarginalModel.fit(rng.normal(size=3000))
        u = model.gpd.threshold
        rank = np.searchsorted(model.sorted_sample, u, side="right") / (model.n + 1)
        assert float(model.cdf(u)) == pytest.approx(rank, abs=1e-15)
        assert float(model.cdf(np.nextafter(u, np.inf))) == pytest.approx(rank, abs=1e-9)
        assert float(model.sf(u)) == pytest.approx(model.gpd.exceed_prob, abs=1e-15)

    def test_exponential_quantile_case(self):
        q = 1 - 1e-3
        assert float(convert_margin(q, "uniform", "exponential")) == pytest.approx(6.907755, abs=1e-6)

    def test_quantile_validation(self):
        model = MarginalModel.fit(np.arange(100.0))
        with pytest.raises(ValueError):
            model.quantile(1.0)
        with pytest.raises(ValueError):
            model.quantile(-0.1)

    def test_cdf_strictly_inside_unit_interval(self):
        model = MarginalModel.fit(np.random.default_rng(3).gamma(2.0, size=500))
        vals = model.cdf(np.array([-1e300, -5.0, 0.0, 1e3, 1e300]))
        assert np.all((vals > 0) & (vals < 1))

    def test_gpd_round_trip_grid(self):
        model = MarginalModel.fit(np.random.default_rng(4).gamma(2.0, size=4000))
        q = np.linspace(0.96, 0.9999, 200)
        assert np.max(np.abs(model.cdf(model.quantile(q)) - q)) < 1e-9

    def test_ties_allowed(self):
        data = np.repeat(np.arange(50.0), 20)
        model = MarginalModel.fit(data)
        assert float(model.cdf(10.0)) == pytest.approx(220 / 1001)

    @given(st.integers(0, 10_000), st.lists(st.floats(-50, 50), min_size=2, max_size=30))
    def test_cdf_nondecreasing(self, seed, xs):
        model = MarginalModel.fit(np.random.default_rng(seed).standard_t(4, size=400))
        xs = np.sort(np.array(xs))
        assert np.all(np.diff(model.cdf(xs)) >= 0)

    @given(st.integers(0, 10_000), st.floats(0.001, 0.9999))
    def test_round_trip_gpd_branch(self, seed, q):
        model = MarginalModel.fit(np.random.default_rng(seed).lognormal(size=600))
        if 1 - q >= model.gpd.exceed_prob:
            return
        assert abs(float(model.cdf(model.quantile(q))) - q) < 1e-9

    def test_isf_keeps_tail_precision(self):
        model = MarginalModel.fit(np.random.default_rng(5).standard_exponential(2000))
        s = 1e-12
        assert float(model.sf(model.isf(s))) == pytest.approx(s, rel=1e-8)


class TestConversions:
    def test_uniform_half_is_laplace_zero(self):
        assert float(convert_margin(0.5, "uniform", "laplace")) == 0.0

    def test_composition(self):
        u = float(convert_margin(np.log(2), "exponential", "uniform"))
        assert u == pytest.approx(0.5, abs=1e-15)
        assert float(convert_margin(u, "uniform", "laplace")) == pytest.approx(0.0, abs=1e-15)

    def test_exponential_to_uniform(self):
        assert float(convert_margin(6.907755, "exponential", "uniform")) == pytest.approx(0.999, abs=1e-9)

    def test_closed_forms(self):
        x = np.array([0.1, 1.0, 5.0])
        assert_allclose(convert_margin(x, "exponential", "frechet"), -1 / np.log(-np.expm1(-x)), rtol=1e-12)
        z = np.array([-3.0, -0.2, 0.4, 7.0])
        assert_allclose(convert_margin(z, "laplace", "uniform"), np.where(z < 0, np.exp(z) / 2, 1 - np.exp(-z) / 2))

    def test_support_errors(self):
        with pytest.raises(ValueError):
            convert_margin(-1.0, "exponential", "uniform")
        with pytest.raises(ValueError):
            convert_margin(1.5, "uniform", "laplace")
        with pytest.raises(ValueError):
            convert_margin(1.0, "native", "uniform")

    @given(
        st.sampled_from(STANDARD_MARGINS),
        st.sampled_from(STANDARD_MARGINS),
        st.floats(1e-6, 1 - 1e-6),
    )
    def test_round_trip(self, a, b, u):
        v = float(convert_margin(u, "uniform", a))
        back = float(convert_margin(convert_margin(v, a, b), b, a))
        assert back == pytest.approx(v, rel=1e-10, abs=1e-10)

    def test_native_round_trip(self):
        rng = np.random.default_rng(6)
        sample = np.column_stack([rng.gamma(3, size=1000), rng.weibull(1.5, size=1000)])
        models = fit_margins(sample)
        expo = sample_to_margin(sample, "native", "exponential", models=models)
        assert np.all(expo >= 0)
        back = sample_to_margin(expo, "exponential", "native", target_models=models)
        tail = expo > -np.log(0.05)
        assert_allclose(back[tail], sample[tail], rtol=1e-9)
