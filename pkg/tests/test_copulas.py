import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, stats

from returncurves.copulas import (
    STUDY_COPULAS,
    CopulaSpec,
    TrueCurve,
    chi_u,
    copula_cdf,
    copula_sample,
    joint_survival,
    survival_copula,
    true_ray_norms,
    true_return_curve,
)

IND = CopulaSpec("independence")
COM = CopulaSpec("comonotone")


def gaussian_upper_quad(a, b, rho):
    """Pr(Z1 > t_a, Z2 > t_b) by one-dimensional quadrature of the conditional normal."""
    ta, tb = stats.norm.isf(a), stats.norm.isf(b)
    s = np.sqrt(1 - rho**2)
    f = lambda x: stats.norm.pdf(x) * stats.norm.sf((tb - rho * x) / s)
    return integrate.quad(f, ta, np.inf, epsabs=1e-16, epsrel=1e-12, limit=200)[0]


def t_upper_quad(a, b, rho, nu):
    """Same for the bivariate t, using the conditional t with nu + 1 degrees of freedom."""
    ta, tb = stats.t.isf(a, nu), stats.t.isf(b, nu)

    def f(x):
        scale = np.sqrt((nu + x * x) * (1 - rho**2) / (nu + 1))
        return stats.t.pdf(x, nu) * stats.t.sf((tb - rho * x) / scale, nu + 1)

    return integrate.quad(f, ta, np.inf, epsabs=1e-16, epsrel=1e-12, limit=200)[0]


class TestSpec:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            CopulaSpec("bev_logistic", {"r": 1.5})
        with pytest.raises(ValueError):
            CopulaSpec("gaussian", {"rho": 1.0})
        with pytest.raises(ValueError):
            CopulaSpec("frank", {"zeta": 0.0})
        with pytest.raises(ValueError):
            CopulaSpec("gaussian", {})
        with pytest.raises(ValueError):
            CopulaSpec("nope")

    def test_exchangeability_flags(self):
        assert STUDY_COPULAS["bev_logistic"].exchangeable
        assert not STUDY_COPULAS["bev_asym_logistic"].exchangeable
        assert STUDY_COPULAS["frank"].exchangeable


class TestSurvival:
    def test_independence(self):
        assert float(joint_survival(IND, 1.0, 2.0)) == pytest.approx(np.exp(-3), rel=1e-14)

    def test_comonotone(self):
        assert float(joint_survival(COM, 1.0, 2.0)) == pytest.approx(np.exp(-2), rel=1e-14)

    def test_inverted_logistic_closed_form(self, oracles):
        # exp(-(x^{1/r} + y^{1/r})^r); at r = 0.5, x = y = 1 this is exp(-sqrt 2)
        spec = CopulaSpec("inverted_bev_logistic", {"r": 0.5})
        val = float(joint_survival(spec, 1.0, 1.0))
        assert val == pytest.approx(np.exp(-np.sqrt(2)), rel=1e-13)
        ref = oracles["inverted_logistic_r0.5_S_1_1"]
        assert abs(val - ref["value"]) < 3 * ref["se"]

    @pytest.mark.parametrize("name", ["gaussian_1", "gaussian_2"])
    def test_gaussian_against_quadrature(self, name):
        spec = STUDY_COPULAS[name]
        pairs = [(0.01, 0.01), (1e-4, 0.3), (0.5, 0.5), (0.9, 0.2), (1e-5, 1e-5)]
        a, b = np.array(pairs).T
        ref = [gaussian_upper_quad(x, y, spec.params["rho"]) for x, y in pairs]
        assert_allclose(survival_copula(spec, a, b), ref, rtol=1e-9, atol=1e-13)

    @pytest.mark.parametrize("name", ["t_1", "t_2"])
    def test_t_against_quadrature(self, name):
        spec = STUDY_COPULAS[name]
        pairs = [(0.01, 0.01), (1e-4, 0.3), (0.5, 0.5), (0.9, 0.2), (1e-5, 1e-5)]
        a, b = np.array(pairs).T
        ref = [t_upper_quad(x, y, spec.params["rho"], spec.params["nu"]) for x, y in pairs]
        assert_allclose(survival_copula(spec, a, b), ref, rtol=1e-9, atol=1e-13)

    def test_t_against_monte_carlo(self):
        spec = STUDY_COPULAS["t_1"]
        rng = np.random.default_rng(99)
        z = rng.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]], size=2_000_000)
        w = np.sqrt(rng.chisquare(5, size=2_000_000) / 5)
        t = z / w[:, None]
        thr = stats.t.isf(0.05, 5)
        frac = np.mean((t[:, 0] > thr) & (t[:, 1] > thr))
        val = float(survival_copula(spec, 0.05, 0.05))
        assert abs(val - frac) < 4 * np.sqrt(frac / 2_000_000)

    def test_frank_closed_form(self):
        zeta = -5.0
        spec = CopulaSpec("frank", {"zeta": zeta})
        u, v = 0.3, 0.8
        c = -np.log1p(np.expm1(-zeta * u) * np.expm1(-zeta * v) / np.expm1(-zeta)) / zeta
        assert float(copula_cdf(spec, u, v)) == pytest.approx(c, rel=1e-12)

    @pytest.mark.parametrize("name", list(STUDY_COPULAS))
    def test_boundaries(self, name):
        spec = STUDY_COPULAS[name]
        a = np.array([0.3, 1e-3, 0.7])
        assert_allclose(survival_copula(spec, a, np.ones(3)), a, rtol=1e-12)
        assert_allclose(survival_copula(spec, np.ones(3), a), a, rtol=1e-12)
        assert_allclose(survival_copula(spec, a, np.zeros(3)), 0.0)

    @pytest.mark.parametrize("name", [k for k, s in STUDY_COPULAS.items() if s.exchangeable])
    def test_exchangeable_symmetry(self, name):
        spec = STUDY_COPULAS[name]
        rng = np.random.default_rng(5)
        x, y = rng.uniform(0, 8, (2, 50))
        assert_allclose(joint_survival(spec, x, y), joint_survival(spec, y, x), rtol=1e-9, atol=1e-15)

    @settings(max_examples=40)
    @given(st.sampled_from(sorted(STUDY_COPULAS)), st.integers(0, 2**32 - 1))
    def test_nonincreasing(self, name, seed):
        spec = STUDY_COPULAS[name]
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(0, 9, 12))
        y = rng.uniform(0, 9)
        s = joint_survival(spec, x, np.full_like(x, y))
        assert np.all(np.diff(s) <= 1e-15)
        s = joint_survival(spec, np.full_like(x, y), x)
        assert np.all(np.diff(s) <= 1e-15)

    def test_frechet_hoeffding_bounds(self):
        rng = np.random.default_rng(8)
        a, b = rng.uniform(size=(2, 200))
        for spec in STUDY_COPULAS.values():
            s = survival_copula(spec, a, b)
            assert np.all(s >= np.maximum(a + b - 1, 0) - 1e-12)
            assert np.all(s <= np.minimum(a, b) + 1e-12)


class TestSampling:
    def test_deterministic(self):
        spec = STUDY_COPULAS["bev_asym_logistic"]
        assert np.array_equal(copula_sample(spec, 100, seed=3), copula_sample(spec, 100, seed=3))
        assert not np.array_equal(copula_sample(spec, 100, seed=3), copula_sample(spec, 100, seed=4))

    def test_comonotone_equal(self):
        z = copula_sample(COM, 1000, "exponential", 1)
        assert np.array_equal(z[:, 0], z[:, 1])

    def test_independence_chi(self):
        z = copula_sample(IND, 100_000, "exponential", 2)
        se = np.sqrt(0.05 * 0.95 / 5000)
        assert abs(chi_u(z, 0.95) - 0.05) < 3 * se
        se = np.sqrt(0.1 * 0.9 / 10_000)
        assert abs(chi_u(z, 0.9) - 0.1) < 3 * se

    def test_chi_comonotone_is_one(self):
        z = copula_sample(COM, 1000, "uniform", 3)
        assert chi_u(z, 0.9) == 1.0

    def test_chi_needs_exceedances(self):
        with pytest.raises(ValueError):
            chi_u(np.zeros((10, 2)), 0.99)

    @pytest.mark.slow
    @pytest.mark.parametrize("u", [0.99, 0.999])
    def test_logistic_chi_matches_reference(self, oracles, u):
        ref = oracles[f"logistic_r0.5_chi_{u}"]
        z = copula_sample(STUDY_COPULAS["bev_logistic"], 1_000_000, "uniform", 7)
        chi = chi_u(z, u)
        se = np.sqrt(chi * (1 - chi) / ((1 - u) * 1e6))
        assert abs(chi - ref["value"]) < 3 * np.hypot(se, ref["se"])

    @pytest.mark.parametrize("name", list(STUDY_COPULAS))
    @pytest.mark.parametrize("margin", ["uniform", "exponential", "laplace", "frechet"])
    def test_margins_ks(self, name, margin):
        dists = {
            "uniform": stats.uniform.cdf,
            "exponential": stats.expon.cdf,
            "laplace": stats.laplace.cdf,
            "frechet": lambda x: np.exp(-1 / x),
        }
        z = copula_sample(STUDY_COPULAS[name], 100_000, margin, 11)
        for j in range(2):
            assert stats.kstest(z[:, j], dists[margin]).pvalue > 0.001

    def test_frank_negative_association(self):
        z = copula_sample(STUDY_COPULAS["frank"], 20_000, "uniform", 12)
        tau = stats.kendalltau(z[:, 0], z[:, 1]).statistic
        # Kendall's tau of Frank(-5) is about -0.46
        assert -0.5 < tau < -0.42


class TestTrueCurves:
    def test_independence_line(self):
        tc = true_return_curve(IND, 1e-3, 101)
        assert_allclose(tc.points.sum(axis=1), -np.log(1e-3), atol=1e-10)
        mid = tc.points[50]
        assert mid[0] == pytest.approx(3.453878, abs=1e-6)
        assert mid[1] == pytest.approx(3.453878, abs=1e-6)

    def test_comonotone_l_shape(self):
        tc = true_return_curve(COM, 1e-3, 11)
        level = -np.log(1e-3)
        assert_allclose(np.maximum(tc.points[:, 0], tc.points[:, 1]), level, atol=1e-10)

    @pytest.mark.parametrize("name", list(STUDY_COPULAS))
    def test_root_finder_contract(self, name):
        spec = STUDY_COPULAS[name]
        tc = true_return_curve(spec, 1e-3, 200)
        s = joint_survival(spec, tc.points[:, 0], tc.points[:, 1])
        assert np.max(np.abs(s - 1e-3)) < 1e-10
        assert tc.tolerance < 1e-10
        level = -np.log(1e-3)
        assert tuple(tc.points[0]) == (0.0, level)
        assert tuple(tc.points[-1]) == (level, 0.0)
        assert np.all(np.diff(tc.points[:, 0]) >= 0)
        assert np.all(np.diff(tc.points[:, 1]) <= 0)
        assert isinstance(tc, TrueCurve)

    def test_p_range(self):
        with pytest.raises(ValueError):
            true_return_curve(IND, 0.05)

    @pytest.mark.parametrize("name", ["bev_logistic", "t_2", "frank"])
    def test_ray_norms_on_curve(self, name):
        spec = STUDY_COPULAS[name]
        thetas = np.linspace(0.05, 1.5, 13)
        d = true_ray_norms(spec, 1e-3, thetas)
        s = joint_survival(spec, d * np.cos(thetas), d * np.sin(thetas))
        assert_allclose(s, 1e-3, rtol=1e-8)
