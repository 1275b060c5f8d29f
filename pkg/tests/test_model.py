import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.interpolate import BPoly

from _models import random_model
from tda.data import CaseControlData
from tda.errors import DegenerateDataError, NonConvergenceError
from tda.model import (
    CorrelationScope,
    FitOptions,
    FittedTda,
    MarginalFamily,
    ModelSpec,
    fit,
    fit_or_raise,
    initial_params,
    log_likelihood,
    log_likelihood_grad,
)

VARIANTS = [(f, s) for f in ("free", "loc", "locscale") for s in ("global", "per-disease")]


def reference_logpdf(model, y, d):
    """Class-d log density built from scipy's Bernstein polynomials and multivariate normal."""
    theta = model.class_coeffs(d)
    z = np.empty_like(y)
    logd = np.zeros(y.shape[0])
    for j, (lo, hi) in enumerate(model.spec.bounds):
        poly = BPoly(theta[j][:, None], [lo, hi])
        dpoly = poly.derivative()
        # linear continuation outside the support
        edge = np.clip(y[:, j], lo, hi)
        h = poly(edge) + (y[:, j] - edge) * dpoly(edge)
        z[:, j] = (h - model.delta[j] * d) * np.exp(-model.gamma[j] * d)
        logd += np.log(dpoly(edge)) - model.gamma[j] * d
    return stats.multivariate_normal(np.zeros(y.shape[1]), model.corr(d).sigma).logpdf(z) + logd


def _with_missing(data, rng, rate=0.15):
    v = np.array(data.values)
    hole = rng.random(v.shape) < rate
    hole[hole.all(axis=1), 0] = False
    v[hole] = np.nan
    return CaseControlData.from_arrays(v, data.disease, data.marker_names)


class TestSpec:
    def test_labels(self):
        assert ModelSpec("free", "global").label == "sTDA"
        assert ModelSpec("loc", "per-disease").label == "TDA_d"
        assert ModelSpec("locscale", "global").label == "lsTDA"

    def test_bad_order(self):
        with pytest.raises(ValueError):
            ModelSpec(order=0)

    def test_bounds_from_pooled_range(self):
        d = CaseControlData.from_arrays([[0.0], [1.0], [10.0]], [0, 1, 1])
        assert ModelSpec().with_bounds(d).bounds == ((-1.0, 11.0),)

    def test_constant_marker_is_degenerate(self):
        d = CaseControlData.from_arrays([[1.0], [1.0]], [0, 1])
        with pytest.raises(DegenerateDataError):
            ModelSpec().with_bounds(d)


class TestDensity:
    @pytest.mark.parametrize("family,scope", VARIANTS)
    def test_logpdf_matches_reference(self, rng, family, scope):
        m = random_model(rng, J=3, family=family, scope=scope)
        y = rng.uniform(-2.8, 2.8, size=(25, 3))
        for d in (0, 1):
            assert_allclose(m.logpdf(y, d), reference_logpdf(m, y, d), rtol=1e-10)

    def test_logpdf_marginalises_missing(self, rng):
        m = random_model(rng, J=3, family="locscale")
        y = rng.uniform(-2.5, 2.5, size=(10, 3))
        y_miss = y.copy()
        y_miss[:, 1] = np.nan
        sub = FittedTda(ModelSpec("locscale", "global", 4, (m.spec.bounds[0], m.spec.bounds[2])),
                        m.coeffs[:, [0, 2]], m.delta[[0, 2]], m.gamma[[0, 2]],
                        [[-m.corr(0).sigma[2, 0] / np.sqrt(1 - m.corr(0).sigma[2, 0] ** 2)]], None)
        assert_allclose(m.logpdf(y_miss, 1), reference_logpdf(sub, y[:, [0, 2]], 1), rtol=1e-10)

    def test_density_integrates_to_one(self, rng):
        from scipy import integrate

        m = random_model(rng, J=1, family="locscale")
        f = lambda t: np.exp(m.logpdf(np.array([[t]]), 1)[0])  # noqa: E731
        total = integrate.quad(f, -60, 60, points=[-3, 3], limit=400)[0]
        assert total == pytest.approx(1.0, abs=1e-7)

    def test_marginal_cdf_matches_samples(self, rng):
        m = random_model(rng, J=2, family="locscale", scope="per-disease")
        x = m.sample_class(50_000, 1, rng)
        for j in (0, 1):
            q = np.quantile(x[:, j], [0.1, 0.5, 0.9])
            assert_allclose(m.marginal_cdf(1, j, q), [0.1, 0.5, 0.9], atol=0.01)

    def test_sample_correlation(self, rng):
        m = random_model(rng, J=3, family="loc")
        z, _ = m.transform(m.sample_class(40_000, 0, rng), 0)
        assert_allclose(np.corrcoef(z.T), m.corr(0).sigma, atol=0.02)


class TestLikelihood:
    @pytest.mark.parametrize("family,scope", VARIANTS)
    def test_gradient_matches_finite_difference(self, rng, family, scope):
        m = random_model(rng, J=3, family=family, scope=scope)
        data = _with_missing(m.simulate(40, 40, rng), rng)
        spec = m.spec
        x = m.flat_params() + rng.normal(0, 0.05, size=m.flat_params().size)
        val, grad = log_likelihood_grad(x, data, spec)
        eps = 1e-6
        num = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = eps
            num[i] = (log_likelihood_grad(x + e, data, spec)[0] - log_likelihood_grad(x - e, data, spec)[0]) / (2 * eps)
        assert_allclose(grad, num, rtol=1e-5, atol=1e-5)

    @pytest.mark.parametrize("family,scope", VARIANTS)
    def test_value_matches_reference(self, rng, family, scope):
        m = random_model(rng, J=2, family=family, scope=scope)
        data = m.simulate(30, 30, rng)
        ref = sum(reference_logpdf(m, data.class_values(d), d).sum() for d in (0, 1))
        val = log_likelihood(m.flat_params(), data, m.spec)
        val = val[0] if isinstance(val, tuple) else val
        assert val == pytest.approx(ref, rel=1e-10)

    def test_wrong_length(self, rng):
        m = random_model(rng, J=2)
        with pytest.raises(ValueError):
            log_likelihood(np.zeros(3), m.simulate(10, 10, rng), m.spec)


class TestFit:
    def test_recovers_location_shift(self, rng):
        truth = random_model(rng, J=2, family="loc", corr=0.7)
        data = truth.simulate(1500, 1500, rng)
        m = fit(data, ModelSpec("loc", "global", 4, truth.spec.bounds))
        assert m.converged
        assert_allclose(m.delta, truth.delta, atol=0.12)
        assert_allclose(m.corr(0).sigma, truth.corr(0).sigma, atol=0.06)

    def test_recovers_scale_shift(self, rng):
        truth = random_model(rng, J=2, family="locscale", scale=0.4)
        data = truth.simulate(2000, 2000, rng)
        m = fit(data, ModelSpec("locscale", "global", 4, truth.spec.bounds))
        assert_allclose(m.gamma, truth.gamma, atol=0.1)

    def test_nested_families_order_likelihoods(self, rng):
        truth = random_model(rng, J=2, family="locscale", scope="per-disease")
        data = truth.simulate(150, 150, rng)
        ll = {f"{f}/{s}": fit(data, ModelSpec(f, s, 4)).loglik for f, s in VARIANTS}
        tol = 1e-3
        assert ll["free/global"] >= ll["locscale/global"] - tol
        assert ll["locscale/global"] >= ll["loc/global"] - tol
        for f in ("free", "loc", "locscale"):
            assert ll[f"{f}/per-disease"] >= ll[f"{f}/global"] - tol

    def test_handles_missing_values(self, rng):
        truth = random_model(rng, J=3, family="loc")
        data = _with_missing(truth.simulate(300, 300, rng), rng, rate=0.2)
        m = fit(data, ModelSpec("loc", "global", 4))
        assert m.converged and np.isfinite(m.loglik)

    def test_warm_start_reaches_same_optimum(self, rng):
        truth = random_model(rng, J=2, family="loc")
        data = truth.simulate(200, 200, rng)
        spec = ModelSpec("loc", "global", 4)
        cold = fit(data, spec)
        warm = fit(data, spec, init=cold)
        assert warm.loglik == pytest.approx(cold.loglik, abs=1e-6)
        assert warm.n_iter < cold.n_iter

    def test_nonconvergence_flagged(self, rng):
        data = random_model(rng, J=2).simulate(100, 100, rng)
        m = fit(data, ModelSpec(), FitOptions(maxiter=3))
        assert not m.converged
        with pytest.raises(NonConvergenceError):
            fit_or_raise(data, ModelSpec(), opts=FitOptions(maxiter=3))

    def test_initial_coefficients_increase(self, rng):
        data = random_model(rng, J=2).simulate(50, 50, rng)
        spec = ModelSpec("free", "global", 6).with_bounds(data)
        x = initial_params(data, spec)
        assert np.all(np.isfinite(x))

    @pytest.mark.parametrize("values,disease", [
        (np.c_[np.arange(6.0), np.arange(6.0) ** 2], [0, 0, 1, 1, 1, 1]),
        (np.c_[np.arange(10.0), np.r_[np.ones(5), np.arange(5.0)]], [0] * 5 + [1] * 5),
    ])
    def test_degenerate_inputs(self, values, disease):
        with pytest.raises(DegenerateDataError):
            fit(CaseControlData.from_arrays(values, disease), ModelSpec())

    def test_marker_never_observed_in_a_class(self, rng):
        v = rng.normal(size=(20, 2))
        v[:10, 1] = np.nan
        with pytest.raises(DegenerateDataError):
            fit(CaseControlData.from_arrays(v, [0] * 10 + [1] * 10), ModelSpec())


class TestSerialization:
    @pytest.mark.parametrize("family,scope", VARIANTS)
    def test_json_round_trip_is_exact(self, tmp_path, rng, family, scope):
        m = random_model(rng, J=3, family=family, scope=scope)
        m.save(tmp_path / "m.json")
        back = FittedTda.load(tmp_path / "m.json")
        assert back.spec == m.spec
        for name in ("coeffs", "delta", "gamma", "lambdas"):
            np.testing.assert_array_equal(getattr(back, name), getattr(m, name))
        y = rng.uniform(-2, 2, size=(5, 3))
        np.testing.assert_array_equal(back.logpdf(y, 1), m.logpdf(y, 1))

    def test_refit_after_reload_reproduces_loglik(self, tmp_path, rng):
        from tda.data import read_csv, write_csv

        data = random_model(rng, J=2).simulate(120, 120, rng)
        write_csv(data, tmp_path / "d.csv")
        a = fit(data, ModelSpec("locscale", "global", 5))
        b = fit(read_csv(tmp_path / "d.csv"), ModelSpec("locscale", "global", 5))
        assert b.loglik == pytest.approx(a.loglik, abs=1e-10)

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError):
            FittedTda.from_dict({"format": "other"})

    def test_validation(self, rng):
        m = random_model(rng, J=2, family="free")
        with pytest.raises(ValueError):
            FittedTda(m.spec, m.coeffs, [0.5, 0.0], m.gamma, m.lambdas, None)
        with pytest.raises(ValueError):
            FittedTda(m.spec, m.coeffs[..., ::-1], m.delta, m.gamma, m.lambdas, None)
