import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import ndtr, ndtri

from _models import linear_model, random_model
from tda.errors import AllMissingError, EmptySubsetError, UnsupportedFamilyError
from tda.gchisq import gchisq_cdf
from tda.scoring import (
    RocCurve,
    default_grid,
    empirical_auc,
    log_lr,
    model_auc,
    model_roc,
    quadratic_form,
    resolve_markers,
    score_distribution,
    subset_model,
)

SHARED = [(f, s) for f in ("loc", "locscale") for s in ("global", "per-disease")]


def binormal_auc(delta, sigma):
    return float(ndtr(np.sqrt(delta @ np.linalg.solve(sigma, delta) / 2.0)))


class TestEmpiricalAuc:
    def test_matches_pairwise_count(self, rng):
        s0 = rng.integers(0, 6, 40).astype(float)
        s1 = rng.integers(2, 9, 30).astype(float)
        diff = s1[:, None] - s0[None, :]
        ref = (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size
        assert empirical_auc(s0, s1) == pytest.approx(ref)

    def test_extremes(self):
        assert empirical_auc([0, 1], [2, 3]) == 1.0
        assert empirical_auc([2, 3], [0, 1]) == 0.0
        assert empirical_auc([1, 1], [1]) == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_auc([], [1.0])


class TestLogLr:
    @pytest.mark.parametrize("family,scope", SHARED + [("free", "global"), ("free", "per-disease")])
    def test_equals_density_ratio(self, rng, family, scope):
        m = random_model(rng, J=3, family=family, scope=scope)
        y = rng.uniform(-2.5, 2.5, size=(30, 3))
        assert_allclose(log_lr(m, y), m.logpdf(y, 1) - m.logpdf(y, 0), rtol=1e-9, atol=1e-10)

    @pytest.mark.parametrize("family,scope", SHARED)
    def test_quadratic_form_identity(self, rng, family, scope):
        m = random_model(rng, J=4, family=family, scope=scope)
        y = rng.uniform(-2.5, 2.5, size=(50, 4))
        h, _ = m.transform(y, 0)
        qf = quadratic_form(m)
        assert_allclose(qf(h), m.logpdf(y, 1) - m.logpdf(y, 0), atol=1e-9)
        if qf.beta is not None:
            centred = -0.5 * np.einsum("ij,jk,ik->i", h - qf.beta, qf.A, h - qf.beta) + qf.const
            assert_allclose(centred, qf(h), atol=1e-8)

    def test_location_global_is_linear(self, rng):
        m = random_model(rng, J=3, family="loc")
        qf = quadratic_form(m)
        assert qf.linear
        assert_allclose(qf.coef, np.linalg.solve(m.corr(0).sigma, m.delta), atol=1e-12)

    def test_free_family_has_no_quadratic_form(self, rng):
        with pytest.raises(UnsupportedFamilyError):
            quadratic_form(random_model(rng, family="free"))

    def test_missing_marker_uses_marginal(self, rng):
        m = random_model(rng, J=3, family="locscale", scope="per-disease")
        y = rng.uniform(-2, 2, size=(10, 3))
        y[:, 2] = np.nan
        sub = subset_model(m, [0, 1])
        assert_allclose(log_lr(m, y), log_lr(sub, y[:, :2]), atol=1e-12)

    def test_single_row_returns_float(self, rng):
        m = random_model(rng, J=2)
        assert isinstance(log_lr(m, [0.1, 0.2]), float)

    def test_all_missing_row(self, rng):
        with pytest.raises(AllMissingError):
            log_lr(random_model(rng, J=2), [[np.nan, np.nan]])


class TestScoreLaw:
    @pytest.mark.parametrize("family,scope", SHARED)
    def test_matches_simulated_scores(self, rng, family, scope):
        m = random_model(rng, J=3, family=family, scope=scope)
        for d in (0, 1):
            s = np.sort(log_lr(m, m.sample_class(100_000, d, rng)))
            x = np.quantile(s, np.linspace(0.02, 0.98, 15))
            emp = np.searchsorted(s, x, side="right") / s.size
            assert_allclose(gchisq_cdf(score_distribution(m, d), x), emp, atol=6e-3)

    def test_moments(self, rng):
        m = random_model(rng, J=3, family="locscale")
        s = log_lr(m, m.sample_class(200_000, 1, rng))
        law = score_distribution(m, 1)
        assert law.mean == pytest.approx(s.mean(), abs=0.02 * np.sqrt(law.variance))
        assert np.sqrt(law.variance) == pytest.approx(s.std(), rel=0.02)

    def test_location_model_is_gaussian(self, rng):
        m = random_model(rng, J=3, family="loc")
        q = m.delta @ np.linalg.solve(m.corr(0).sigma, m.delta)
        g0, g1 = score_distribution(m, 0), score_distribution(m, 1)
        assert g0.weights.size == 0 and g1.weights.size == 0
        assert g0.offset == pytest.approx(-q / 2) and g1.offset == pytest.approx(q / 2)
        assert g0.normal_sd == pytest.approx(np.sqrt(q))

    def test_bad_class(self, rng):
        with pytest.raises(ValueError):
            score_distribution(random_model(rng), 2)


class TestAucAndRoc:
    def test_location_closed_form(self, rng):
        for _ in range(5):
            m = random_model(rng, J=3, family="loc")
            assert model_auc(m) == pytest.approx(binormal_auc(m.delta, m.corr(0).sigma), abs=1e-12)

    @pytest.mark.parametrize("family,scope", SHARED)
    def test_auc_matches_simulation(self, rng, family, scope):
        m = random_model(rng, J=2, family=family, scope=scope)
        s0 = log_lr(m, m.sample_class(100_000, 0, rng))
        s1 = log_lr(m, m.sample_class(100_000, 1, rng))
        assert model_auc(m) == pytest.approx(empirical_auc(s0, s1), abs=5e-3)

    def test_single_marker_scale_only(self, rng):
        # equal means, variances 1 and s^2: P(|Z1| s > |Z0|) = 2/pi * atan(s)
        m = random_model(rng, J=1, family="locscale")
        from tda.model import FittedTda

        m = FittedTda(m.spec, m.coeffs, [0.0], [0.5], m.lambdas, None)
        s = np.exp(0.5)
        assert model_auc(m) == pytest.approx(2 / np.pi * np.arctan(s), abs=1e-8)

    def test_roc_closed_form_for_location(self):
        delta = np.array([0.8, -0.3, 0.5])
        sigma = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.0]])
        m = linear_model(delta, sigma)
        roc = model_roc(m, default_grid(101))
        q = np.sqrt(delta @ np.linalg.solve(sigma, delta))
        p = roc.fpr[1:-1]
        assert_allclose(roc.tpr[1:-1], ndtr(ndtri(p) + q), atol=1e-12)
        assert roc.tpr[0] == 0.0 and roc.tpr[-1] == 1.0

    def test_roc_area_matches_auc(self, rng):
        m = random_model(rng, J=2, family="locscale", scope="per-disease")
        roc = model_roc(m, default_grid(401))
        assert roc.auc == pytest.approx(model_auc(m), abs=2e-3)
        assert np.all(np.diff(roc.tpr) >= 0)

    def test_free_family_uses_simulation(self, rng):
        m = random_model(rng, J=2, family="free")
        a = model_auc(m, seed=4, n_mc=20_000)
        assert a == model_auc(m, seed=4, n_mc=20_000)
        roc = model_roc(m, default_grid(21), seed=4, n_mc=20_000)
        assert roc.auc == pytest.approx(a, abs=0.02)

    def test_identical_classes_give_chance(self, rng):
        m = random_model(rng, J=2, family="loc", shift=0.0)
        m = type(m)(m.spec, m.coeffs, np.zeros(2), np.zeros(2), m.lambdas, None)
        assert model_auc(m) == 0.5


class TestRocCurve:
    def test_csv(self, tmp_path):
        RocCurve([0.0, 0.5, 1.0], [0.0, 0.8, 1.0]).to_csv(tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text().splitlines()[0] == "fpr,tpr"

    def test_trapezoid(self):
        assert RocCurve([0.0, 0.5, 1.0], [0.0, 1.0, 1.0]).auc == pytest.approx(0.75)

    def test_rejects_decreasing(self):
        with pytest.raises(ValueError):
            RocCurve([0.0, 1.0], [1.0, 0.0])

    def test_grid(self):
        with pytest.raises(ValueError):
            default_grid(1)


class TestSubsetModel:
    def test_correlation_is_sub_matrix(self, rng):
        m = random_model(rng, J=4, family="locscale", scope="per-disease")
        sub = subset_model(m, [3, 1])
        for d in (0, 1):
            assert_allclose(sub.corr(d).sigma, m.corr(d).sigma[np.ix_([3, 1], [3, 1])], atol=1e-12)
        assert sub.marker_names == ("y4", "y2")
        assert_allclose(sub.delta, m.delta[[3, 1]])

    def test_full_identity_returns_same_model(self, rng):
        m = random_model(rng, J=3)
        assert subset_model(m, [0, 1, 2]) is m

    def test_empty_and_invalid(self, rng):
        m = random_model(rng, J=3)
        with pytest.raises(EmptySubsetError):
            subset_model(m, [])
        with pytest.raises(ValueError):
            subset_model(m, [0, 0])
        with pytest.raises(ValueError):
            subset_model(m, [5])

    def test_resolve_markers(self, rng):
        m = random_model(rng, J=3)
        assert resolve_markers(m, ["y3", "1"]) == [2, 1]
        with pytest.raises(ValueError):
            resolve_markers(m, ["nope"])
