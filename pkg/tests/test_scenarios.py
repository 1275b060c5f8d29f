import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from tda.scoring import empirical_auc
from tda.simgen.scenarios import (
    MU1,
    SIGMA_A,
    SIGMA_C0,
    SIGMA_C1,
    Scenario,
    closed_form_auc_a,
    generate,
    sample_class,
    scenario_from_name,
    true_log_lr,
    true_optimal_auc,
)


class TestGenerate:
    def test_scenario_a_moments(self):
        data = generate("A", 10, 1_000_000, seed=1)
        y1 = data.class_values(1)
        assert_allclose(y1.mean(axis=0), MU1, atol=0.005)
        assert_allclose(np.corrcoef(y1.T), SIGMA_A, atol=0.005)

    def test_scenario_c_class_correlations(self):
        data = generate("C_normal", 200_000, 200_000, seed=2)
        assert_allclose(np.corrcoef(data.class_values(0).T), SIGMA_C0, atol=0.01)
        assert_allclose(np.corrcoef(data.class_values(1).T), SIGMA_C1, atol=0.01)

    def test_b1_is_exponentiated_a(self):
        a = sample_class(Scenario.A, 5, 1, np.random.default_rng(3))
        b = sample_class(Scenario.B1, 5, 1, np.random.default_rng(3))
        assert_allclose(b, np.exp(a))

    def test_b2_marginals(self):
        y = generate("B2", 100_000, 10, seed=4).class_values(0)
        assert stats.kstest(y[:, 1], stats.chi2(2.5).cdf).pvalue > 1e-3
        assert stats.kstest(y[:, 2], "expon").pvalue > 1e-3

    def test_clayton_scenario_tau(self):
        y = generate("D_clayton", 1_000_000, 10, seed=5).class_values(0)
        tau = stats.kendalltau(y[:300_000, 0], y[:300_000, 1]).statistic
        assert tau == pytest.approx(0.4146 / 2.4146, abs=0.005)

    def test_logistic_scenario_uses_total(self):
        data = generate("E_linear", 300, 200, seed=6)
        assert data.n == 500
        assert 0.4 < data.disease.mean() < 0.8

    def test_deterministic(self):
        a = generate("D_gumbel", 50, 50, seed=9)
        b = generate("D_gumbel", 50, 50, seed=9)
        np.testing.assert_array_equal(a.values, b.values)

    def test_names(self):
        assert scenario_from_name("c_SKEWED") is Scenario.C_SKEWED
        with pytest.raises(ValueError):
            scenario_from_name("F")
        with pytest.raises(ValueError):
            generate("A", 0, 5, seed=1)


class TestTrueScores:
    def test_scenario_a_closed_form(self):
        # exact rational quadratic form 12074763/5634721, evaluated symbolically
        assert closed_form_auc_a() == pytest.approx(0.84969211722902448, abs=1e-13)
        assert true_optimal_auc("A", n=200_000) == pytest.approx(closed_form_auc_a(), abs=0.003)

    def test_e_linear_auc_near_point_eight(self):
        assert true_optimal_auc("E_linear", n=500_000) == pytest.approx(0.80, abs=0.01)

    def test_identical_classes_give_half(self, rng):
        y = rng.standard_normal((100_000, 4))
        s = true_log_lr("A", y)
        assert empirical_auc(s[:50_000], s[50_000:]) == pytest.approx(0.5, abs=0.005)

    @pytest.mark.parametrize("name", ["B2", "C_skewed", "D_clayton", "D_gumbel"])
    def test_log_lr_integrates_like_a_density_ratio(self, name):
        # E_0[exp(log LR)] = 1 for a genuine likelihood ratio
        rng = np.random.default_rng(10)
        y0 = sample_class(scenario_from_name(name), 400_000, 0, rng)
        r = np.exp(true_log_lr(name, y0))
        assert r.mean() == pytest.approx(1.0, abs=0.03)

    def test_b1_matches_a_on_log_scale(self, rng):
        y = rng.standard_normal((20, 4))
        assert_allclose(true_log_lr("B1", np.exp(y)), true_log_lr("A", y))
