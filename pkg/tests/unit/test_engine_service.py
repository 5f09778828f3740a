"""
Unit tests for the independence test engine.
"""
import numpy as np
import pytest

from cspcr.core.exceptions import ConfigurationError, DegenerateWeightsError
from cspcr.models.enums import TestMethod
from cspcr.models.ratio import ConstantRatio, PrecomputedRatio
from cspcr.models.statistic import (
    ConstantControlVariate,
    CovariateColumn,
    SurrogateRank,
    first_surrogate,
)
from cspcr.schemas.config import TestConfig


@pytest.fixture
def analytic_ratio(ratio_service, small_params):
    return ratio_service.analytic_dgp_ratio(small_params)


def config(method: TestMethod, **overrides) -> TestConfig:
    return TestConfig(k=5, l=3, alpha=0.05, method=method, seed=11, **overrides)


def assert_consistent(report) -> None:
    assert report.reject == (report.statistic >= report.threshold)
    assert report.reject == (report.p_value <= report.alpha)


class TestRunCsPcr:
    """Test the importance-weighted test."""

    def test_report_is_consistent(self, engine, source_dataset, sampler, analytic_ratio):
        report = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)

        assert report.method == TestMethod.CSPCR
        assert report.n == source_dataset.n
        assert len(report.per_label.W) == 3
        assert_consistent(report)

    def test_normalized_label_sums_add_to_n(self, engine, source_dataset, sampler, analytic_ratio):
        report = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)

        assert sum(report.per_label.W) == pytest.approx(source_dataset.n, rel=1e-9)

    def test_raw_label_sums_conserve_weight(self, engine, source_dataset, sampler, analytic_ratio):
        report = engine.run(
            source_dataset,
            config(TestMethod.CSPCR, normalize_weights=False),
            sampler,
            ratio=analytic_ratio,
        )
        weights = analytic_ratio(source_dataset.x, source_dataset.z, source_dataset.v)

        assert sum(report.per_label.W) == pytest.approx(weights.sum(), rel=1e-9)
        assert_consistent(report)

    def test_normalized_covariance_drops_sum_direction(
        self, engine, source_dataset, sampler, analytic_ratio
    ):
        """Mean-one weights fix sum W = n, so the null law has one zero eigenvalue."""
        report = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)

        assert report.spectral.lambdas[-1] == pytest.approx(0.0, abs=1e-9)
        assert report.spectral.lambdas[0] > 0

    def test_deterministic(self, engine, source_dataset, sampler, analytic_ratio):
        first = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)
        second = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)

        assert first == second

    def test_unit_weights_match_pcr_statistic(self, engine, source_dataset, sampler):
        """With weights 1 the statistic and labels are those of PCR."""
        weighted = engine.run(
            source_dataset, config(TestMethod.CSPCR), sampler, ratio=ConstantRatio(1.0)
        )
        plain = engine.run(source_dataset, config(TestMethod.PCR), sampler)

        assert weighted.labels == plain.labels
        assert weighted.statistic == pytest.approx(plain.statistic)

    def test_weights_have_mean_one_by_default(self, engine, source_dataset, sampler, analytic_ratio):
        report = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)

        assert report.diagnostics.weight_mean == pytest.approx(1.0)

    def test_missing_ratio(self, engine, source_dataset, sampler):
        with pytest.raises(ConfigurationError):
            engine.run(source_dataset, config(TestMethod.CSPCR), sampler)


class TestRunCsPcrPe:
    """Test the control-variate variant."""

    def test_reports_augmentation(self, engine, source_dataset, sampler, analytic_ratio, target_pool):
        report = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=analytic_ratio,
            control_variate=first_surrogate,
            target_pool=target_pool,
        )

        assert len(report.per_label.W_tilde) == 3
        assert len(report.per_label.gamma_hat) == 3
        pool_mean = float(target_pool.v[:, 0].mean())
        assert report.per_label.a_target_mean == pytest.approx((pool_mean,) * 3)
        assert_consistent(report)

    def test_surrogate_rank_is_the_default(
        self, engine, source_dataset, sampler, analytic_ratio, target_pool
    ):
        """Target means of the surrogate-label indicators are label shares of the pool."""
        report = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=analytic_ratio,
            target_pool=target_pool,
        )

        shares = report.per_label.a_target_mean
        assert len(shares) == 3
        assert sum(shares) == pytest.approx(1.0)
        assert all(0.0 <= share <= 1.0 for share in shares)
        assert_consistent(report)

    def test_surrogate_rank_is_deterministic(
        self, engine, source_dataset, sampler, analytic_ratio, target_pool
    ):
        kwargs = {
            "ratio": analytic_ratio,
            "control_variate": SurrogateRank(),
            "target_pool": target_pool,
        }
        first = engine.run(source_dataset, config(TestMethod.CSPCR_PE), sampler, **kwargs)
        second = engine.run(source_dataset, config(TestMethod.CSPCR_PE), sampler, **kwargs)

        assert first == second

    def test_surrogate_rank_needs_per_label_means(
        self, engine, source_dataset, sampler, analytic_ratio
    ):
        with pytest.raises(ConfigurationError):
            engine.run(
                source_dataset,
                config(TestMethod.CSPCR_PE),
                sampler,
                ratio=analytic_ratio,
                control_variate=SurrogateRank(),
                a_target_mean=0.5,
            )

    def test_surrogate_rank_missing_column(
        self, engine, source_dataset, sampler, analytic_ratio, target_pool
    ):
        with pytest.raises(ConfigurationError):
            engine.run(
                source_dataset,
                config(TestMethod.CSPCR_PE),
                sampler,
                ratio=analytic_ratio,
                control_variate=SurrogateRank("v_2"),
                target_pool=target_pool,
            )

    def test_constant_control_variate_disables_augmentation(self, engine, source_dataset, sampler):
        """gamma is 0, so the statistic and labels equal csPCR's."""
        plain = engine.run(
            source_dataset, config(TestMethod.CSPCR), sampler, ratio=ConstantRatio(1.0)
        )
        enhanced = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=ConstantRatio(1.0),
            control_variate=ConstantControlVariate(),
            a_target_mean=1.0,
        )

        assert enhanced.per_label.gamma_hat == (0.0, 0.0, 0.0)
        np.testing.assert_allclose(enhanced.per_label.W_tilde, plain.per_label.W)
        assert enhanced.statistic == pytest.approx(plain.statistic)
        assert enhanced.labels == plain.labels

    def test_constant_control_variate_matches_cspcr_under_shift(
        self, engine, source_dataset, sampler, analytic_ratio
    ):
        """With mean-one weights a constant a cancels in both the sums and the covariance."""
        plain = engine.run(source_dataset, config(TestMethod.CSPCR), sampler, ratio=analytic_ratio)
        enhanced = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=analytic_ratio,
            control_variate=ConstantControlVariate(),
            a_target_mean=1.0,
        )

        np.testing.assert_allclose(enhanced.per_label.W_tilde, plain.per_label.W, rtol=1e-9)
        assert enhanced.statistic == pytest.approx(plain.statistic, rel=1e-9)
        np.testing.assert_allclose(
            enhanced.spectral.lambdas, plain.spectral.lambdas, rtol=1e-7, atol=1e-9
        )
        assert enhanced.reject == plain.reject

    def test_pool_estimated_mean_widens_null(
        self, engine, source_dataset, sampler, analytic_ratio, target_pool
    ):
        """A pool mean carries sampling variance that a known mean does not."""
        pooled = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=analytic_ratio,
            control_variate=first_surrogate,
            target_pool=target_pool,
        )
        known = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE),
            sampler,
            ratio=analytic_ratio,
            control_variate=first_surrogate,
            a_target_mean=float(target_pool.v[:, 0].mean()),
        )

        assert pooled.statistic == pytest.approx(known.statistic)
        assert any(abs(g) > 0 for g in pooled.per_label.gamma_hat)
        assert sum(pooled.spectral.lambdas) > sum(known.spectral.lambdas)

    def test_raw_weights(self, engine, source_dataset, sampler, analytic_ratio, target_pool):
        report = engine.run(
            source_dataset,
            config(TestMethod.CSPCR_PE, normalize_weights=False),
            sampler,
            ratio=analytic_ratio,
            target_pool=target_pool,
        )

        assert report.diagnostics.weight_mean != pytest.approx(1.0)
        assert_consistent(report)

    def test_needs_target_information(self, engine, source_dataset, sampler, analytic_ratio):
        with pytest.raises(ConfigurationError):
            engine.run(source_dataset, config(TestMethod.CSPCR_PE), sampler, ratio=analytic_ratio)

    def test_missing_control_variate_column(self, engine, source_dataset, sampler, analytic_ratio):
        with pytest.raises(ConfigurationError):
            engine.run(
                source_dataset,
                config(TestMethod.CSPCR_PE),
                sampler,
                ratio=analytic_ratio,
                control_variate=CovariateColumn("v_4"),
                a_target_mean=0.0,
            )


class TestRunPcr:
    """Test the unweighted baseline."""

    def test_threshold_is_chi2_quantile(self, engine, source_dataset, sampler):
        """The PCR null is chi2 with L - 1 degrees of freedom."""
        report = engine.run(source_dataset, config(TestMethod.PCR), sampler)

        np.testing.assert_allclose(report.spectral.lambdas, (1.0, 1.0, 0.0), atol=1e-12)
        if not report.reject:
            assert report.threshold == pytest.approx(5.991, abs=0.01)
        assert report.diagnostics.ess == pytest.approx(source_dataset.n)


class TestRunIs:
    """Test the importance-resampling comparator."""

    def test_uniform_weights_full_resample_equals_pcr(self, engine, source_dataset, sampler):
        resampled = engine.run(
            source_dataset,
            config(TestMethod.IS, m_resample=source_dataset.n),
            sampler,
            ratio=ConstantRatio(1.0),
        )
        plain = engine.run(source_dataset, config(TestMethod.PCR), sampler)

        assert resampled.method == TestMethod.IS
        assert resampled.labels == plain.labels
        assert resampled.statistic == plain.statistic
        assert resampled.threshold == plain.threshold

    def test_default_resample_size(self, engine, source_dataset, sampler, analytic_ratio):
        report = engine.run(source_dataset, config(TestMethod.IS), sampler, ratio=analytic_ratio)

        assert report.n == int(source_dataset.n * 0.2)
        assert_consistent(report)

    def test_resample_larger_than_data(self, engine, source_dataset, sampler):
        with pytest.raises(ConfigurationError):
            engine.run(
                source_dataset,
                config(TestMethod.IS, m_resample=source_dataset.n + 1),
                sampler,
                ratio=ConstantRatio(1.0),
            )

    def test_zero_weights(self, engine, source_dataset, sampler):
        with pytest.raises(DegenerateWeightsError):
            engine.run(
                source_dataset,
                config(TestMethod.IS),
                sampler,
                ratio=PrecomputedRatio(np.zeros(source_dataset.n)),
            )
