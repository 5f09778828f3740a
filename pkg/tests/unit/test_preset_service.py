"""
Unit tests for preset service - named experiments and overrides.
"""
import pytest

from cspcr.core.exceptions import ConfigurationError
from cspcr.models.enums import RatioMode, TestMethod
from cspcr.schemas.config import TestConfig


class TestPresets:
    """Test preset lookup and grid construction."""

    def test_names(self, preset_service):
        assert set(preset_service.names()) >= {
            "typei-vs-ne",
            "typei-vs-beta",
            "power-vs-beta",
            "power-vs-gamma",
            "power-vs-theta",
            "l-sweep",
        }

    def test_l_sweep_grid(self, preset_service):
        grid = preset_service.build("l-sweep", reps=10, config=TestConfig())

        assert grid.sweep.param == "l"
        assert grid.sweep.values == (2.0, 3.0, 5.0, 10.0, 15.0, 20.0)
        assert grid.methods == (TestMethod.CSPCR,)
        assert grid.ratio_mode == RatioMode.ANALYTIC
        assert (grid.base.a_s, grid.base.a_t) == (1.0, 0.0)

    def test_power_preset_alternative(self, preset_service):
        grid = preset_service.build("power-vs-beta", reps=5, config=TestConfig())

        assert (grid.base.a_s, grid.base.a_t, grid.base.beta_indirect) == (0.0, 2.0, 2.0)
        assert TestMethod.IS in grid.methods
        assert grid.ratio_mode == RatioMode.ESTIMATED

    def test_overrides(self, preset_service):
        grid = preset_service.build(
            "typei-vs-beta",
            reps=5,
            config=TestConfig(),
            overrides={"n_labeled": "200", "p": "2", "u": "1,0"},
        )

        assert grid.base.n_labeled == 200
        assert grid.base.u == (1.0, 0.0)
        assert grid.base.v_s == pytest.approx((2**-0.5, 2**-0.5))

    def test_ratio_mode_override(self, preset_service):
        grid = preset_service.build(
            "power-vs-gamma", reps=1, config=TestConfig(), ratio_mode=RatioMode.ANALYTIC
        )

        assert grid.ratio_mode == RatioMode.ANALYTIC

    def test_unknown_preset(self, preset_service):
        with pytest.raises(ConfigurationError):
            preset_service.build("figure-9", reps=1, config=TestConfig())

    def test_invalid_override_value(self, preset_service):
        with pytest.raises(ConfigurationError):
            preset_service.build(
                "l-sweep", reps=1, config=TestConfig(), overrides={"theta_nl": "2.0"}
            )

    def test_vector_of_wrong_length(self, preset_service):
        with pytest.raises(ConfigurationError):
            preset_service.build("l-sweep", reps=1, config=TestConfig(), overrides={"u": "1,2"})


class TestParseOverride:
    """Test KEY=VALUE parsing."""

    def test_scalar(self, preset_service):
        assert preset_service.parse_override("beta_indirect", "1.25") == 1.25

    def test_vector(self, preset_service):
        assert preset_service.parse_override("v_t", "1,2,3") == (1.0, 2.0, 3.0)

    @pytest.mark.parametrize("key", ["k", "alpha", "unknown"])
    def test_unknown_key(self, preset_service, key):
        with pytest.raises(ConfigurationError):
            preset_service.parse_override(key, "1")

    def test_not_a_number(self, preset_service):
        with pytest.raises(ConfigurationError):
            preset_service.parse_override("a_t", "two")
