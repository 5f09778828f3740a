"""
Unit tests for core helpers - randomness streams, exceptions, settings and statistics.
"""
import logging

import numpy as np
import pytest

from cspcr.core.config import Settings
from cspcr.core.exceptions import (
    ConfigurationError,
    DegenerateWeightsError,
    InputError,
    NonFiniteError,
    NumericalError,
)
from cspcr.core.logging import configure_logging
from cspcr.core.random import Stream, derive_seed, int32_seed, substream
from cspcr.models.statistic import CovariateColumn, first_surrogate, y_times_x


class TestRandomStreams:
    """Test named sub-streams."""

    def test_same_key_same_draws(self):
        first = substream(7, Stream.LABELING, 3).standard_normal(4)
        second = substream(7, Stream.LABELING, 3).standard_normal(4)

        np.testing.assert_array_equal(first, second)

    def test_streams_are_distinct(self):
        labeling = substream(7, Stream.LABELING, 3).standard_normal(4)
        ties = substream(7, Stream.TIE_BREAKS, 3).standard_normal(4)
        other_row = substream(7, Stream.LABELING, 4).standard_normal(4)

        assert not np.array_equal(labeling, ties)
        assert not np.array_equal(labeling, other_row)

    def test_derived_seeds(self):
        seed = derive_seed(2**64 - 1, Stream.SIMULATION, 0, 1)

        assert 0 <= seed < 2**64
        assert seed == derive_seed(2**64 - 1, Stream.SIMULATION, 0, 1)
        assert 0 <= int32_seed(seed) < 2**32


class TestExceptions:
    """Test the exit-code contract."""

    def test_input_errors_exit_two(self):
        assert NonFiniteError(1, "x").exit_code == 2
        assert issubclass(ConfigurationError, InputError)

    def test_numerical_errors_exit_three(self):
        assert DegenerateWeightsError().exit_code == 3
        assert issubclass(DegenerateWeightsError, NumericalError)

    def test_detail_message(self):
        assert NonFiniteError(4, "z[1]").detail == "Non-finite value at row 4, field z[1]"


class TestSettingsAndLogging:
    def test_environment_override(self, monkeypatch):
        monkeypatch.setenv("CSPCR_DEFAULT_K", "20")

        assert Settings(_env_file=None).default_k == 20

    def test_verbosity_levels(self):
        settings = Settings(_env_file=None)

        configure_logging(settings, verbosity=1)
        assert logging.getLogger("cspcr").level == logging.INFO

        configure_logging(settings, verbosity=2)
        assert logging.getLogger("cspcr").level == logging.DEBUG
        assert len(logging.getLogger("cspcr").handlers) == 1


class TestStatistics:
    """Test the built-in statistic and control variates."""

    def test_y_times_x(self):
        np.testing.assert_array_equal(
            y_times_x(np.array([1.0, -2.0]), 3.0, np.zeros(2), np.zeros(1)), [3.0, -6.0]
        )

    def test_first_surrogate(self):
        v = np.array([[1.0, 9.0], [2.0, 8.0]])

        np.testing.assert_array_equal(first_surrogate(np.zeros(2), np.zeros((2, 1)), v), [1.0, 2.0])

    def test_covariate_column(self):
        z = np.array([[1.0, 5.0], [2.0, 6.0]])

        np.testing.assert_array_equal(CovariateColumn("z_2")(np.zeros(2), z, np.zeros((2, 1))), [5.0, 6.0])

    @pytest.mark.parametrize("name", ["x_1", "z0", "v_0", "z_"])
    def test_bad_column_name(self, name):
        with pytest.raises(ValueError):
            CovariateColumn(name)
