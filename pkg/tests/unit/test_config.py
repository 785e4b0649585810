"""
Unit tests for configuration loading and validation.

These tests ensure:
  1. Config loads from environment variables correctly
  2. Type conversions work (e.g., strings to ints and floats)
  3. Out-of-range numerical defaults are rejected at startup
  4. Helpful error messages name the offending setting
"""

import pytest
from unittest.mock import patch
from src.config import Config, validate_config


def _valid(mock_config):
    mock_config.GRID_N_R = 48
    mock_config.GRID_N_THETA = 24
    mock_config.GRID_GRADING = 2.0
    mock_config.SOLVER_TOL = 1e-6
    mock_config.SOLVER_MAX_ITER = 5000
    mock_config.SOLVER_ARMIJO = 1e-4
    mock_config.BLOWUP_FACTOR = 50.0
    mock_config.BLOWUP_STEPS = 3
    mock_config.ORACLE_MIN_ORDER = 1.5
    mock_config.OUTPUT_DIR = "runs"


class TestConfigLoading:
    """Test configuration loading from environment."""

    @patch.dict("os.environ", {"GRID_N_R": "64", "GRID_N_THETA": "32"})
    def test_integer_config_conversion(self):
        """Integer environment variables should be converted to int."""
        config = Config(_env_file=None)
        assert isinstance(config.GRID_N_R, int)
        assert config.GRID_N_R == 64
        assert config.GRID_N_THETA == 32

    @patch.dict("os.environ", {"SOLVER_TOL": "1e-8", "GRID_GRADING": "1.5"})
    def test_float_config_conversion(self):
        """Float environment variables accept scientific notation."""
        config = Config(_env_file=None)
        assert config.SOLVER_TOL == pytest.approx(1e-8)
        assert config.GRID_GRADING == 1.5

    @patch.dict("os.environ", {"LOG_JSON": "false"})
    def test_boolean_config_conversion(self):
        """Boolean environment variables should be converted correctly."""
        config = Config(_env_file=None)
        assert config.LOG_JSON is False

    def test_optional_config_defaults(self):
        """Numerical settings have documented defaults."""
        config = Config(_env_file=None)
        assert config.BLOWUP_FACTOR == 50.0
        assert config.BLOWUP_STEPS == 3
        assert config.ORACLE_MIN_ORDER == 1.5
        assert isinstance(config.DEBUG, bool)


class TestConfigValidation:
    """Test configuration validation function."""

    @patch("src.config.config")
    def test_valid_config_passes(self, mock_config):
        """Defaults validate and report a status dict."""
        _valid(mock_config)
        status = validate_config()
        assert status["grid"].startswith("48x24")
        assert status["output"] == "runs"

    @patch("src.config.config")
    def test_validate_grid_minimum(self, mock_config):
        """Grids coarser than 8 intervals are rejected."""
        _valid(mock_config)
        mock_config.GRID_N_THETA = 4

        with pytest.raises(ValueError, match="GRID_N_R and GRID_N_THETA"):
            validate_config()

    @patch("src.config.config")
    def test_validate_armijo_range(self, mock_config):
        """The Armijo constant must lie in (0, 0.5)."""
        _valid(mock_config)
        mock_config.SOLVER_ARMIJO = 0.7

        with pytest.raises(ValueError, match="SOLVER_ARMIJO"):
            validate_config()

    @patch("src.config.config")
    def test_validate_collects_every_error(self, mock_config):
        """All problems are reported in one message."""
        _valid(mock_config)
        mock_config.BLOWUP_FACTOR = 1.0
        mock_config.ORACLE_MIN_ORDER = 0.5

        with pytest.raises(ValueError) as exc_info:
            validate_config()
        assert "BLOWUP_FACTOR" in str(exc_info.value)
        assert "ORACLE_MIN_ORDER" in str(exc_info.value)
