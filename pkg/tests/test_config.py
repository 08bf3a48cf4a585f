"""Unit tests for environment and scenario configuration."""
import math
import os
import sys
from unittest.mock import patch

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.optimal_wait.config import NumericSettings, OptimalWaitConfig
from src.optimal_wait.config.scenario_config import (dump_scenario_config, load_scenario_config,
                                                     parse_scenario_text)
from src.optimal_wait.distributions import Exponential, Lomax
from src.optimal_wait.errors import ConfigError

ENV_VARS = ("OPTWAIT_LOG_LEVEL", "OPTWAIT_LOG_FILE", "OPTWAIT_ASSIGNMENT_PROB",
            "OPTWAIT_BASELINE_TAU", "OPTWAIT_UPPER_BOUND_FACTOR")

SCENARIO = """
# coupled Lomax scenario
family1 = lomax
shape1 = 2
scale1 = 0.05
family2 = Lomax   # case is ignored
shape2 = 2
scale2 = 0.05
p = 0.1
B = 50
C_HI = 100
"""


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


@patch('src.optimal_wait.config.optwait_config.load_dotenv')
def test_config_defaults(mock_load_dotenv, clean_env):
    """Tests loading config with nothing set in the environment."""
    config = OptimalWaitConfig.load_from_env()
    assert config.log_level == "WARNING"
    assert config.log_file is None
    assert config.assignment_prob == 0.35
    assert config.baseline_tau == 600.0
    assert config.numerics == NumericSettings()
    mock_load_dotenv.assert_called_once()


@patch('src.optimal_wait.config.optwait_config.load_dotenv')
def test_config_load_success(mock_load_dotenv, clean_env):
    """Tests successful loading of config from environment variables."""
    clean_env.setenv("OPTWAIT_LOG_LEVEL", "debug")
    clean_env.setenv("OPTWAIT_LOG_FILE", "/tmp/optwait.log")
    clean_env.setenv("OPTWAIT_ASSIGNMENT_PROB", "0.5")
    clean_env.setenv("OPTWAIT_BASELINE_TAU", "300")
    clean_env.setenv("OPTWAIT_UPPER_BOUND_FACTOR", "20")

    config = OptimalWaitConfig.load_from_env()
    assert config.log_level == "DEBUG"
    assert config.log_file == "/tmp/optwait.log"
    assert config.assignment_prob == 0.5
    assert config.baseline_tau == 300.0
    assert config.numerics.upper_bound_factor == 20.0


@pytest.mark.parametrize("name, value, message", [
    ("OPTWAIT_LOG_LEVEL", "LOUD", "OPTWAIT_LOG_LEVEL"),
    ("OPTWAIT_ASSIGNMENT_PROB", "1.0", "strictly between"),
    ("OPTWAIT_ASSIGNMENT_PROB", "half", "must be a number"),
    ("OPTWAIT_BASELINE_TAU", "-5", "non-negative"),
    ("OPTWAIT_UPPER_BOUND_FACTOR", "0.5", "exceed 1"),
])
@patch('src.optimal_wait.config.optwait_config.load_dotenv')
def test_config_load_invalid_value(mock_load_dotenv, clean_env, name, value, message):
    """Tests config loading failure on out-of-range values."""
    clean_env.setenv(name, value)
    with pytest.raises(ConfigError, match=message):
        OptimalWaitConfig.load_from_env()


def test_scenario_parses_comments_and_case():
    config = parse_scenario_text(SCENARIO)
    scenario = config.scenario
    assert scenario.dist1 == Lomax(shape=2.0, scale=0.05)
    assert scenario.dist2 == Lomax(shape=2.0, scale=0.05)
    assert (scenario.p, scenario.B, scenario.C_HI) == (0.1, 50.0, 100.0)
    assert scenario.c_int is None
    assert config.baseline_tau == 600.0


def test_scenario_defaults():
    config = parse_scenario_text("family1 = exponential\nscale1 = 0.1\nC_int = 10\n")
    assert config.scenario.dist1 == Exponential(rate=0.1)
    assert config.scenario.dist2 is None
    assert (config.scenario.p, config.scenario.B, config.scenario.C_HI) == (0.0, 0.0, 0.0)
    assert config.scenario.c_int == 10.0


@pytest.mark.parametrize("text, message", [
    ("family1 = lomax\nshape1 = 2\nscale1 = 0.5\np = 1.2\n", r"p must lie in \[0, 1\)"),
    ("family1 = lomax\nshape1 = 2\nscale1 = 0.5\np = 1\n", r"p must lie in \[0, 1\)"),
    ("family1 = lomax\nshape1 = 2\nscale1 = 0.5\ncolour = red\n", "unknown key 'colour'"),
    ("family1 = lomax\nfamily1 = weibull\n", "set twice"),
    ("shape1 = 2\n", "family1"),
    ("family1 = lomax\nshape1 = two\n", "must be a number"),
    ("family1 = lomax\nshape1 = inf\n", "must be finite"),
    ("family1 lomax\n", "key = value"),
    ("family1 = gamma\nscale1 = 1\n", "Invalid scenario"),
    ("family1 = lomax\nshape1 = 2\nscale1 = 0.5\nbaseline_tau = -1\n", "baseline_tau"),
])
def test_scenario_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_scenario_text(text)


def test_scenario_dump_is_canonical():
    dumped = dump_scenario_config(parse_scenario_text(SCENARIO))
    assert dumped.splitlines()[:4] == ["family1 = lomax", "shape1 = 2", "scale1 = 0.05", "family2 = lomax"]
    assert "baseline_tau = 600" in dumped
    again = parse_scenario_text(dumped)
    assert dump_scenario_config(again) == dumped
    assert again.scenario == parse_scenario_text(SCENARIO).scenario


def test_scenario_file_loading(tmp_path):
    path = tmp_path / "scenario.conf"
    path.write_text(SCENARIO, encoding="utf-8")
    assert load_scenario_config(path).scenario.C_HI == 100.0
    with pytest.raises(ConfigError, match="Cannot read"):
        load_scenario_config(tmp_path / "missing.conf")


def test_numeric_settings_are_immutable():
    settings = NumericSettings()
    assert settings.bisection_lower == 1e-9
    assert math.isclose(settings.joint_relative_step, 1e-5)
    with pytest.raises(AttributeError):
        settings.bisection_lower = 1.0


def test_only_canonical_text_round_trips_byte_for_byte():
    assert dump_scenario_config(parse_scenario_text(SCENARIO)) != SCENARIO
    canonical = dump_scenario_config(parse_scenario_text(SCENARIO))
    assert dump_scenario_config(parse_scenario_text(canonical)) == canonical
