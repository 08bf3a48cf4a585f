"""
Scenario files for the coupled-threshold and simulation commands.

A scenario file holds ``key = value`` lines; ``#`` starts a comment.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from ..distributions import make_distribution
from ..errors import ConfigError, OptimalWaitError
from ..joint_opt import CoupledScenario

logger = logging.getLogger(__name__)

SCENARIO_KEYS = ("family1", "shape1", "scale1", "family2", "shape2", "scale2",
                 "p", "B", "C_HI", "C_int", "baseline_tau")
_TEXT_KEYS = ("family1", "family2")
DEFAULTS: Dict[str, object] = {"p": 0.0, "B": 0.0, "C_HI": 0.0, "baseline_tau": 600.0}


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario plus the values it was built from, in canonical key order."""
    scenario: CoupledScenario
    baseline_tau: float
    values: Dict[str, object] = field(default_factory=dict)


def _parse_number(key: str, raw: str, line_no: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"Line {line_no}: '{key}' must be a number, got {raw!r}.") from None
    if not math.isfinite(value):
        raise ConfigError(f"Line {line_no}: '{key}' must be finite, got {raw!r}.")
    return value


def parse_scenario_text(text: str) -> ScenarioConfig:
    """
    Parse and validate scenario text.

    Missing optional keys take the values in ``DEFAULTS``.

    Raises:
        ConfigError: On unknown or repeated keys, malformed lines or out-of-range values
    """
    found: Dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"Line {line_no}: expected 'key = value', got {line.strip()!r}.")
        key, raw = (part.strip() for part in content.split("=", 1))
        if key not in SCENARIO_KEYS:
            raise ConfigError(f"Line {line_no}: unknown key '{key}'. Known keys: {', '.join(SCENARIO_KEYS)}.")
        if key in found:
            raise ConfigError(f"Line {line_no}: key '{key}' is set twice.")
        found[key] = raw.lower() if key in _TEXT_KEYS else _parse_number(key, raw, line_no)

    if "family1" not in found:
        raise ConfigError("Scenario is missing the required key 'family1'.")
    values = {key: found.get(key, DEFAULTS.get(key)) for key in SCENARIO_KEYS}
    values = {key: value for key, value in values.items() if value is not None}

    p = values["p"]
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"p must lie in [0, 1), got {p:g}.")
    try:
        dist1 = make_distribution(values["family1"], values.get("shape1"), values.get("scale1"))
        dist2 = None
        if "family2" in values:
            dist2 = make_distribution(values["family2"], values.get("shape2"), values.get("scale2"))
        scenario = CoupledScenario(dist1=dist1, dist2=dist2, p=p, B=values["B"],
                                   C_HI=values["C_HI"], c_int=values.get("C_int"))
    except OptimalWaitError as e:
        raise ConfigError(f"Invalid scenario: {e}") from e
    baseline_tau = values["baseline_tau"]
    if baseline_tau < 0.0:
        raise ConfigError(f"baseline_tau must be non-negative, got {baseline_tau:g}.")
    return ScenarioConfig(scenario, baseline_tau, values)


def load_scenario_config(path: Union[str, Path]) -> ScenarioConfig:
    """Read a scenario file; see ``parse_scenario_text``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read scenario file '{path}': {e}") from e
    logger.info(f"Loaded scenario from {path}")
    return parse_scenario_text(text)


def dump_scenario_config(config: ScenarioConfig) -> str:
    """
    Canonical text: every set key in ``SCENARIO_KEYS`` order, numbers with 12 significant digits.

    Comments, spacing, key order and number spelling of the source are not
    kept, so a file reproduces byte for byte only once it is canonical:
    dump(parse(dump(c))) == dump(c), while dump(parse(text)) may differ from text.
    """
    lines = []
    for key in SCENARIO_KEYS:
        value: Optional[object] = config.values.get(key)
        if value is None:
            continue
        lines.append(f"{key} = {value}" if key in _TEXT_KEYS else f"{key} = {value:.12g}")
    return "\n".join(lines) + "\n"
