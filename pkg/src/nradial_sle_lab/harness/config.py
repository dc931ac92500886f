"""
Experiment configuration files.

A config is an INI file with three sections:

    [experiment]
    kind = decay-fit
    seed = 7

    [params]
    alpha = 0.5
    times = 1, 1.5, 2, 2.5, 3

    [acceptance]
    slope_rel_tol = 0.05

Values are coerced to int, float or bool where they parse as such; lists stay
comma-separated strings until an experiment asks for them.
"""

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from loguru import logger

OUT_DIR_ENV = "NRADIAL_OUT_DIR"
LOG_LEVEL_ENV = "NRADIAL_LOG_LEVEL"
DEFAULT_OUT_DIR = "results"

# CLI subcommand -> experiment kind.
SUBCOMMANDS: Dict[str, str] = {
    "identities": "identity-suite",
    "dyson": "dyson",
    "trace": "loewner-trace",
    "decay": "decay-fit",
    "approx": "discrete-approx",
    "lattice": "lattice",
}
KINDS = tuple(SUBCOMMANDS.values())


class ConfigValidationError(ValueError):
    """Invalid or missing configuration value; ``field`` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def coerce(value: str) -> Any:
    """Turn an INI string into int, float, bool or a stripped string."""
    text = value.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def as_float_list(value: Any, field_name: str) -> List[float]:
    """Parse "1, 1.5, 2" (or a single number) into floats."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    try:
        return [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ConfigValidationError(field_name, f"expected a comma-separated list of numbers, got {value!r}")


def as_int_list(value: Any, field_name: str) -> List[int]:
    """Parse "1, 2" into integers."""
    floats = as_float_list(value, field_name)
    if any(v != int(v) for v in floats):
        raise ConfigValidationError(field_name, f"expected integers, got {value!r}")
    return [int(v) for v in floats]


@dataclass
class ExperimentConfig:
    """
    A parsed experiment configuration.

    Attributes:
        kind: Experiment kind
        params: Experiment parameters
        acceptance: Acceptance thresholds (and ``enforce``)
        seed: Root seed of every random stream
        threads: Worker pool size
        out_dir: Output root
        source: File the config was read from (None for defaults)
    """
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    acceptance: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    out_dir: str = DEFAULT_OUT_DIR
    source: Optional[str] = None

    def __post_init__(self) -> None:
        """Validate the kind and the harness-level fields."""
        if self.kind not in KINDS:
            raise ConfigValidationError("kind",
                f"unknown experiment kind {self.kind!r}; expected one of {list(KINDS)}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigValidationError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigValidationError("threads", f"must be a positive integer, got {self.threads!r}")


def resolve_out_dir(cli_value: Optional[str] = None, file_value: Optional[str] = None) -> str:
    """CLI flag, then NRADIAL_OUT_DIR, then the config file, then the default."""
    if cli_value:
        return cli_value
    env_value = os.environ.get(OUT_DIR_ENV)
    if env_value:
        return env_value
    return file_value or DEFAULT_OUT_DIR


def load_config(path: Optional[Union[str, Path]] = None, kind: Optional[str] = None,
                seed: Optional[int] = None, threads: Optional[int] = None,
                out_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Read a config file and apply command-line overrides.

    Args:
        path: INI file (None runs the kind with its defaults)
        kind: Kind implied by the CLI subcommand; must match the file if both are given
        seed: Override of [experiment] seed
        threads: Override of [experiment] threads
        out_dir: Override of the output directory

    Returns:
        ExperimentConfig

    Raises:
        ConfigValidationError: If the file is unreadable or inconsistent
    """
    parser = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                parser.read_file(handle)
        except OSError as e:
            raise ConfigValidationError("config", f"cannot read {path}: {e}") from e
        except configparser.Error as e:
            raise ConfigValidationError("config", f"cannot parse {path}: {e}") from e

    def section(name: str) -> Dict[str, Any]:
        return {k: coerce(v) for k, v in parser.items(name)} if parser.has_section(name) else {}

    experiment = section("experiment")
    file_kind = experiment.get("kind")
    if kind is not None and file_kind is not None and file_kind != kind:
        raise ConfigValidationError("kind", f"config declares {file_kind!r} but the command runs {kind!r}")
    resolved_kind = kind or file_kind
    if resolved_kind is None:
        raise ConfigValidationError("kind", "missing; set [experiment] kind or use a subcommand")

    config = ExperimentConfig(
        kind=str(resolved_kind),
        params=section("params"),
        acceptance=section("acceptance"),
        seed=seed if seed is not None else experiment.get("seed", 0),
        threads=threads if threads is not None else experiment.get("threads", 1),
        out_dir=resolve_out_dir(out_dir, experiment.get("out_dir")),
        source=str(path) if path is not None else None,
    )
    logger.debug(f"Loaded {config.kind} config from {config.source or 'defaults'}")
    return config
