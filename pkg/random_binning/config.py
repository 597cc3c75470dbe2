"""Configuration loader for the random binning toolkit.

Loads configuration from:
1. Default values (hardcoded)
2. config.yaml file (if exists)
3. A .env file in the working directory (if exists)
4. Environment variables (highest priority)

Environment variables use the pattern: RBN_SECTION__KEY
Examples:
    RBN_SWEEP__WORKERS=4
    RBN_OPTIMIZER__GRID_STEP=0.01
    RBN_LOGGING__LEVEL=DEBUG
"""

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv

from .exceptions import ConfigurationError
from .logging_config import get_logger

logger = get_logger('config')

ENV_PREFIX = "RBN_"


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: Optional[str] = None
    max_bytes: int = 5 * 1024 * 1024  # 5MB
    backup_count: int = 3
    json_format: bool = False


@dataclass
class SpectrumConfig:
    """Entropy-spectrum root finding and table settings."""
    table_size: int = 2048
    table_scale: float = 5.0
    table_edge: float = 1e-6
    root_xtol: float = 1e-13
    alpha_ceiling: float = 4096.0
    max_iterations: int = 400


@dataclass
class PhaseConfig:
    """Phase-diagram settings."""
    boundary_tolerance: float = 1e-9
    max_temperature: float = 5.0
    gamma_scan_points: int = 1025


@dataclass
class OptimizerConfig:
    """Error-exponent optimizer settings."""
    grid_step: float = 0.02
    refine_rounds: int = 3
    refine_shrink: int = 10
    refine_candidates: int = 4
    constraint_tolerance: float = 1e-9
    max_grid_points: int = 250_000
    alpha_ceiling: float = 1000.0
    bisection_iterations: int = 100


@dataclass
class SimulationConfig:
    """Binning simulator settings."""
    default_seed: int = 20110412
    max_sequences: int = 2 ** 26
    materialize_max_n: int = 20
    chunk_size: int = 2 ** 20
    tie_policy: str = "half"
    batch_size: int = 64
    confidence: float = 0.95
    dilution_realizations: int = 32


@dataclass
class SweepConfig:
    """Sweep execution settings."""
    workers: int = 1


@dataclass
class OutputConfig:
    """Output formatting settings."""
    float_digits: int = 12


@dataclass
class Config:
    """Main configuration container."""
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _deep_update(base: dict, updates: dict) -> dict:
    """Recursively update a dictionary."""
    for key, value in updates.items():
        if key in base and isinstance(base[key], dict) and isinstance(value, dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def _coerce(value: str, original, key: str):
    """Convert an environment string to the type of the existing value."""
    try:
        if isinstance(original, bool):
            return value.lower() in ('true', '1', 'yes')
        if isinstance(original, int):
            return int(value)
        if isinstance(original, float):
            return float(value)
        if isinstance(original, list):
            return value.split(',')
    except ValueError as e:
        raise ConfigurationError(f"Cannot parse {key}={value!r}: {e}", config_key=key) from e
    if original is None and value.lower() in ('', 'none', 'null'):
        return None
    return value


def _apply_env_overrides(config_dict: dict) -> dict:
    """Apply environment variable overrides.

    Environment variables use the pattern: RBN_SECTION__KEY
    Double underscore separates nested keys.
    """
    for key, value in os.environ.items():
        if not key.startswith(ENV_PREFIX):
            continue

        path = key[len(ENV_PREFIX):].lower().split("__")
        if len(path) < 2:
            continue

        current = config_dict
        for part in path[:-1]:
            if part not in current:
                current[part] = {}
            current = current[part]

        final_key = path[-1]
        current[final_key] = _coerce(value, current.get(final_key), key)
        logger.debug(f"Applied env override: {key}")

    return config_dict


def _dict_to_config(config_dict: dict) -> Config:
    """Convert a dictionary to Config dataclass, ignoring unknown keys."""
    sections = {}
    for section in fields(Config):
        section_cls = section.default_factory
        values = config_dict.get(section.name) or {}
        sections[section.name] = section_cls(**{
            k: v for k, v in values.items()
            if k in section_cls.__dataclass_fields__
        })
    return Config(**sections)


def _validate(config: Config) -> Config:
    """Reject settings the numerical code cannot work with."""
    if not 0 < config.optimizer.grid_step < 1:
        raise ConfigurationError("optimizer.grid_step must lie in (0, 1)",
                                 config_key='optimizer.grid_step')
    if config.optimizer.refine_shrink < 2:
        raise ConfigurationError("optimizer.refine_shrink must be at least 2",
                                 config_key='optimizer.refine_shrink')
    if config.simulation.tie_policy not in ('half', 'pessimistic'):
        raise ConfigurationError("simulation.tie_policy must be 'half' or 'pessimistic'",
                                 config_key='simulation.tie_policy')
    if not 0 < config.simulation.confidence < 1:
        raise ConfigurationError("simulation.confidence must lie in (0, 1)",
                                 config_key='simulation.confidence')
    if config.sweep.workers < 1:
        raise ConfigurationError("sweep.workers must be at least 1",
                                 config_key='sweep.workers')
    if config.spectrum.table_size < 8:
        raise ConfigurationError("spectrum.table_size must be at least 8",
                                 config_key='spectrum.table_size')
    return config


def load_config(config_path: Optional[str] = None) -> Config:
    """Load configuration from file and environment.

    Args:
        config_path: Path to config file. If None, searches for config.yaml
                    in the working directory and the project root.

    Returns:
        Config object with all settings loaded
    """
    config_dict = asdict(Config())

    if config_path is None:
        search_paths = [
            Path("config.yaml"),
            Path("config.yml"),
            Path(__file__).parent.parent / "config.yaml",
            Path(__file__).parent.parent / "config.yml",
        ]
        for path in search_paths:
            if path.exists():
                config_path = str(path)
                break
    elif not Path(config_path).exists():
        raise ConfigurationError(f"Config file not found: {config_path}", config_key='config_path')

    if config_path and Path(config_path).exists():
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                file_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Failed to parse config file {config_path}: {e}",
                                     config_key='config_path') from e
        config_dict = _deep_update(config_dict, file_config)
        logger.debug(f"Loaded config from: {config_path}")

    load_dotenv(override=False)
    config_dict = _apply_env_overrides(config_dict)

    return _validate(_dict_to_config(config_dict))


# Global config instance (lazy loaded)
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance.

    Loads config on first call, returns cached instance on subsequent calls.
    """
    global _config
    if _config is None:
        _config = load_config()
    return _config


def reload_config(config_path: Optional[str] = None) -> Config:
    """Reload configuration, clearing the cache.

    Args:
        config_path: Optional path to config file

    Returns:
        Newly loaded Config object
    """
    global _config
    _config = load_config(config_path)
    return _config
