"""
Configuration loading for simhammer.

Configuration files use the dotenv ``key=value`` format with dotted keys
(``geometry.rows_per_bank=64``). The ``include`` key pulls in a preset
name or another file first; keys of the including file override it.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from .exceptions import InvalidConfigurationError
from .models.experiments import ExperimentConfig

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).resolve().parent / "presets"

ENV_SEED = "SIMHAMMER_SEED"
ENV_OUT_DIR = "SIMHAMMER_OUT_DIR"
ENV_LOG_LEVEL = "SIMHAMMER_LOG_LEVEL"


def available_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.env"))


def preset_path(name: str) -> Path:
    """
    Raises:
        InvalidConfigurationError: If no preset has that name
    """
    path = PRESETS_DIR / f"{name}.env"
    if not path.is_file():
        raise InvalidConfigurationError(
            f"unknown preset '{name}'",
            details={"available": available_presets()},
        )
    return path


def _resolve_include(target: str, including: Path) -> Path:
    if "/" not in target and not target.endswith(".env"):
        return preset_path(target)
    path = Path(target)
    if not path.is_absolute():
        path = including.parent / path
    return path.resolve()


def load_values(path: Union[str, Path], _stack: Optional[List[Path]] = None) -> Dict[str, str]:
    """
    Read a configuration file and its includes into a flat key/value mapping.

    Raises:
        InvalidConfigurationError: If a file is missing or includes form a cycle
    """
    path = Path(path).resolve()
    stack = list(_stack or [])
    if path in stack:
        chain = " -> ".join(str(p) for p in stack + [path])
        raise InvalidConfigurationError(f"include cycle: {chain}", details={"path": str(path)})
    if not path.is_file():
        raise InvalidConfigurationError(f"configuration file not found: {path}", details={"path": str(path)})

    raw = dotenv_values(path)
    values: Dict[str, str] = {}
    include = raw.pop("include", None)
    if include:
        for target in include.split(","):
            values.update(load_values(_resolve_include(target.strip(), path), stack + [path]))
    for key, value in raw.items():
        if value is None or value == "":
            continue
        values[key] = value
    logger.debug("loaded %d keys from %s", len(values), path)
    return values


def apply_overrides(values: Dict[str, Any], overrides: Optional[List[str]]) -> Dict[str, Any]:
    """
    Apply ``key=value`` strings on top of ``values``.

    Raises:
        InvalidConfigurationError: If an override has no ``=``
    """
    result = dict(values)
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InvalidConfigurationError(f"override '{item}' must be key=value", details={"override": item})
        key, value = key.strip(), value.strip()
        # An empty value resets the key to its default.
        if value:
            result[key] = value
        else:
            result.pop(key, None)
    return result


def build_config(values: Mapping[str, Any]) -> ExperimentConfig:
    """
    Turn dotted keys into nested sections and validate them.

    Raises:
        InvalidConfigurationError: If a key is unknown or a value is invalid
    """
    nested: Dict[str, Any] = {}
    for key, value in values.items():
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise InvalidConfigurationError(
                    f"key '{key}' conflicts with scalar '{part}'", details={"key": key}
                )
            node = child
        node[parts[-1]] = value
    try:
        return ExperimentConfig.model_validate(nested)
    except ValidationError as e:
        problems = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise InvalidConfigurationError(
            "invalid configuration: " + "; ".join(problems),
            details={"errors": problems},
        ) from e


def load_config(
    path: Optional[Union[str, Path]] = None,
    preset: Optional[str] = None,
    overrides: Optional[List[str]] = None,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    env: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Build the run configuration.

    Precedence, lowest first: preset, file, environment, overrides and
    explicit arguments.

    Args:
        path: Configuration file
        preset: Preset name applied before the file
        overrides: ``key=value`` strings
        seed: Seed override
        output_dir: Output directory override
        env: Environment mapping (default: ``os.environ``)
    """
    env = os.environ if env is None else env
    values: Dict[str, Any] = {}
    if preset:
        values.update(load_values(preset_path(preset)))
    if path:
        values.update(load_values(path))
    if env.get(ENV_SEED):
        values["seed"] = env[ENV_SEED]
    if env.get(ENV_OUT_DIR):
        values["output_dir"] = env[ENV_OUT_DIR]
    values = apply_overrides(values, overrides)
    if seed is not None:
        values["seed"] = seed
    if output_dir is not None:
        values["output_dir"] = output_dir
    return build_config(values)
