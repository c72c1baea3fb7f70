"""
Run configuration: loading, schema validation and flag overrides.

A run document is JSON or YAML (JSON parses as YAML). Every key is checked
against the schema below before anything runs; all problems are collected
and reported together.
"""
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import ConfigError, InvalidArgumentError
from .mub import BasisId
from .mzem import MzemSettings
from .protocol import ChannelConfig, EveConfig, ProtocolConfig

logger = logging.getLogger("photonkd.config")

PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "presets")
STATE_KEYS = ("HH", "HV", "VH", "VV")

_INT = "integer"
_NUM = "number"
_BOOL = "boolean"
_STR = "string"
_LIST = "list"
_MAP = "mapping"

_EVE_SCHEMA = {"enabled": _BOOL, "basis_set": _LIST}
_CHANNEL_SCHEMA = {"transmission": _NUM, "depolarizing": _NUM}
_MZEM_SCHEMA = {
    "preset": _STR,
    "phi": _NUM,
    "visibility": _NUM,
    "bs_ratio": _NUM,
    "port_a_even": _BOOL,
    "port_visibility": (_MAP, _LIST),
}
_OUTPUT_SCHEMA = {"stats": _STR, "records": _STR, "alice_key": _STR, "bob_key": _STR}

SCHEMA: Dict[str, Any] = {
    "basis_set": _LIST,
    "n_rounds": _INT,
    "seed": _INT,
    "eve": _EVE_SCHEMA,
    "channel": _CHANNEL_SCHEMA,
    "mzem": _MZEM_SCHEMA,
    "qber_abort_threshold": _NUM,
    "workers": _INT,
    "block_size": _INT,
    "output": _OUTPUT_SCHEMA,
}


@dataclass(frozen=True)
class OutputPaths:
    stats: Optional[str] = None
    records: Optional[str] = None
    alice_key: Optional[str] = None
    bob_key: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    output: OutputPaths = field(default_factory=OutputPaths)


def _matches(value: Any, kind: str) -> bool:
    if kind == _BOOL:
        return isinstance(value, bool)
    if kind == _INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == _NUM:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == _STR:
        return isinstance(value, str)
    if kind == _LIST:
        return isinstance(value, list)
    return isinstance(value, dict)


def _check_section(data: Any, schema: Dict[str, Any], prefix: str, problems: List[str]):
    if not isinstance(data, dict):
        problems.append(f"{prefix.rstrip('.') or 'document'}: expected a mapping")
        return
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            problems.append(f"{path}: unknown key")
            continue
        expected = schema[key]
        if isinstance(expected, dict):
            _check_section(value, expected, path + ".", problems)
            continue
        kinds = expected if isinstance(expected, tuple) else (expected,)
        if not any(_matches(value, kind) for kind in kinds):
            problems.append(f"{path}: expected {' or '.join(kinds)}, got {type(value).__name__}")


def validate(document: Any) -> List[str]:
    """Schema diagnostics for a run document; empty when it is well formed."""
    problems: List[str] = []
    _check_section(document, SCHEMA, "", problems)
    return problems


def read_document(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {path}", [str(e)]) from None
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read {path}", [str(e)]) from None
    return document if document is not None else {}


def available_presets() -> List[str]:
    return sorted(os.path.splitext(name)[0] for name in os.listdir(PRESET_DIR) if name.endswith(".yaml"))


def _port_visibility(value: Any) -> Tuple[Tuple[float, float], ...]:
    if isinstance(value, dict):
        unknown = set(value) - set(STATE_KEYS)
        missing = set(STATE_KEYS) - set(value)
        if unknown or missing:
            raise InvalidArgumentError(f"port_visibility needs exactly the keys {', '.join(STATE_KEYS)}")
        value = [value[k] for k in STATE_KEYS]
    pairs = []
    for pair in value:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise InvalidArgumentError("port_visibility entries must be [port A, port B] pairs")
        try:
            pairs.append((float(pair[0]), float(pair[1])))
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"port_visibility entries must be numbers, got {pair}") from None
    return tuple(pairs)


def _mzem_settings(section: Dict[str, Any]) -> MzemSettings:
    values = dict(section)
    if "port_visibility" in values:
        values["port_visibility"] = _port_visibility(values["port_visibility"])
    return MzemSettings(**values)


def load_preset(name: str) -> Dict[str, Any]:
    """
    Raw settings of a shipped MZEM preset.

    Raises:
        ConfigError: unknown preset name or malformed preset file
    """
    path = os.path.join(PRESET_DIR, f"{name}.yaml")
    if not os.path.isfile(path):
        raise ConfigError(f"Unknown MZEM preset '{name}'", [f"available: {', '.join(available_presets())}"])
    with open(path, "r", encoding="utf-8") as f:
        section = yaml.safe_load(f) or {}
    problems: List[str] = []
    _check_section(section, {k: v for k, v in _MZEM_SCHEMA.items() if k != "preset"}, f"preset {name}: ", problems)
    if problems:
        raise ConfigError(f"Malformed MZEM preset '{name}'", problems)
    logger.debug("Loaded MZEM preset %s", name)
    return section


def preset_settings(name: str) -> MzemSettings:
    try:
        return _mzem_settings(load_preset(name))
    except (InvalidArgumentError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed MZEM preset '{name}'", [str(e)]) from None


def build_config(
    document: Dict[str, Any],
    seed: Optional[int] = None,
    rounds: Optional[int] = None,
    workers: Optional[int] = None,
    preset: Optional[str] = None,
) -> RunConfig:
    """
    Turn a validated document plus flag overrides into a RunConfig.

    Flags win over document values. A preset supplies the base MZEM settings
    and inline ``mzem`` keys refine it.

    Raises:
        ConfigError: with one diagnostic per problem found
    """
    problems = validate(document)
    if problems:
        raise ConfigError("Invalid run configuration", problems)

    mzem_section = dict(document.get("mzem", {}))
    preset_name = preset or mzem_section.pop("preset", None)
    mzem_section.pop("preset", None)
    base: Dict[str, Any] = load_preset(preset_name) if preset_name else {}

    try:
        mzem = _mzem_settings({**base, **mzem_section})
    except (InvalidArgumentError, TypeError, ValueError) as e:
        problems.append(f"mzem: {e}")
        mzem = MzemSettings()

    eve_section = document.get("eve", {})
    channel_section = document.get("channel", {})
    try:
        eve = EveConfig(**eve_section)
    except InvalidArgumentError as e:
        problems.append(f"eve.basis_set: {e}")
        eve = EveConfig()

    try:
        basis_set = tuple(BasisId.parse(b) for b in document.get("basis_set", ["B1", "B2"]))
    except InvalidArgumentError as e:
        problems.append(f"basis_set: {e}")
        basis_set = (BasisId.B1, BasisId.B2)

    if problems:
        raise ConfigError("Invalid run configuration", problems)

    values: Dict[str, Any] = {
        key: document[key]
        for key in ("n_rounds", "seed", "qber_abort_threshold", "workers", "block_size")
        if key in document
    }
    overrides = {"seed": seed, "n_rounds": rounds, "workers": workers}
    values.update({k: v for k, v in overrides.items() if v is not None})

    protocol = ProtocolConfig(
        basis_set=basis_set,
        eve=eve,
        channel=ChannelConfig(**channel_section),
        mzem=mzem,
        **values,
    )
    output = OutputPaths(**document.get("output", {}))
    return RunConfig(protocol, output)


def load_config(path: str, **overrides) -> RunConfig:
    """
    Read, validate and build the run configuration stored at ``path``.

    Args:
        path: JSON or YAML document
        overrides: seed, rounds, workers or preset from the command line

    Returns:
        RunConfig ready to run
    """
    document = read_document(path)
    config = build_config(document, **overrides)
    logger.info("Loaded config %s", path)
    return config


def with_output(config: RunConfig, **paths: Optional[str]) -> RunConfig:
    """Replace output paths that are given (not None)."""
    chosen = {k: v for k, v in paths.items() if v is not None}
    return replace(config, output=replace(config.output, **chosen)) if chosen else config
