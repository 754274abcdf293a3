"""Runtime defaults and configuration-file loading for atris-sim."""

import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from atris_sim.errors import ConfigError
from atris_sim.models import RunConfig

THREADS_ENV = "ATRIS_SIM_THREADS"


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected a positive integer, got {raw!r}", key=THREADS_ENV) from exc
    if value < 1:
        raise ConfigError(f"expected a positive integer, got {value}", key=THREADS_ENV)
    return value


@dataclass
class Config:
    """Runtime settings that are not part of a scenario."""

    # Directory receiving the {study}_{strategy}.csv files
    output_dir: Path = Path("results")
    # Worker threads for Monte Carlo trials (ATRIS_SIM_THREADS caps it)
    threads: int = field(default_factory=_threads_from_env)
    # 0 = quiet, 1 = per-step debug lines (-v)
    verbosity: int = 0


def parse_override(assignment: str) -> tuple[str, Any]:
    """Split `key=value`; the value is read as a TOML literal, else kept as a string."""
    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _assign(data: dict[str, Any], dotted: str, value: Any) -> None:
    node = data
    parts = dotted.split(".")
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError("cannot set a field below a plain value", key=dotted)
        node = child
    node[parts[-1]] = value


def _first_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    key = ".".join(str(part) for part in error["loc"])
    return ConfigError(error["msg"], key=key or None)


def read_config_file(path: Path) -> dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", key="config")
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", key="config") from exc


def parse_config(
    path: Path | None = None,
    overrides: list[str] | None = None,
    flags: dict[str, Any] | None = None,
) -> RunConfig:
    """Defaults < file < `--set` overrides < dedicated flags (dotted keys)."""
    data: dict[str, Any] = read_config_file(path) if path is not None else {}
    for assignment in overrides or []:
        _assign(data, *parse_override(assignment))
    for dotted, value in (flags or {}).items():
        if value is not None:
            _assign(data, dotted, value)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _first_error(exc) from exc
