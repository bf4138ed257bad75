"""Flat key=value config files with dataclass-typed overrides.

Precedence everywhere: command-line flag > config file > dataclass default.
"""

from __future__ import annotations

import dataclasses
from typing import Any, TypeVar

from .exceptions import ConfigError

T = TypeVar("T")


def parse_kv_file(path: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment; blanks ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def build_config(cls: type[T], file_values: dict[str, str], overrides: dict[str, Any]) -> T:
    """Instantiate a config dataclass from string file values plus overrides."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, raw in file_values.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r} for {cls.__name__}")
        kwargs[key] = _coerce(raw, fields[key].type, key)
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    return cls(**kwargs)


def _coerce(raw: str, annotation: Any, key: str) -> Any:
    text = str(annotation)
    try:
        if "bool" in text:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in text:
            return int(raw)
        if "float" in text:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {text}") from exc
