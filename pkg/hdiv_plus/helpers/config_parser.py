"""Study configuration parsing for hdiv-plus.

Config files are flat ``key=value`` text; ``#`` starts a comment and blank
lines are ignored. Command-line values override file values, then the
merged mapping is validated by a voluptuous schema.
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path
from typing import Any

import voluptuous as vol

from ..const import (
    CONF_BIG,
    CONF_DIRECT,
    CONF_FAMILY,
    CONF_K,
    CONF_LEVELS,
    CONF_MESH,
    CONF_N,
    CONF_OUT,
    CONF_PROJECTION,
    CONF_QUAD_BUMP,
    MAX_K,
    MAX_LEVEL,
    MAX_N,
    MIN_K,
    MIN_LEVEL,
)
from ..exceptions import ConfigurationError
from ..models import MeshFamily, SpaceFamily

KNOWN_KEYS = (
    CONF_MESH,
    CONF_FAMILY,
    CONF_K,
    CONF_N,
    CONF_LEVELS,
    CONF_OUT,
    CONF_DIRECT,
    CONF_BIG,
    CONF_QUAD_BUMP,
    CONF_PROJECTION,
)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read a key=value file into raw strings."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigurationError(f"cannot read config file {path}: {err}") from err

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def parse_int_list(value: Any) -> tuple[int, ...]:
    """Parse "0,1,2", "0..3", a single int or an iterable of ints."""
    if isinstance(value, int):
        return (value,)
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    text = str(value).strip()
    if not text:
        return ()
    if ".." in text:
        lo, hi = parse_range(text)
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as err:
        raise vol.Invalid(f"expected a list of integers, got {text!r}") from err


def parse_range(value: Any) -> tuple[int, int]:
    """Parse "LO..HI" (or a single integer) into an inclusive range."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = int(value[0]), int(value[1])
    else:
        text = str(value).strip()
        lo_text, sep, hi_text = text.partition("..")
        try:
            lo = int(lo_text)
            hi = int(hi_text) if sep else lo
        except ValueError as err:
            raise vol.Invalid(f"expected LO..HI, got {text!r}") from err
    if lo > hi:
        raise vol.Invalid(f"empty range {lo}..{hi}")
    return lo, hi


def _each_in(lo: int, hi: int) -> Any:
    def validate(values: tuple[int, ...]) -> tuple[int, ...]:
        for v in values:
            if not lo <= v <= hi:
                raise vol.Invalid(f"value {v} outside [{lo}, {hi}]")
        return values

    return validate


STUDY_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_MESH): vol.All(str, vol.Lower, vol.Coerce(MeshFamily)),
        vol.Optional(CONF_FAMILY): vol.All(str, vol.Upper, vol.Coerce(SpaceFamily)),
        vol.Optional(CONF_K): vol.All(
            parse_int_list, vol.Length(min=1), _each_in(MIN_K, MAX_K)
        ),
        vol.Optional(CONF_N): vol.All(
            parse_int_list,
            vol.Length(min=1, msg="enrichment list must not be empty"),
            _each_in(0, MAX_N),
        ),
        vol.Optional(CONF_LEVELS): vol.All(parse_range, _each_in(MIN_LEVEL, MAX_LEVEL)),
        vol.Optional(CONF_OUT): vol.All(str, vol.Length(min=1), vol.Coerce(Path)),
        vol.Optional(CONF_DIRECT, default=False): vol.Boolean(),
        vol.Optional(CONF_BIG, default=False): vol.Boolean(),
        vol.Optional(CONF_PROJECTION, default=False): vol.Boolean(),
        vol.Optional(CONF_QUAD_BUMP): vol.All(vol.Coerce(int), vol.Range(min=0, max=16)),
    }
)


def build_study_options(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Merge file values with overrides (None overrides are skipped) and validate."""
    merged: dict[str, Any] = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return dict(STUDY_SCHEMA(merged))
    except vol.Invalid as err:
        raise ConfigurationError(f"invalid study configuration: {err}") from err
