"""Minimal human-readable key-value config format.

One `dotted.key = value` pair per line; `#` starts a comment; blank lines
ignored. Values are plain strings; comma-separated lists are split by the
consumer. Used for the band-table file and the run config file.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError


def parse_kv_text(text: str) -> dict:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_kv_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read())


def format_kv(pairs: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())


def config_digest(pairs: dict) -> str:
    """Stable digest of a flat config mapping (key order independent)."""
    canon = "".join(f"{k}={pairs[k]}\n" for k in sorted(pairs))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def parse_floats(value: str) -> tuple:
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from None


def parse_ints(value: str) -> tuple:
    try:
        return tuple(int(v) for v in value.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {value!r}") from None
