"""Flat ``key = value`` text files and strict CSV output."""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np


def format_value(v: Any) -> str:
    # repr() of a float is the shortest round-trip decimal
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def parse_value(text: str, like: Any) -> Any:
    """Parse ``text`` into the type of the default value ``like``."""
    text = text.strip()
    if isinstance(like, bool):
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def read_kv(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_kv(path: str | Path, items: Mapping[str, Any]) -> None:
    lines = [f"{k} = {format_value(v)}\n" for k, v in items.items()]
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def dataclass_to_kv(obj, prefix: str = "") -> dict[str, Any]:
    return {prefix + f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}


def dataclass_from_kv(cls, items: Mapping[str, str], prefix: str = "", base=None, strict: bool = False):
    """Build ``cls`` from string items, falling back to ``base`` (or defaults).

    With ``strict``, keys that name no field raise ``KeyError``.
    """
    base = base if base is not None else cls()
    if strict:
        names = {prefix + f.name for f in dataclasses.fields(cls)}
        unknown = sorted(k for k in items if k not in names)
        if unknown:
            raise KeyError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    updates = {}
    for f in dataclasses.fields(cls):
        key = prefix + f.name
        if key in items:
            updates[f.name] = parse_value(items[key], getattr(base, f.name))
    return dataclasses.replace(base, **updates)


def write_csv(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
