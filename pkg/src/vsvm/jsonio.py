"""Canonical JSON for byte-stable reports.

json.dumps does not expose float formatting, so this tiny serializer walks the
structure itself: dict order is preserved, floats are printed with 17
significant digits (always keeping a decimal point so they parse back as
floats), and infinities use the ``Infinity`` literal that ``json.loads``
already understands. Serializing a parsed document reproduces it byte for
byte.
"""

from __future__ import annotations

import json
import math


def format_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("reports must not contain NaN")
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".eE"):
        text += ".0"
    return text


def dumps(value, indent: int = 2) -> str:
    out: list[str] = []
    _emit(value, 0, indent, out)
    return "".join(out)


def loads(text: str):
    return json.loads(text)


def _emit(value, level: int, indent: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    closing_pad = " " * (indent * level)
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_float(value))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, item) in enumerate(value.items()):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {type(key).__name__}")
            out.append(f"{pad}{json.dumps(key)}: ")
            _emit(item, level + 1, indent, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(f"{closing_pad}}}")
    elif isinstance(value, (list, tuple)):
        if not len(value):
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(value):
            out.append(pad)
            _emit(item, level + 1, indent, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(f"{closing_pad}]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")
