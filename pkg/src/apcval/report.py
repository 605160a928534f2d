"""JSON/CSV/text rendering of command reports.

JSON has no infinities, and threshold sentinels matter here, so
``+inf``/``-inf`` are written as the strings ``"+inf"``/``"-inf"`` and
restored by :func:`loads`.  Finite floats go through ``repr`` and round-trip
exactly.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from importlib import metadata
from typing import Any

SCHEMA_VERSION = 1


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - running from a checkout
        return "0.1.0"


def _encode(obj: Any) -> Any:
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            raise ValueError("NaN in report")
        if math.isinf(obj):
            return "+inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _decode(obj: Any) -> Any:
    if obj == "+inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def make_report(command: str, inputs: dict[str, Any], result: dict[str, Any] | None = None,
                error: dict[str, Any] | None = None) -> dict[str, Any]:
    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tool": "apcval",
        "tool_version": tool_version(),
        "command": command,
        "inputs": inputs,
    }
    if result is not None:
        report["result"] = result
    if error is not None:
        report["error"] = error
    return report


def dumps(report: dict[str, Any]) -> str:
    return json.dumps(_encode(report), indent=2, allow_nan=False)


def loads(text: str) -> dict[str, Any]:
    return _decode(json.loads(text))


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, list):
        return [(prefix, ";".join(str(x) for x in obj))]
    return [(prefix, obj)]


def to_text(report: dict[str, Any]) -> str:
    rows = _flatten(_encode(report))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def to_csv(report: dict[str, Any]) -> str:
    rows = _flatten(_encode(report))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([k for k, _ in rows])
    writer.writerow([v for _, v in rows])
    return buf.getvalue()


def render(report: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return dumps(report) + "\n"
    if fmt == "text":
        return to_text(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown format {fmt!r}")
