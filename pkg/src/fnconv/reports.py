"""Machine-readable reports and their JSON/markdown rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = "1"


@dataclass
class Check:
    """One verdict inside a report.

    ``worst`` is the worst observed slack in the direction of violation: the
    check passes iff ``worst <= tol``.
    """

    name: str
    passed: bool
    worst: float
    tol: float
    witness: dict | None = None
    note: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "worst": self.worst, "tol": self.tol}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    name: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "report": self.name,
            "verdict": self.verdict,
            "checks": [c.to_json() for c in self.checks],
            "info": self.info,
        }


def _encode(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, complex):
        return "[" + _encode(obj.real) + ", " + _encode(obj.imag) + "]"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        items = [json.dumps(str(k), ensure_ascii=False) + ": " + _encode(v) for k, v in obj.items()]
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "to_json"):
        return _encode(obj.to_json())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialize to JSON with every float written to 17 significant digits."""
    return _encode(obj) + "\n"


def decode_float(v) -> float:
    """Inverse of the float encoding used by :func:`dumps`."""
    if isinstance(v, str):
        return float(v)
    return float(v)


def to_markdown(payload: dict) -> str:
    lines = [f"# {payload.get('command', 'report')}", ""]
    manifest = payload.get("manifest")
    if manifest:
        lines += ["| manifest | value |", "|---|---|"]
        lines += [f"| {k} | {v} |" for k, v in manifest.items()]
        lines.append("")
    for rep in payload.get("reports", []):
        lines.append(f"## {rep.get('report', rep.get('name', ''))}: {rep.get('verdict', '')}")
        lines.append("")
        checks = rep.get("checks")
        if checks:
            lines += ["| check | passed | worst | tol |", "|---|---|---|---|"]
            for c in checks:
                lines.append(f"| {c['name']} | {c['passed']} | {c['worst']:.6g} | {c['tol']:.1e} |")
            lines.append("")
        if "value" in rep:
            lines.append(f"value: {rep['value']:.12g}")
            lines.append("")
        for key in ("cases",):
            if rep.get(key):
                lines += ["| case | worst | passed |", "|---|---|---|"]
                for case in rep[key]:
                    lines.append(f"| {case.get('label', '')} | {case.get('worst', float('nan')):.6g} | {case.get('passed', '')} |")
                lines.append("")
    return "\n".join(lines) + "\n"
