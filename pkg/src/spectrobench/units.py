"""Parsing and formatting of suffixed physical quantities.

Bare numbers are rejected on purpose: a silent unit error is the most
likely failure mode when typing optical parameters.
"""

from __future__ import annotations

import re

from spectrobench.core import ValidationError

LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
DENSITY_UNITS = {"/mm": 1e3, "/um": 1e6, "/cm": 1e2, "/m": 1.0}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([^\d\s].*?)?\s*$")


def _split(token: str) -> tuple[float, str]:
    m = _QUANTITY.match(token)
    if not m:
        raise ValidationError(f"cannot parse quantity {token!r}")
    return float(m.group(1)), (m.group(2) or "")


def parse_length(token: str) -> float:
    """``'500nm'`` -> 5e-7. Accepted suffixes: nm, um, µm, mm, cm, m."""
    value, unit = _split(token)
    if not unit:
        raise ValidationError(f"missing length unit in {token!r}")
    if unit not in LENGTH_UNITS:
        raise ValidationError(f"unknown length unit {unit!r} in {token!r}")
    return value * LENGTH_UNITS[unit]


def parse_density(token: str) -> float:
    """Groove density such as ``'300/mm'`` -> 3e5 lines per meter."""
    value, unit = _split(token)
    if not unit:
        raise ValidationError(f"missing density unit in {token!r}")
    if unit not in DENSITY_UNITS:
        raise ValidationError(f"unknown density unit {unit!r} in {token!r}")
    return value * DENSITY_UNITS[unit]


def parse_length_list(token: str) -> list[float]:
    return [parse_length(t) for t in token.split(",") if t.strip()]


def fmt_length(value: float, unit: str = "um", digits: int = 4) -> str:
    return f"{value / LENGTH_UNITS[unit]:.{digits}g}{unit}"
