"""Deterministic CSV/JSON emission with a config/threshold header."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from . import __version__


def fmt_number(x) -> str:
    """Exact decimal for terminating rationals, ``num/den`` otherwise; floats to 12 digits."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        den = x.denominator
        twos = fives = 0
        while den % 2 == 0:
            den //= 2
            twos += 1
        while den % 5 == 0:
            den //= 5
            fives += 1
        if den != 1:
            return f"{x.numerator}/{x.denominator}"
        places = max(twos, fives)
        scaled = x * 10**places
        sign = "-" if scaled < 0 else ""
        digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
        return f"{sign}{digits[:-places]}.{digits[-places:]}"
    if isinstance(x, float):
        return format(x, ".12g")
    if isinstance(x, complex):
        return f"{format(x.real, '.12g')}{'+' if x.imag >= 0 else '-'}{format(abs(x.imag), '.12g')}j"
    return str(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, (Fraction, float, complex)):
        return fmt_number(obj)
    return obj


def header(command: str, config: dict, thresholds: dict) -> dict:
    return {"tool": "adicscope", "version": __version__, "command": command,
            "config": jsonable(config), "thresholds": jsonable(thresholds)}


def render_csv(head: dict, columns, rows, extra: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# adicscope {head['version']} {head['command']}\n")
    buf.write(f"# config: {json.dumps(head['config'], sort_keys=True)}\n")
    buf.write(f"# thresholds: {json.dumps(head['thresholds'], sort_keys=True)}\n")
    for key, value in (extra or {}).items():
        buf.write(f"# {key}: {json.dumps(jsonable(value), sort_keys=True, ensure_ascii=False)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_number(v) for v in row])
    return buf.getvalue()


def render_json(head: dict, body: dict) -> str:
    return json.dumps({"header": head, **jsonable(body)}, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
