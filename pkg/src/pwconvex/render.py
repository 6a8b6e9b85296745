"""Text and JSON rendering of piecewise functions and operators.

Text output lists branches in breakpoint order with a separate row for
every breakpoint, e.g. ``y < -1 -> {y + 1}`` followed by ``y = -1 -> {0}``.
JSON output follows a fixed schema; numbers are exact rationals ``p/q``
when representable and 17-significant-digit decimals otherwise, while
parametric endpoints are carried as expression strings.
"""

from __future__ import annotations

import math

from .expr import Const, Expr, format_number, to_text
from .monop import MonotoneOperator, SetValue
from .pwf import PiecewiseFunction

INF = math.inf


def _endpoint_text(v, var: str) -> str:
    if isinstance(v, float):
        return format_number(v)
    if isinstance(v, Const):
        return format_number(v.value)
    return to_text(v, var)


def _guard_text(var: str, lo, hi) -> str:
    lo_inf = isinstance(lo, float) and math.isinf(lo)
    hi_inf = isinstance(hi, float) and math.isinf(hi)
    if lo_inf and hi_inf:
        return var
    if lo_inf:
        return f"{var} < {_endpoint_text(hi, var)}"
    if hi_inf:
        return f"{var} > {_endpoint_text(lo, var)}"
    return f"{_endpoint_text(lo, var)} < {var} < {_endpoint_text(hi, var)}"


def _setvalue_text(v: SetValue, var: str) -> str:
    if v.tag == "empty":
        return "empty"
    if v.tag == "all":
        return "(-inf, inf)"
    if v.tag == "point":
        return "{" + to_text(v.lo, var) + "}"
    return f"[{_endpoint_text(v.lo, var)}, {_endpoint_text(v.hi, var)}]"


def render_set(v: SetValue, var: str = "x") -> str:
    """One set value as text, e.g. ``{0}`` or ``[-1, 1]``."""
    return _setvalue_text(v, var)


def render_function(f: PiecewiseFunction) -> str:
    var = f.varname
    rows = []
    for i, p in enumerate(f.pieces):
        lo, hi = f.interval(i)
        body = "inf" if p.infinite else to_text(p.body, var)
        rows.append((_guard_text(var, lo, hi), body))
        if i < len(f.breakpoints):
            b = f.breakpoints[i]
            v = f.values[i]
            vtext = format_number(v) if isinstance(v, float) else to_text(v, var)
            rows.append((f"{var} = {_endpoint_text(b, var)}", vtext))
    width = max(len(g) for g, _ in rows)
    return "\n".join(f"{g.ljust(width)}  ->  {b}" for g, b in rows)


def render_operator(T: MonotoneOperator) -> str:
    var = T.varname
    rows = []
    for i, p in enumerate(T.pieces):
        lo, hi = T.interval(i)
        body = "empty" if p.empty else "{" + to_text(p.body, var) + "}"
        rows.append((_guard_text(var, lo, hi), body))
        if i < len(T.breakpoints):
            b = T.breakpoints[i]
            rows.append((f"{var} = {_endpoint_text(b, var)}", _setvalue_text(T.values[i], var)))
    width = max(len(g) for g, _ in rows)
    return "\n".join(f"{g.ljust(width)}  ->  {b}" for g, b in rows)


def _numstr(v, var: str) -> str:
    """Schema number: rational, decimal, signed infinity, or expression text."""
    if isinstance(v, float):
        return format_number(v)
    if isinstance(v, Const):
        return format_number(v.value)
    return to_text(v, var)


def _interval_json(lo, hi, var: str) -> dict:
    return {"lo": _numstr(lo, var), "hi": _numstr(hi, var)}


def _setvalue_json(v: SetValue, var: str) -> dict:
    if v.tag in ("empty", "all"):
        return {"type": v.tag}
    if v.tag == "point":
        return {"type": "point", "lo": _numstr(v.lo, var)}
    return {"type": "interval", "lo": _numstr(v.lo, var), "hi": _numstr(v.hi, var)}


def setvalue_to_json(v: SetValue, var: str = "x") -> dict:
    return _setvalue_json(v, var)


def function_to_json(f: PiecewiseFunction) -> dict:
    var = f.varname
    pieces = []
    for i, p in enumerate(f.pieces):
        lo, hi = f.interval(i)
        pieces.append({
            "interval": _interval_json(lo, hi, var),
            "kind": p.kind,
            "expr": "inf" if p.infinite else to_text(p.body, var),
        })
    at_bps = []
    for b, v in zip(f.breakpoints, f.values):
        at_bps.append({
            "x": _numstr(b, var),
            "value": {"type": "point", "lo": _numstr(v, var)},
        })
    return {
        "kind": "pwf",
        "var": var,
        "breakpoints": [_numstr(b, var) for b in f.breakpoints],
        "pieces": pieces,
        "at_breakpoints": at_bps,
    }


def operator_to_json(T: MonotoneOperator) -> dict:
    var = T.varname
    pieces = []
    for i, p in enumerate(T.pieces):
        lo, hi = T.interval(i)
        pieces.append({
            "interval": _interval_json(lo, hi, var),
            "kind": p.kind,
            "expr": "empty" if p.empty else to_text(p.body, var),
        })
    at_bps = []
    for b, v in zip(T.breakpoints, T.values):
        at_bps.append({"x": _numstr(b, var), "value": _setvalue_json(v, var)})
    return {
        "kind": "op",
        "var": var,
        "breakpoints": [_numstr(b, var) for b in T.breakpoints],
        "pieces": pieces,
        "at_breakpoints": at_bps,
    }
