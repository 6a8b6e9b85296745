"""Set-valued monotone operators on the real line.

An operator mirrors the piecewise-function layout: strictly increasing
breakpoints, one piece per open interval (a single-valued body that is
constant or strictly increasing, or the empty map), and a closed
SetValue at every breakpoint.  Construction classifies the pieces,
merges redundant breakpoints, and checks graph monotonicity by chaining
slice bounds from left to right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .assumptions import AssumptionEnv, EMPTY_ENV, Ordering
from .errors import (
    EmptyOperator,
    GapInGuards,
    InputError,
    InternalInconsistency,
    NegativeScalar,
    NotMonotone,
    OverlappingGuards,
    ParseError,
    UndecidableComparison,
    UnsupportedOperation,
)
from .expr import (
    Add,
    Expr,
    Mul,
    TokenStream,
    X,
    ZERO,
    as_expr,
    contains_var,
    differentiate,
    is_numeric_node,
    substitute,
    to_text,
    _parse_expr,
)
from .inverse import check_strictly_monotone, invert_monotone
from .limits import limit_at, one_sided_limit
from .pwf import (
    PiecewiseFunction,
    _Region,
    _parse_guard,
    _rebind_var,
    _sort_key_factory,
    _value_equal,
    _value_less,
    detect_varname,
)
from .simplify import simplify, structurally_equal

INF = math.inf

KIND_CONSTANT = "constant"
KIND_MONOTONE = "strict-monotone"
KIND_EMPTY = "empty"


# ---------------------------------------------------------------------------
# Set values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetValue:
    """Closed value set at one point: empty, a point, a closed interval
    with possibly infinite endpoints, or the whole line."""

    tag: str  # "empty" | "point" | "interval" | "all"
    lo: Expr | float | None = None  # float only for -inf
    hi: Expr | float | None = None  # float only for +inf

    def bounds(self) -> tuple[Expr | float, Expr | float] | None:
        """(inf, sup) in the extended reals; None for the empty set."""
        if self.tag == "empty":
            return None
        if self.tag == "all":
            return -INF, INF
        return self.lo, self.hi

    def __str__(self) -> str:
        if self.tag == "empty":
            return "empty"
        if self.tag == "all":
            return "all"
        if self.tag == "point":
            return "{" + to_text(self.lo) + "}"
        lo = "-inf" if isinstance(self.lo, float) else to_text(self.lo)
        hi = "inf" if isinstance(self.hi, float) else to_text(self.hi)
        return f"[{lo}, {hi}]"


EMPTY_SET = SetValue("empty")
ALL_REALS = SetValue("all")


def point(v) -> SetValue:
    e = simplify(as_expr(v))
    return SetValue("point", e, e)


def interval(lo, hi, env: AssumptionEnv = EMPTY_ENV) -> SetValue:
    """Closed interval with the degenerate collapses: upper bound -inf
    or lower bound +inf is the empty set (the usual min/max-of-nothing
    conventions), two infinite bounds are the whole line, and equal
    bounds are a point."""
    lo_inf = isinstance(lo, float) and math.isinf(lo)
    hi_inf = isinstance(hi, float) and math.isinf(hi)
    if (lo_inf and lo > 0) or (hi_inf and hi < 0):
        return EMPTY_SET
    if lo_inf and hi_inf:
        return ALL_REALS
    lo_e = -INF if lo_inf else simplify(as_expr(lo))
    hi_e = INF if hi_inf else simplify(as_expr(hi))
    if not lo_inf and not hi_inf:
        order = env.compare(lo_e, hi_e)
        if order == Ordering.GREATER:
            return EMPTY_SET
        if order == Ordering.EQUAL:
            return SetValue("point", lo_e, lo_e)
        if order == Ordering.UNDECIDABLE:
            if _value_less(env, hi_e, lo_e):
                return EMPTY_SET
            if _value_equal(env, lo_e, hi_e):
                return SetValue("point", lo_e, lo_e)
    return SetValue("interval", lo_e, hi_e)


def _ext_add(a, b):
    if isinstance(a, float) and math.isinf(a):
        return a
    if isinstance(b, float) and math.isinf(b):
        return b
    return simplify(Add(as_expr(a), as_expr(b)))


def _ext_scale(lam: Expr, a):
    if isinstance(a, float) and math.isinf(a):
        return a
    return simplify(Mul(lam, as_expr(a)))


def _ext_cmp(env: AssumptionEnv, a, b) -> Ordering:
    """Compare endpoints that may be expressions or +-inf floats."""
    a_inf = isinstance(a, float) and math.isinf(a)
    b_inf = isinstance(b, float) and math.isinf(b)
    if a_inf or b_inf:
        if a_inf and b_inf and (a > 0) == (b > 0):
            return Ordering.EQUAL
        if a_inf:
            return Ordering.LESS if a < 0 else Ordering.GREATER
        return Ordering.GREATER if b < 0 else Ordering.LESS
    return env.compare(as_expr(a), as_expr(b))


def _ext_less(env: AssumptionEnv, a, b) -> bool:
    order = _ext_cmp(env, a, b)
    if order != Ordering.UNDECIDABLE:
        return order == Ordering.LESS
    return _value_less(env, a, b)


def _ext_min(env: AssumptionEnv, a, b):
    order = _ext_cmp(env, a, b)
    if order == Ordering.UNDECIDABLE:
        return b if _value_less(env, b, a) else a
    return b if order == Ordering.GREATER else a


def _ext_max(env: AssumptionEnv, a, b):
    order = _ext_cmp(env, a, b)
    if order == Ordering.UNDECIDABLE:
        return b if _value_less(env, a, b) else a
    return b if order == Ordering.LESS else a


def sv_add(a: SetValue, b: SetValue, env: AssumptionEnv) -> SetValue:
    """Minkowski sum; empty absorbs, the whole line absorbs nonempty."""
    if a.tag == "empty" or b.tag == "empty":
        return EMPTY_SET
    if a.tag == "all" or b.tag == "all":
        return ALL_REALS
    (alo, ahi), (blo, bhi) = a.bounds(), b.bounds()
    return interval(_ext_add(alo, blo), _ext_add(ahi, bhi), env)


def sv_scale(v: SetValue, lam: Expr, env: AssumptionEnv) -> SetValue:
    """lam * v for lam > 0 under env."""
    if v.tag in ("empty", "all"):
        return v
    lo, hi = v.bounds()
    return interval(_ext_scale(lam, lo), _ext_scale(lam, hi), env)


def sv_hull(values: list[SetValue], env: AssumptionEnv) -> SetValue:
    """Smallest closed interval containing every given value."""
    vals = [v for v in values if v.tag != "empty"]
    if not vals:
        return EMPTY_SET
    if any(v.tag == "all" for v in vals):
        return ALL_REALS
    lo, hi = vals[0].bounds()
    for v in vals[1:]:
        l2, h2 = v.bounds()
        lo = _ext_min(env, lo, l2)
        hi = _ext_max(env, hi, h2)
    return interval(lo, hi, env)


def sv_contains(v: SetValue, y, env: AssumptionEnv) -> bool:
    if v.tag == "empty":
        return False
    if v.tag == "all":
        return True
    lo, hi = v.bounds()
    ye = simplify(as_expr(y))
    below = isinstance(lo, float) or env.require_comparable(lo, ye) in (Ordering.LESS, Ordering.EQUAL)
    above = isinstance(hi, float) or env.require_comparable(ye, hi) in (Ordering.LESS, Ordering.EQUAL)
    return below and above


def sv_substitute(v: SetValue, params: dict | None) -> SetValue:
    if not params or v.tag in ("empty", "all"):
        return v
    lo = v.lo if isinstance(v.lo, float) else simplify(substitute(v.lo, params=params))
    hi = v.hi if isinstance(v.hi, float) else simplify(substitute(v.hi, params=params))
    return SetValue(v.tag, lo, hi)


# ---------------------------------------------------------------------------
# The operator type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpPiece:
    """One open-interval piece: a single-valued body or the empty map."""

    body: Expr | None
    kind: str

    @property
    def empty(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class MonotoneOperator:
    varname: str
    breakpoints: tuple[Expr, ...]
    pieces: tuple[OpPiece, ...]  # len(breakpoints) + 1
    values: tuple[SetValue, ...]  # one per breakpoint
    env: AssumptionEnv
    numeric: bool = False

    def interval(self, i: int) -> tuple[Expr | float, Expr | float]:
        """Open interval spanned by piece i."""
        lo = self.breakpoints[i - 1] if i > 0 else -INF
        hi = self.breakpoints[i] if i < len(self.breakpoints) else INF
        return lo, hi

    def __str__(self) -> str:
        from .render import render_operator

        return render_operator(self)


def classify_op_piece(body: Expr, env: AssumptionEnv, lo, hi) -> str:
    if not contains_var(body):
        return KIND_CONSTANT
    if check_strictly_monotone(body, env, lo, hi) < 0:
        raise NotMonotone(f"piece {to_text(body)} is decreasing")
    return KIND_MONOTONE


def build_operator(
    varname: str,
    breakpoints: list[Expr],
    pieces: list,
    values: list[SetValue],
    env: AssumptionEnv = EMPTY_ENV,
) -> MonotoneOperator:
    """Normalize, classify, and monotonicity-check; the only
    constructor used by parsing and by the operator calculus."""
    bps = [simplify(b) for b in breakpoints]
    for b in bps:
        if contains_var(b):
            raise InputError(f"breakpoint {to_text(b)} contains the variable")
    for i in range(len(bps) - 1):
        if env.require_comparable(bps[i], bps[i + 1]) != Ordering.LESS:
            raise InputError(f"breakpoints out of order: {to_text(bps[i])} vs {to_text(bps[i + 1])}")
    normd: list[OpPiece] = []
    for i, p in enumerate(pieces):
        body = p.body if isinstance(p, OpPiece) else p
        if body is None:
            normd.append(OpPiece(None, KIND_EMPTY))
            continue
        body = simplify(as_expr(body))
        lo = bps[i - 1] if i > 0 else -INF
        hi = bps[i] if i < len(bps) else INF
        normd.append(OpPiece(body, classify_op_piece(body, env, lo, hi)))
    vals = list(values)
    if len(normd) != len(bps) + 1 or len(vals) != len(bps):
        raise InputError("piece/breakpoint/value counts are inconsistent")
    bps, normd, vals = _normalize_op(bps, normd, vals, env)
    numeric = any(not p.empty and is_numeric_node(p.body) for p in normd)
    T = MonotoneOperator(varname, tuple(bps), tuple(normd), tuple(vals), env, numeric)
    validate_operator(T)
    return T


def _normalize_op(bps, pieces, values, env):
    """Drop breakpoints that separate identical pieces seamlessly."""
    i = 0
    while i < len(bps):
        left, right = pieces[i], pieces[i + 1]
        v = values[i]
        removable = False
        if left.empty and right.empty:
            removable = v.tag == "empty"
        elif not left.empty and not right.empty and structurally_equal(left.body, right.body):
            if v.tag == "point":
                at = simplify(substitute(left.body, var=bps[i]))
                removable = _value_equal(env, v.lo, at)
        if removable:
            del bps[i]
            del values[i]
            pieces[i : i + 2] = [left if not left.empty else right]
        else:
            i += 1
    return bps, pieces, values


def _piece_bounds(p: OpPiece, lo, hi, env: AssumptionEnv):
    """(inf, sup) of the single-valued body over the open interval.
    None stands for a bound the limit machinery cannot produce (opaque
    numeric bodies); callers must treat it as unknown, not infinite."""
    if not contains_var(p.body):
        return p.body, p.body
    try:
        a = limit_at(p.body, lo, "right", env)
    except UnsupportedOperation:
        a = None
    try:
        b = limit_at(p.body, hi, "left", env)
    except UnsupportedOperation:
        b = None
    return a, b


def _fmt_end(v) -> str:
    if isinstance(v, float):
        return "-inf" if v < 0 else "inf"
    return to_text(v)


def validate_operator(T: MonotoneOperator) -> None:
    """Graph monotonicity: slice bounds (pieces and breakpoint values
    interleaved) must be nondecreasing from left to right."""
    env = T.env
    prev_sup = None
    prev_where = None

    def step(lo_v, hi_v, where: str):
        nonlocal prev_sup, prev_where
        if prev_sup is not None and lo_v is not None and _ext_less(env, lo_v, prev_sup):
            raise NotMonotone(f"operator values decrease from {prev_where} to {where}")
        if hi_v is not None:
            # an unknown sup keeps the last known one: a weaker but
            # still sound necessary condition for the later slices
            prev_sup, prev_where = hi_v, where

    for i, p in enumerate(T.pieces):
        if i > 0:
            v = T.values[i - 1]
            if v.tag != "empty":
                vb = v.bounds()
                step(vb[0], vb[1], f"the value at {to_text(T.breakpoints[i - 1])}")
        if p.empty:
            continue
        lo, hi = T.interval(i)
        a, b = _piece_bounds(p, lo, hi, env)
        step(a, b, f"the piece on ({_fmt_end(lo)}, {_fmt_end(hi)})")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _locate_op(T: MonotoneOperator, x: Expr, params=None) -> tuple[str, int]:
    env = T.env
    for i, b in enumerate(T.breakpoints):
        bb = simplify(substitute(b, params=params)) if params else b
        order = env.compare(x, bb)
        if order == Ordering.UNDECIDABLE:
            raise UndecidableComparison(to_text(x), to_text(bb))
        if order == Ordering.EQUAL:
            return "breakpoint", i
        if order == Ordering.LESS:
            return "piece", i
    return "piece", len(T.breakpoints)


def eval_op(T: MonotoneOperator, x, params: dict | None = None) -> SetValue:
    """Value set at x."""
    params_e = {k: as_expr(v) for k, v in params.items()} if params else None
    xe = simplify(substitute(as_expr(x), params=params_e)) if params_e else simplify(as_expr(x))
    where, i = _locate_op(T, xe, params_e)
    if where == "breakpoint":
        return sv_substitute(T.values[i], params_e)
    p = T.pieces[i]
    if p.empty:
        return EMPTY_SET
    if is_numeric_node(p.body):
        from .expr import evaluate

        body = substitute(p.body, params=params_e) if params_e else p.body
        return point(as_expr(evaluate(body, x=float(evaluate(xe)))))
    return point(simplify(substitute(p.body, var=xe, params=params_e)))


def op_domain_hull(T: MonotoneOperator) -> tuple[Expr | float, Expr | float]:
    """Convex hull (lo, hi) of the set where T is nonempty."""
    n = len(T.breakpoints)
    nonempty_piece = [not p.empty for p in T.pieces]
    nonempty_value = [v.tag != "empty" for v in T.values]
    if not any(nonempty_piece) and not any(nonempty_value):
        raise EmptyOperator("the operator has empty graph")
    if nonempty_piece[0]:
        lo: Expr | float = -INF
    else:
        lo = next(T.breakpoints[i] for i in range(n) if nonempty_value[i] or nonempty_piece[i + 1])
    if nonempty_piece[-1]:
        hi: Expr | float = INF
    else:
        hi = next(T.breakpoints[i] for i in range(n - 1, -1, -1) if nonempty_value[i] or nonempty_piece[i])
    return lo, hi


# ---------------------------------------------------------------------------
# The operator calculus
# ---------------------------------------------------------------------------


def subdifferential(f: PiecewiseFunction) -> MonotoneOperator:
    """The slope multifunction of f: differentiated bodies on pieces,
    the closed interval between one-sided derivative limits at
    breakpoints, empty outside the domain, half-lines or the whole
    line at domain boundary points."""
    env = f.env
    pieces = [None if p.infinite else simplify(differentiate(p.body)) for p in f.pieces]
    values: list[SetValue] = []
    for i, b in enumerate(f.breakpoints):
        v = f.values[i]
        if isinstance(v, float) and math.isinf(v):
            values.append(EMPTY_SET)
            continue
        left, right = pieces[i], pieces[i + 1]
        lo = -INF if left is None else limit_at(left, b, "left", env)
        hi = INF if right is None else limit_at(right, b, "right", env)
        values.append(interval(lo, hi, env))
    return build_operator(f.varname, list(f.breakpoints), pieces, values, env)


def identity_operator(varname: str = "x", env: AssumptionEnv = EMPTY_ENV) -> MonotoneOperator:
    return build_operator(varname, [], [X], [], env)


def _as_scalar(lam) -> Expr:
    if isinstance(lam, str):
        from .expr import parse_expr

        return simplify(parse_expr(lam))
    return simplify(as_expr(lam))


def scale(T: MonotoneOperator, lam) -> MonotoneOperator:
    """Graph scaling (x, u) -> (x, lam*u) for lam >= 0; lam = 0 sends
    every point of the domain to {0}."""
    env = T.env
    lam_e = _as_scalar(lam)
    if contains_var(lam_e):
        raise InputError("scale factor must not contain the variable")
    sgn = env.sign_of(lam_e)
    if sgn is None:
        raise UndecidableComparison(to_text(lam_e), "0")
    if sgn < 0:
        raise NegativeScalar(f"scale factor {to_text(lam_e)} is negative")
    if sgn == 0:
        pieces = [None if p.empty else ZERO for p in T.pieces]
        values = [EMPTY_SET if v.tag == "empty" else point(0) for v in T.values]
        return build_operator(T.varname, list(T.breakpoints), pieces, values, env)
    pieces = [None if p.empty else Mul(lam_e, p.body) for p in T.pieces]
    values = [sv_scale(v, lam_e, env) for v in T.values]
    return build_operator(T.varname, list(T.breakpoints), pieces, values, env)


def _piece_index(T: MonotoneOperator, lo, env: AssumptionEnv) -> int:
    """Index of the piece of T spanning the merged-grid cell whose
    lower bound is lo (a breakpoint of the merged grid, or -inf)."""
    if isinstance(lo, float):
        return 0
    n = 0
    for b in T.breakpoints:
        if env.require_comparable(b, lo) in (Ordering.LESS, Ordering.EQUAL):
            n += 1
        else:
            break
    return n


def value_at(T: MonotoneOperator, b: Expr, env: AssumptionEnv) -> SetValue:
    """Value of T at one point, under a possibly merged env."""
    i = 0
    for j, bb in enumerate(T.breakpoints):
        order = env.require_comparable(bb, b)
        if order == Ordering.EQUAL:
            return T.values[j]
        if order == Ordering.LESS:
            i = j + 1
        else:
            break
    p = T.pieces[i]
    if p.empty:
        return EMPTY_SET
    return point(simplify(substitute(p.body, var=b)))


def add(T1: MonotoneOperator, T2: MonotoneOperator) -> MonotoneOperator:
    """Pointwise Minkowski sum on the merged breakpoint grid."""
    if T1.varname != T2.varname:
        raise InputError(f"cannot add operators in {T1.varname} and {T2.varname}")
    env = T1.env.merge(T2.env)
    bps: list[Expr] = []
    for b in list(T1.breakpoints) + list(T2.breakpoints):
        if not any(env.require_comparable(b, c) == Ordering.EQUAL for c in bps):
            bps.append(b)
    bps.sort(key=_sort_key_factory(env))
    pieces: list[Expr | None] = []
    for k in range(len(bps) + 1):
        lo = bps[k - 1] if k > 0 else -INF
        p1 = T1.pieces[_piece_index(T1, lo, env)]
        p2 = T2.pieces[_piece_index(T2, lo, env)]
        pieces.append(None if p1.empty or p2.empty else Add(p1.body, p2.body))
    values = [sv_add(value_at(T1, b, env), value_at(T2, b, env), env) for b in bps]
    return build_operator(T1.varname, bps, pieces, values, env)


def _toggle(varname: str) -> str:
    return "y" if varname == "x" else "x"


def _as_endpoint(v):
    """Normalize a limit result to an Expr or a +-inf float."""
    if isinstance(v, float):
        return v if math.isinf(v) else as_expr(v)
    return v


def invert(T: MonotoneOperator) -> MonotoneOperator:
    """Graph flip.  Constant pieces become breakpoints whose value is
    the closed hull of the piece interval, interval values become
    constant pieces, and strictly monotone bodies are inverted on their
    image interval; colliding breakpoints merge by hull."""
    env = T.env
    candidates: list[Expr] = []

    def add_candidate(e: Expr) -> None:
        for c in candidates:
            if env.require_comparable(e, c) == Ordering.EQUAL:
                return
        candidates.append(e)

    fragments: list[tuple] = []  # (image lo, image hi, inverse body)
    point_contribs: list[tuple[Expr, Expr]] = []  # (image point, x point)
    hull_contribs: list[tuple[Expr, object, object]] = []  # (image point, x lo, x hi)

    for i, p in enumerate(T.pieces):
        if p.empty:
            continue
        lo, hi = T.interval(i)
        if p.kind == KIND_CONSTANT:
            add_candidate(p.body)
            hull_contribs.append((p.body, lo, hi))
            continue
        a = _as_endpoint(limit_at(p.body, lo, "right", env))
        b = _as_endpoint(limit_at(p.body, hi, "left", env))
        if _ext_cmp(env, a, b) != Ordering.LESS:
            raise InternalInconsistency(f"piece {to_text(p.body)} has a degenerate image")
        if isinstance(a, Expr):
            add_candidate(a)
        if isinstance(b, Expr):
            add_candidate(b)
        fragments.append((a, b, invert_monotone(p.body, env, lo, hi, increasing=True)))
    for j, v in enumerate(T.values):
        b = T.breakpoints[j]
        if v.tag == "empty":
            continue
        if v.tag == "all":
            fragments.append((-INF, INF, b))
            continue
        if v.tag == "point":
            add_candidate(v.lo)
            point_contribs.append((v.lo, b))
            continue
        if isinstance(v.lo, Expr):
            add_candidate(v.lo)
            point_contribs.append((v.lo, b))
        if isinstance(v.hi, Expr):
            add_candidate(v.hi)
            point_contribs.append((v.hi, b))
        fragments.append((v.lo, v.hi, b))

    candidates.sort(key=_sort_key_factory(env))
    pieces: list[Expr | None] = []
    for k in range(len(candidates) + 1):
        c_lo = candidates[k - 1] if k > 0 else -INF
        c_hi = candidates[k] if k < len(candidates) else INF
        cover = [
            body
            for a, b2, body in fragments
            if _ext_cmp(env, a, c_lo) in (Ordering.LESS, Ordering.EQUAL)
            and _ext_cmp(env, c_hi, b2) in (Ordering.LESS, Ordering.EQUAL)
        ]
        if len(cover) > 1:
            raise InternalInconsistency("inverse pieces overlap; the input graph was not monotone")
        pieces.append(cover[0] if cover else None)
    values = []
    for c in candidates:
        parts = [point(xp) for y, xp in point_contribs if env.require_comparable(y, c) == Ordering.EQUAL]
        parts += [
            interval(lo2, hi2, env)
            for y, lo2, hi2 in hull_contribs
            if env.require_comparable(y, c) == Ordering.EQUAL
        ]
        values.append(sv_hull(parts, env))
    return build_operator(_toggle(T.varname), candidates, pieces, values, env)


def resolvent(T: MonotoneOperator, lam) -> MonotoneOperator:
    """(identity + lam*T)^(-1) for lam > 0; single-valued on its
    domain whenever the input is monotone (checked)."""
    env = T.env
    lam_e = _as_scalar(lam)
    sgn = env.sign_of(lam_e)
    if sgn is None:
        raise UndecidableComparison(to_text(lam_e), "0")
    if sgn <= 0:
        raise NegativeScalar(f"resolvent step must be positive, got {to_text(lam_e)}")
    R = invert(add(identity_operator(T.varname, env), scale(T, lam_e)))
    for j, v in enumerate(R.values):
        if v.tag in ("interval", "all"):
            raise InternalInconsistency(f"resolvent is multivalued at {to_text(R.breakpoints[j])}")
    return R


def prox(f: PiecewiseFunction, lam) -> MonotoneOperator:
    """Proximal map as the resolvent of the subdifferential."""
    return resolvent(subdifferential(f), lam)


def maximal_extension(T: MonotoneOperator) -> MonotoneOperator:
    """Largest monotone operator containing T's graph: integrate a
    selection of T and take the subdifferential of the result."""
    if all(p.empty for p in T.pieces) and all(v.tag == "empty" for v in T.values):
        raise EmptyOperator("cannot extend an operator with empty graph")
    from .conv import integ

    return subdifferential(integ(T))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_endpoint(ts: TokenStream, side: str, varname: str):
    t = ts.peek()
    if t.kind == "IDENT" and t.text == "inf":
        if side != "hi":
            raise ParseError("the lower endpoint cannot be +inf", t.offset)
        ts.next()
        return INF
    if t.kind == "OP" and t.text == "-" and ts.peek(1).kind == "IDENT" and ts.peek(1).text == "inf":
        if side != "lo":
            raise ParseError("the upper endpoint cannot be -inf", t.offset)
        ts.next()
        ts.next()
        return -INF
    return _rebind_var(_parse_expr(ts), varname)


def _parse_setval(ts: TokenStream, varname: str) -> tuple:
    t = ts.peek()
    if t.kind == "IDENT" and t.text in ("all", "empty"):
        ts.next()
        return (t.text,)
    if ts.at_op("{"):
        ts.next()
        items = [_rebind_var(_parse_expr(ts), varname)]
        while ts.at_op(","):
            ts.next()
            items.append(_rebind_var(_parse_expr(ts), varname))
        ts.expect_op("}")
        return ("body", items[0]) if len(items) == 1 else ("set", items)
    if ts.at_op("["):
        ts.next()
        lo = _parse_endpoint(ts, "lo", varname)
        ts.expect_op(",")
        hi = _parse_endpoint(ts, "hi", varname)
        ts.expect_op("]")
        return ("interval", lo, hi)
    raise ts.error(("'{'", "'['", "'all'", "'empty'"))


def parse_operator(text: str, env: AssumptionEnv = EMPTY_ENV) -> MonotoneOperator:
    """Parse the operator DSL sd{ guard -> value ; ... }.  A bare
    expression, or a single {body}, means one piece covering the whole
    line."""
    varname = detect_varname(text)
    ts = TokenStream(text)
    t = ts.peek()
    branches: list[tuple[_Region, tuple]] = []
    if t.kind == "IDENT" and t.text == "sd":
        ts.next()
        ts.expect_op("{")
        while True:
            region = _parse_guard(ts, env, varname)
            ts.expect_op("->")
            branches.append((region, _parse_setval(ts, varname)))
            if ts.at_op(";"):
                ts.next()
                if ts.at_op("}"):
                    break
                continue
            break
        ts.expect_op("}")
    elif ts.at_op("{"):
        branches.append((_Region(-INF, INF, False, False), _parse_setval(ts, varname)))
    else:
        body = _rebind_var(_parse_expr(ts), varname)
        branches.append((_Region(-INF, INF, False, False), ("body", body)))
    if ts.peek().kind != "END":
        raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().offset)
    return _assemble_op(branches, env, varname)


def _assemble_op(branches, env: AssumptionEnv, varname: str) -> MonotoneOperator:
    candidates: list[Expr] = []

    def add_candidate(e: Expr) -> None:
        for c in candidates:
            if env.require_comparable(e, c) == Ordering.EQUAL:
                return
        candidates.append(e)

    for region, _ in branches:
        if not isinstance(region.lo, float):
            add_candidate(region.lo)
        if not isinstance(region.hi, float):
            add_candidate(region.hi)
    candidates.sort(key=_sort_key_factory(env))
    bps = candidates

    def index_of(e: Expr) -> int:
        for i, c in enumerate(bps):
            if env.require_comparable(e, c) == Ordering.EQUAL:
                return i
        raise InputError("internal: bound not among breakpoints")

    n_cells = len(bps) + 1
    cell_cover: list[list[tuple]] = [[] for _ in range(n_cells)]
    bp_cover: list[list[tuple]] = [[] for _ in bps]
    for region, sv in branches:
        if region.is_point:
            bp_cover[index_of(region.lo)].append(sv)
            continue
        lo_pos = -1 if isinstance(region.lo, float) else index_of(region.lo)
        hi_pos = len(bps) if isinstance(region.hi, float) else index_of(region.hi)
        for cell in range(lo_pos + 1, hi_pos + 1):
            cell_cover[cell].append(sv)
        for j in range(len(bps)):
            if lo_pos < j < hi_pos or (j == lo_pos and region.lo_closed) or (j == hi_pos and region.hi_closed):
                bp_cover[j].append(sv)

    pieces: list[Expr | None] = []
    for cell in range(n_cells):
        cov = cell_cover[cell]
        if len(cov) > 1:
            raise OverlappingGuards(f"interval piece {cell} is covered by {len(cov)} guards")
        if not cov:
            lo_s = "-inf" if cell == 0 else to_text(bps[cell - 1])
            hi_s = "inf" if cell == n_cells - 1 else to_text(bps[cell])
            raise GapInGuards(f"no guard covers ({lo_s}, {hi_s})")
        sv = cov[0]
        if sv[0] == "empty":
            pieces.append(None)
        elif sv[0] == "body":
            pieces.append(sv[1])
        else:
            raise InputError("interval, set, and 'all' values may only appear at single points")

    values: list[SetValue] = []
    for j, b in enumerate(bps):
        cov = bp_cover[j]
        if len(cov) > 1:
            raise OverlappingGuards(f"breakpoint {to_text(b)} is covered by {len(cov)} guards")
        if cov:
            values.append(_setval_at(cov[0], b, env))
        else:
            values.append(_default_op_value(pieces, bps, j, env))
    return build_operator(varname, bps, pieces, values, env)


def _setval_at(sv: tuple, b: Expr, env: AssumptionEnv) -> SetValue:
    """Materialize a parsed value at the point b; the variable, when it
    appears inside the value, stands for that point."""
    if sv[0] == "empty":
        return EMPTY_SET
    if sv[0] == "all":
        return ALL_REALS
    if sv[0] == "body":
        return point(simplify(substitute(sv[1], var=b)))
    if sv[0] == "set":
        pts = [simplify(substitute(e, var=b)) for e in sv[1]]
        lo = hi = pts[0]
        for e in pts[1:]:
            lo = _ext_min(env, lo, e)
            hi = _ext_max(env, hi, e)
        return interval(lo, hi, env)
    _, lo, hi = sv
    lo = lo if isinstance(lo, float) else simplify(substitute(lo, var=b))
    hi = hi if isinstance(hi, float) else simplify(substitute(hi, var=b))
    return interval(lo, hi, env)


def _default_op_value(pieces, bps, j, env: AssumptionEnv) -> SetValue:
    """Closure fill at an omitted breakpoint: the interval between the
    finite one-sided limits of the adjacent bodies."""
    b = bps[j]
    left, right = pieces[j], pieces[j + 1]
    L = one_sided_limit(left, b, "left", env) if left is not None else None
    R = one_sided_limit(right, b, "right", env) if right is not None else None
    if L is not None and isinstance(L, float) and math.isinf(L):
        L = None
    if R is not None and isinstance(R, float) and math.isinf(R):
        R = None
    if L is None and R is None:
        return EMPTY_SET
    if L is None:
        return point(R)
    if R is None:
        return point(L)
    return interval(L, R, env)
