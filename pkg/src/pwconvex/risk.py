"""Risk functionals of a scalar random variable.

A distribution enters either as a cumulative distribution function
(piecewise DSL, jumps allowed where a guard covers the point) or as a
quantile expression on (0, 1).  Internally both become the same thing:
the monotone operator whose graph is the CDF with vertical segments
filled in at jumps.  From there the toolkit takes over: the
superexpectation E(x) = E[max(x, X)] is the antiderivative of that
operator with its constant pinned by E(x) - x -> 0 at +inf, the
superdistribution is dE, quantiles invert the CDF with min selection,
and the superquantile (CVaR) is the secant slope -E*(p)/(1-p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .assumptions import AssumptionEnv, EMPTY_ENV
from .conv import _value_expr_at, conjugate, integ
from .errors import (
    InputError,
    InternalInconsistency,
    NoFirstMoment,
    POutOfRange,
    UnsupportedOperation,
    UnsupportedTail,
)
from .expr import (
    Div,
    Expr,
    Neg,
    ONE,
    Sub,
    X,
    ZERO,
    as_expr,
    contains_var,
    evaluate,
    substitute,
    to_text,
)
from .inverse import check_strictly_monotone, solve_monotone
from .limits import limit_at, limit_at_infinity, one_sided_limit
from .monop import (
    MonotoneOperator,
    build_operator,
    interval,
    invert,
    maximal_extension,
    subdifferential,
)
from .pwf import (
    PiecewiseFunction,
    _rebind_var,
    _value_equal,
    _value_less,
    detect_varname,
    parse_piecewise_map,
)
from .simplify import simplify

INF = math.inf


# ---------------------------------------------------------------------------
# Distribution specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionSpec:
    """A distribution, normalized to its jump-filled CDF operator.

    quantile_expr is kept when the input was a quantile function; the
    quantile query then uses it directly instead of inverting the CDF.
    """

    cdf_op: MonotoneOperator
    quantile_expr: Expr | None
    env: AssumptionEnv

    @staticmethod
    def from_cdf(source: str, env: AssumptionEnv = EMPTY_ENV) -> "DistributionSpec":
        varname, bps, bodies, values = parse_piecewise_map(source, env)
        return DistributionSpec(_cdf_operator(varname, bps, bodies, values, env), None, env)

    @staticmethod
    def from_quantile(source: str, env: AssumptionEnv = EMPTY_ENV) -> "DistributionSpec":
        from .expr import parse_expr

        q = _rebind_var(parse_expr(source), detect_varname(source))
        # nondecreasing on (0,1); constants are fine, decreases are not
        if contains_var(q):
            check_strictly_monotone(q, env, ZERO, ONE)
        op = _quantile_operator(simplify(q), env)
        return DistributionSpec(invert(maximal_extension(op)), simplify(q), env)


def _lim_is(env: AssumptionEnv, lim, target: Expr, tol: float = 1e-9) -> bool:
    if isinstance(lim, float):
        if math.isinf(lim):
            return False
        return abs(lim - float(evaluate(target))) <= tol
    return _value_equal(env, lim, target)


def _cdf_operator(varname, bps, bodies, values, env: AssumptionEnv) -> MonotoneOperator:
    if any(b is None for b in bodies) or any(isinstance(v, float) and math.isinf(v) for v in values):
        raise InputError("a distribution function must be finite everywhere")
    # tails: 0 at -inf, 1 at +inf
    try:
        left = limit_at_infinity(bodies[0], -1, env)
        right = limit_at_infinity(bodies[-1], 1, env)
    except UnsupportedOperation as exc:
        raise InputError(f"cannot settle the tails of the distribution function: {exc}") from exc
    if not _lim_is(env, left, ZERO):
        raise InputError("the distribution function must tend to 0 at -inf")
    if not _lim_is(env, right, ONE):
        raise InputError("the distribution function must tend to 1 at +inf")
    op_values = []
    for i, b in enumerate(bps):
        L = one_sided_limit(bodies[i], b, "left", env)
        R = one_sided_limit(bodies[i + 1], b, "right", env)
        if isinstance(L, float) or isinstance(R, float):
            raise InputError(f"the distribution function is unbounded beside {to_text(b)}")
        if not _value_equal(env, values[i], R):
            raise InputError(
                f"a distribution function is right-continuous: the value at {to_text(b)}"
                " must equal the limit from the right"
            )
        if _value_less(env, R, L):
            raise InputError(f"the distribution function decreases across {to_text(b)}")
        op_values.append(interval(L, R, env))
    return build_operator(varname, list(bps), list(bodies), op_values, env)


def _quantile_operator(q: Expr, env: AssumptionEnv) -> MonotoneOperator:
    """q on (0,1) as an operator, closures at the edge breakpoints."""
    lo_v = one_sided_limit(q, ZERO, "right", env) if contains_var(q) else q
    hi_v = one_sided_limit(q, ONE, "left", env) if contains_var(q) else q
    return build_operator(
        "p",
        [ZERO, ONE],
        [None, q, None],
        [interval(lo_v, lo_v, env), interval(hi_v, hi_v, env)],
        env,
    )


# ---------------------------------------------------------------------------
# Superexpectation and superdistribution
# ---------------------------------------------------------------------------


def superexpectation(d: DistributionSpec) -> PiecewiseFunction:
    """E(x) = E[max(x, X)]: antiderivative of the CDF operator, with the
    constant fixed by E(x) - x -> 0 at +inf."""
    from .conv import _shift_by

    E0 = integ(d.cdf_op)
    drift = simplify(Sub(E0.pieces[-1].body, X))
    try:
        m = limit_at_infinity(drift, 1, d.env)
    except UnsupportedOperation as exc:
        last = d.cdf_op.pieces[-1]
        if not last.empty and not contains_var(last.body) and d.cdf_op.breakpoints:
            binding = d.env.feasible_point()
            edge = float(evaluate(d.cdf_op.breakpoints[-1], params=binding))
            m = as_expr(Fraction(float(evaluate(drift, x=edge + 1.0, params=binding))))
        else:
            raise UnsupportedTail(
                f"cannot pin the superexpectation constant: {exc}"
            ) from exc
    if isinstance(m, float):
        if math.isinf(m):
            if m < 0:
                raise NoFirstMoment("the upper tail of the distribution has no finite mean")
            raise InternalInconsistency("E(x) - x grows at +inf for a distribution function")
        m = as_expr(Fraction(m))
    return _shift_by(E0, simplify(Neg(m)))


def superdistribution(d: DistributionSpec) -> MonotoneOperator:
    """The CDF with jump intervals, realized as the subdifferential of
    the superexpectation; right endpoints reproduce the CDF."""
    return subdifferential(superexpectation(d))


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------


def _check_p(p, env: AssumptionEnv) -> Expr:
    pe = simplify(as_expr(p))
    if contains_var(pe):
        raise InputError("the probability level must not contain the variable")
    if not _value_less(env, ZERO, pe) or not _value_less(env, pe, ONE):
        raise POutOfRange(f"p = {to_text(pe)} is not strictly inside (0, 1)")
    return pe


def _at_least(env: AssumptionEnv, a, p: Expr) -> bool:
    """a >= p in the extended reals; a may be an Expr or a float."""
    if isinstance(a, float):
        if math.isinf(a):
            return a > 0
        a = as_expr(Fraction(a))
    return not _value_less(env, a, p)


def quantile(d: DistributionSpec, p) -> Expr:
    """min{x : F(x) >= p}; symbolic inverse on strictly increasing
    pieces, left edge on flats."""
    pe = _check_p(p, d.env)
    if d.quantile_expr is not None:
        return simplify(substitute(d.quantile_expr, var=pe))
    T = d.cdf_op
    env = d.env
    for i, piece in enumerate(T.pieces):
        lo, hi = T.interval(i)
        if not piece.empty:
            body = piece.body
            if not contains_var(body):
                if _at_least(env, body, pe):
                    if isinstance(lo, float):
                        raise InternalInconsistency(
                            "the distribution function reaches p on an unbounded flat"
                        )
                    return lo
            else:
                sup = limit_at(body, hi, "left", env)
                if _at_least(env, sup, pe):
                    return solve_monotone(body, pe, env, lo, hi)
        if i < len(T.breakpoints):
            v = T.values[i]
            bounds = v.bounds()
            if bounds is not None and _at_least(env, bounds[1], pe):
                return T.breakpoints[i]
    raise InternalInconsistency("no point reaches the level p; the tail checks are broken")


def superquantile(d: DistributionSpec, p) -> Expr:
    """Tail average of the quantile, computed as the secant slope of
    the conjugate of the superexpectation between p and 1."""
    pe = _check_p(p, d.env)
    Estar = conjugate(superexpectation(d))
    v = _value_expr_at(Estar, pe)
    if isinstance(v, float):
        raise InternalInconsistency("the conjugate of the superexpectation is infinite inside (0,1)")
    return simplify(Div(Neg(v), Sub(ONE, pe)))


def cvar(d: DistributionSpec, p) -> Expr:
    """Conditional value-at-risk; same number as the superquantile."""
    return superquantile(d, p)


def superexpectation_conjugate(d: DistributionSpec) -> PiecewiseFunction:
    """E* in the probability variable; domain [0, 1]."""
    return replace(conjugate(superexpectation(d)), varname="p")
