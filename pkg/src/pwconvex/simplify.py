"""Algebraic canonicalization.

Expressions normalize to a sum of products: each term is an exact
coefficient times a sorted tuple of (factor, rational exponent) pairs.
Rational constants fold exactly; exp factors merge (exp(u)*exp(v) ->
exp(u+v)); like terms combine.  Powers distribute over products only
when that is sound for real arguments (integer exponents, or an odd
inner exponent), so abs-like identities such as (x^2)^(1/2) = |x| are
never silently broken.

Equality of outputs is pointwise, not canonical-form: two expressions
that print differently may still denote the same function, and tests
compare by evaluation where the algebra does not collapse them.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError
from .expr import (
    Abs,
    Add,
    Const,
    Div,
    Exp,
    Expr,
    ImplicitInverse,
    Ln,
    Mul,
    Neg,
    NumericIntegral,
    Number,
    Param,
    Pow,
    Sub,
    Var,
    X,
    ZERO,
    _pow_number,
    to_text,
)

# A term maps a canonical factor tuple to its coefficient.
Factors = tuple[tuple[Expr, Fraction], ...]
SumMap = dict[Factors, Number]

_MAX_EXPAND_POWER = 4


def _factor_key(f: Expr) -> tuple:
    order = {Var: 0, Param: 1, Exp: 2, Ln: 3, Abs: 4}.get(type(f), 5)
    return (order, to_text(f))


def _canon_factors(pairs: list[tuple[Expr, Fraction]]) -> tuple[Factors, Number]:
    """Merge duplicate factors, fold exp factors together, sort.

    Returns the canonical tuple plus a numeric multiplier picked up when
    factors collapse to constants.
    """
    merged: dict[Expr, Fraction] = {}
    for f, q in pairs:
        merged[f] = merged.get(f, Fraction(0)) + q

    mult: Number = Fraction(1)
    exp_arg: SumMap | None = None
    out: list[tuple[Expr, Fraction]] = []
    for f, q in merged.items():
        if q == 0:
            continue
        if isinstance(f, Exp):
            contrib = _scale(_snf(f.arg), q)
            exp_arg = contrib if exp_arg is None else _add_maps(exp_arg, contrib)
        else:
            out.append((f, q))
    if exp_arg is not None:
        arg = _rebuild(exp_arg)
        if isinstance(arg, Const) and arg.value == 0:
            pass  # exp(0) = 1
        else:
            out.append((Exp(arg), Fraction(1)))
    out.sort(key=lambda p: _factor_key(p[0]))
    return tuple(out), mult


def _add_maps(a: SumMap, b: SumMap) -> SumMap:
    out = dict(a)
    for k, v in b.items():
        nv = out.get(k, Fraction(0)) + v
        if nv == 0:
            out.pop(k, None)
        else:
            out[k] = nv
    return out


def _scale(a: SumMap, c: Number) -> SumMap:
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


def _mul_maps(a: SumMap, b: SumMap) -> SumMap:
    out: SumMap = {}
    for fa, ca in a.items():
        for fb, cb in b.items():
            factors, mult = _canon_factors(list(fa) + list(fb))
            coeff = ca * cb * mult
            if coeff == 0:
                continue
            prev = out.get(factors, Fraction(0)) + coeff
            if prev == 0:
                out.pop(factors, None)
            else:
                out[factors] = prev
    return out


def _const_map(c: Number) -> SumMap:
    return {} if c == 0 else {(): c}


def _single(f: Expr, q: Fraction = Fraction(1)) -> SumMap:
    factors, mult = _canon_factors([(f, q)])
    if not factors:
        return _const_map(mult)
    return {factors: mult}


def _is_const_map(m: SumMap) -> Number | None:
    if not m:
        return Fraction(0)
    if len(m) == 1 and () in m:
        return m[()]
    return None


def _iroot(n: int, k: int) -> int | None:
    """Exact nonnegative integer k-th root, or None."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _exact_pow_frac(c: Fraction, q: Fraction) -> Fraction | None:
    """c**q as an exact rational, or None when the root is irrational."""
    if c == 0:
        return Fraction(0) if q > 0 else None
    if c < 0:
        if q.denominator % 2 == 0:
            return None
        sub = _exact_pow_frac(-c, q)
        if sub is None:
            return None
        return -sub if q.numerator % 2 else sub
    p = c**q.numerator
    rn = _iroot(p.numerator, q.denominator)
    rd = _iroot(p.denominator, q.denominator)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd)


def _pow_map(base: SumMap, q: Fraction) -> SumMap:
    if q == 0:
        return _const_map(Fraction(1))
    if q == 1:
        return base
    c = _is_const_map(base)
    if c is not None:
        if isinstance(c, Fraction) and q.denominator != 1:
            exact = _exact_pow_frac(c, q)
            if exact is None:
                return _single(Pow(Const(c), q))
            return _const_map(exact)
        return _const_map(_pow_number(c, q))
    if len(base) == 1:
        (factors, coeff), = base.items()
        if q.denominator == 1:
            # integer exponents distribute over any product
            new = [(f, e * q) for f, e in factors]
            factors2, mult = _canon_factors(new)
            return {factors2: _pow_number(coeff, q) * mult} if factors2 else _const_map(_pow_number(coeff, q) * mult)
        # fractional exponent: distribute only when sound for real roots
        # and the coefficient has an exact rational root
        safe = all(e.denominator == 1 and e.numerator % 2 == 1 for _, e in factors)
        if safe:
            if isinstance(coeff, Fraction):
                cc = _exact_pow_frac(coeff, q)
            else:
                try:
                    cc = _pow_number(coeff, q) if coeff > 0 else None
                except DomainError:
                    cc = None
            if cc is not None:
                new = [(f, e * q) for f, e in factors]
                factors2, mult = _canon_factors(new)
                cc = cc * mult
                return {factors2: cc} if factors2 else _const_map(cc)
    if q.denominator == 1 and 1 < q <= _MAX_EXPAND_POWER:
        out = base
        for _ in range(int(q) - 1):
            out = _mul_maps(out, base)
        return out
    if q.denominator == 1 and -_MAX_EXPAND_POWER <= q < 0:
        expanded = _pow_map(base, -q)
        if len(expanded) == 1:
            (factors, coeff), = expanded.items()
            new = [(f, -e) for f, e in factors]
            factors2, mult = _canon_factors(new)
            try:
                inv = Fraction(1) / coeff if isinstance(coeff, Fraction) else 1.0 / coeff
            except ZeroDivisionError:
                raise DomainError("division by zero in simplification") from None
            cc = inv * mult
            return {factors2: cc} if factors2 else _const_map(cc)
        return _single(Pow(_rebuild(expanded), Fraction(-1)))
    return _single(Pow(_rebuild(base), q))


def _inv_map(m: SumMap) -> SumMap:
    return _pow_map(m, Fraction(-1))


def _leading_sign(m: SumMap) -> int:
    if not m:
        return 0
    key = sorted(m.keys(), key=lambda fs: tuple(_factor_key(f) + (str(e),) for f, e in fs))[0]
    return -1 if m[key] < 0 else 1


def _snf(e: Expr) -> SumMap:
    if isinstance(e, Const):
        return _const_map(e.value)
    if isinstance(e, Var):
        return _single(X)
    if isinstance(e, Param):
        return _single(e)
    if isinstance(e, Neg):
        return _scale(_snf(e.arg), Fraction(-1))
    if isinstance(e, Add):
        return _add_maps(_snf(e.left), _snf(e.right))
    if isinstance(e, Sub):
        return _add_maps(_snf(e.left), _scale(_snf(e.right), Fraction(-1)))
    if isinstance(e, Mul):
        return _mul_maps(_snf(e.left), _snf(e.right))
    if isinstance(e, Div):
        den = _snf(e.right)
        if _is_const_map(den) == 0:
            raise DomainError("division by zero in simplification")
        return _mul_maps(_snf(e.left), _inv_map(den))
    if isinstance(e, Pow):
        return _pow_map(_snf(e.base), e.exponent)
    if isinstance(e, Exp):
        arg = simplify(e.arg)
        if isinstance(arg, Ln):
            return _snf(arg.arg)
        return _single(Exp(arg))
    if isinstance(e, Ln):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            if arg.value == 1:
                return {}
            if arg.value <= 0:
                raise DomainError(f"log of nonpositive constant {arg.value}")
            if isinstance(arg.value, float):
                return _const_map(math.log(arg.value))
        if isinstance(arg, Exp):
            return _snf(arg.arg)
        return _single(Ln(arg))
    if isinstance(e, Abs):
        arg_map = _snf(e.arg)
        c = _is_const_map(arg_map)
        if c is not None:
            return _const_map(abs(c))
        if _leading_sign(arg_map) < 0:
            arg_map = _scale(arg_map, Fraction(-1))
        if len(arg_map) == 1:
            (factors, coeff), = arg_map.items()
            if all(q.denominator == 1 and q.numerator % 2 == 0 for _, q in factors):
                return {factors: abs(coeff)}  # even powers are already nonnegative
            # |c * f| = |c| * |f|
            inner = _rebuild({factors: Fraction(1)})
            return _scale(_single(Abs(inner)), abs(coeff))
        return _single(Abs(_rebuild(arg_map)))
    if isinstance(e, ImplicitInverse):
        return _single(ImplicitInverse(simplify(e.forward), e.lo, e.hi, e.increasing))
    if isinstance(e, NumericIntegral):
        return _single(NumericIntegral(simplify(e.integrand), simplify(e.base)))
    raise TypeError(type(e).__name__)


def _term_sort_key(item: tuple[Factors, Number]) -> tuple:
    factors, _ = item
    if not factors:
        return (0, ())
    return (1, tuple(_factor_key(f) + (str(q),) for f, q in factors))


def _build_product(factors: Factors, coeff: Number) -> Expr:
    """Rebuild |coeff| * prod(factors) as a positive-coefficient tree."""
    num_parts: list[Expr] = []
    den_parts: list[Expr] = []
    for f, q in factors:
        target = num_parts if q > 0 else den_parts
        qq = q if q > 0 else -q
        target.append(f if qq == 1 else Pow(f, qq))

    coeff = abs(coeff)
    if isinstance(coeff, Fraction):
        p, qden = coeff.numerator, coeff.denominator
    else:
        p, qden = coeff, 1

    if p != 1 or not num_parts:
        num_parts.insert(0, Const(Fraction(p) if isinstance(p, int) else p))
    num = num_parts[0]
    for part in num_parts[1:]:
        num = Mul(num, part)
    if qden != 1:
        den_parts.insert(0, Const(Fraction(qden)))
    if not den_parts:
        return num
    den = den_parts[0]
    for part in den_parts[1:]:
        den = Mul(den, part)
    return Div(num, den)


def _rebuild(m: SumMap) -> Expr:
    if not m:
        return ZERO
    items = sorted(m.items(), key=_term_sort_key)
    acc: Expr | None = None
    for factors, coeff in items:
        if not factors:
            piece = Const(coeff if coeff >= 0 else -coeff)
            negative = coeff < 0
        else:
            piece = _build_product(factors, coeff)
            negative = coeff < 0
        if acc is None:
            acc = Neg(piece) if negative and not isinstance(piece, Const) else (
                Const(-piece.value) if negative and isinstance(piece, Const) else piece
            )
        else:
            acc = Sub(acc, piece) if negative else Add(acc, piece)
    return acc if acc is not None else ZERO


def _poly_coeffs_of_map(m: SumMap) -> dict[int, Fraction] | None:
    """Degree->coefficient when the map is a polynomial in the variable
    with exact rational coefficients; None otherwise."""
    out: dict[int, Fraction] = {}
    for factors, coeff in m.items():
        if not isinstance(coeff, Fraction):
            return None
        deg = 0
        for f, q in factors:
            if isinstance(f, Var) and q.denominator == 1 and q > 0:
                deg = int(q)
            else:
                return None
        out[deg] = out.get(deg, Fraction(0)) + coeff
    return {d: c for d, c in out.items() if c != 0}


def _poly_divide_exact(num: dict[int, Fraction], den: dict[int, Fraction]) -> dict[int, Fraction] | None:
    """Quotient of an exact polynomial division; None on any remainder."""
    num = {d: c for d, c in num.items() if c != 0}
    dd = max(den)
    dc = den[dd]
    quot: dict[int, Fraction] = {}
    while num:
        nd = max(num)
        if nd < dd:
            return None
        k = nd - dd
        c = num[nd] / dc
        quot[k] = c
        for d2, c2 in den.items():
            nv = num.get(d2 + k, Fraction(0)) - c * c2
            if nv == 0:
                num.pop(d2 + k, None)
            else:
                num[d2 + k] = nv
    return quot


def _cancel_rational(m: SumMap) -> SumMap:
    """Collapse sums of the shape poly(x) * (den)^-1 * rest when the
    polynomial is exactly divisible by den.

    Needed because normalization distributes numerators over opaque
    denominator factors, which would otherwise hide cancellations like
    x*(2+x)^-1 + 2*(2+x)^-1 = 1.
    """
    m = dict(m)
    for _ in range(4):
        dens: list[Pow] = []
        for factors in m:
            for f, q in factors:
                if isinstance(f, Pow) and f.exponent == -1 and q == 1 and f not in dens:
                    dens.append(f)
        progressed = False
        for P in dens:
            den = _poly_coeffs_of_map(_snf(P.base))
            if den is None or not den or max(den) < 1:
                continue
            groups: dict[Factors, dict[int, Fraction]] = {}
            members: dict[Factors, list[Factors]] = {}
            for factors, coeff in m.items():
                if (P, Fraction(1)) not in factors or not isinstance(coeff, Fraction):
                    continue
                deg = 0
                rest: list[tuple[Expr, Fraction]] = []
                for f, q in factors:
                    if f == P and q == 1:
                        continue
                    if isinstance(f, Var) and q.denominator == 1 and q > 0:
                        deg = int(q)
                    else:
                        rest.append((f, q))
                key = tuple(rest)
                g = groups.setdefault(key, {})
                g[deg] = g.get(deg, Fraction(0)) + coeff
                members.setdefault(key, []).append(factors)
            for key, num in groups.items():
                num = {d: c for d, c in num.items() if c != 0}
                if not num:
                    continue
                quot = _poly_divide_exact(num, den)
                if quot is None:
                    continue
                for factors in members[key]:
                    m.pop(factors, None)
                for d, c in quot.items():
                    new = list(key) + ([(X, Fraction(d))] if d > 0 else [])
                    factors2, mult = _canon_factors(new)
                    prev = m.get(factors2, Fraction(0)) + c * mult
                    if prev == 0:
                        m.pop(factors2, None)
                    else:
                        m[factors2] = prev
                progressed = True
        if not progressed:
            break
    return m


@lru_cache(maxsize=16384)
def simplify(e: Expr) -> Expr:
    """Canonicalize an expression tree."""
    return _rebuild(_cancel_rational(_snf(e)))


def is_zero(e: Expr) -> bool:
    s = simplify(e)
    return isinstance(s, Const) and s.value == 0


def as_terms(e: Expr) -> list[tuple[Number, Factors]]:
    """Decompose into summed terms coeff * prod(base^exponent).

    Bases are canonical subtrees; a base may itself be an opaque Pow
    node (unwrap it when exponent arithmetic matters).
    """
    m = _cancel_rational(_snf(e))
    return [(c, fs) for fs, c in m.items() if c != 0]


def as_param_affine(e: Expr) -> tuple[dict[str, Fraction], Fraction] | None:
    """Write a variable-free expression as sum(c_p * p) + c0 with exact
    coefficients; None when it is not affine in the parameters."""
    try:
        m = _snf(e)
    except DomainError:
        return None
    coeffs: dict[str, Fraction] = {}
    const = Fraction(0)
    for factors, c in m.items():
        c = Fraction(c) if isinstance(c, float) else c
        if not factors:
            const += c
        elif len(factors) == 1 and isinstance(factors[0][0], Param) and factors[0][1] == 1:
            name = factors[0][0].name
            coeffs[name] = coeffs.get(name, Fraction(0)) + c
        else:
            return None
    return coeffs, const


def structurally_equal(a: Expr, b: Expr) -> bool:
    return simplify(Sub(a, b)) == ZERO
