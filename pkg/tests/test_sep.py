"""Separable sums of 1-D functions: coordinatewise calculus."""

from fractions import Fraction

import pytest

from pwconvex import (
    AssumptionEnv,
    parse_separable,
    separable_conjugate,
    separable_prox,
)
from pwconvex.errors import DimensionMismatch, NonConvex, ParseError
from pwconvex.expr import evaluate
from pwconvex.pwf import eval_pwf

ENV = AssumptionEnv.empty()


def pt(v):
    assert v.tag == "point"
    return float(evaluate(v.lo))


class TestParsing:
    def test_l1_in_two_coordinates(self):
        f = parse_separable("abs(x) ;; abs(x)", ENV)
        assert len(f) == 2
        for fj in f:
            assert eval_pwf(fj, -2) == 2

    def test_single_coordinate(self):
        f = parse_separable("x^2/2", ENV)
        assert len(f) == 1
        assert eval_pwf(f.coordinates[0], 3) == Fraction(9, 2)

    def test_mixed_coordinates(self):
        f = parse_separable(
            "abs(x) ;; pw{ x < 0 -> inf ; x >= 0 -> x^2/2 }", ENV
        )
        assert len(f) == 2
        assert eval_pwf(f.coordinates[1], -1) == float("inf")

    def test_coordinate_errors_are_tagged(self):
        with pytest.raises(NonConvex) as ei:
            parse_separable("abs(x) ;; -x^2", ENV)
        assert str(ei.value).startswith("coordinate 1:")
        with pytest.raises(ParseError) as ei:
            parse_separable("abs(x) ;; 2 +", ENV)
        assert str(ei.value).startswith("coordinate 1:")


class TestProx:
    def test_l1_soft_threshold(self):
        f = parse_separable("abs(x) ;; abs(x)", ENV)
        out = separable_prox(f, 1, [2, Fraction(1, 2)])
        assert [pt(v) for v in out] == [1.0, 0.0]

    def test_box_projection(self):
        f = parse_separable(
            "pw{ x < 0 -> inf ; 0 <= x & x <= 1 -> 0 ; x > 1 -> inf } ;;"
            " pw{ x < 0 -> inf ; 0 <= x & x <= 1 -> 0 ; x > 1 -> inf }",
            ENV,
        )
        out = separable_prox(f, 1, [Fraction(3, 2), Fraction(-1, 4)])
        assert [pt(v) for v in out] == [1.0, 0.0]

    def test_dimension_mismatch(self):
        f = parse_separable("abs(x) ;; abs(x)", ENV)
        with pytest.raises(DimensionMismatch):
            separable_prox(f, 1, [1, 2, 3])


class TestConjugate:
    def test_coordinatewise(self):
        f = parse_separable("abs(x) ;; x^2/2", ENV)
        g = separable_conjugate(f)
        assert len(g) == 2
        assert eval_pwf(g.coordinates[0], Fraction(1, 2)) == 0
        assert eval_pwf(g.coordinates[0], 2) == float("inf")
        assert eval_pwf(g.coordinates[1], 3) == Fraction(9, 2)

    def test_value_splits_as_sum(self):
        f = parse_separable("abs(x) ;; exp(x)", ENV)
        g = separable_conjugate(f)
        x = [Fraction(1, 2), 1]
        total = sum(eval_pwf(gj, xj) for gj, xj in zip(g, x))
        assert total == -1  # 0 + (1*ln 1 - 1)
