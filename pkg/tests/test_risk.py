"""Tail-risk functionals built on top of the convex machinery."""

import math
from fractions import Fraction

import pytest

from pwconvex import (
    AssumptionEnv,
    DistributionSpec,
    cvar,
    quantile,
    superexpectation,
    superexpectation_conjugate,
    superquantile,
)
from pwconvex.errors import InputError, NoFirstMoment, POutOfRange
from pwconvex.expr import evaluate
from pwconvex.pwf import eval_pwf

ENV = AssumptionEnv.empty()
INF = math.inf

UNIFORM = "pw{ x < 0 -> 0 ; 0 <= x & x < 1 -> x ; x >= 1 -> 1 }"
EXPONENTIAL = "pw{ x < 0 -> 0 ; x >= 0 -> 1 - exp(-x) }"
POINT_MASS_2 = "pw{ x < 2 -> 0 ; x >= 2 -> 1 }"
PARETO_2 = "pw{ x < 1 -> 0 ; x >= 1 -> 1 - 1/x^2 }"
COIN = "pw{ x < 0 -> 0 ; 0 <= x & x < 1 -> 1/2 ; x >= 1 -> 1 }"


def num(v):
    return float(evaluate(v)) if not isinstance(v, (int, float, Fraction)) else float(v)


class TestSuperexpectation:
    def test_uniform_exact(self):
        d = DistributionSpec.from_cdf(UNIFORM, ENV)
        E = superexpectation(d)
        # integral of max(t, x) dt over [0,1]
        assert eval_pwf(E, Fraction(1, 2)) == Fraction(5, 8)
        assert eval_pwf(E, 0) == Fraction(1, 2)  # the plain mean
        assert eval_pwf(E, -3) == Fraction(1, 2)
        assert eval_pwf(E, 2) == 2

    def test_point_mass_is_max(self):
        E = superexpectation(DistributionSpec.from_cdf(POINT_MASS_2, ENV))
        assert eval_pwf(E, 0) == 2
        assert eval_pwf(E, 2) == 2
        assert eval_pwf(E, 5) == 5

    def test_coin_flip(self):
        E = superexpectation(DistributionSpec.from_cdf(COIN, ENV))
        assert eval_pwf(E, -1) == Fraction(1, 2)
        assert eval_pwf(E, Fraction(1, 2)) == Fraction(3, 4)
        assert eval_pwf(E, 3) == 3

    def test_exponential(self):
        E = superexpectation(DistributionSpec.from_cdf(EXPONENTIAL, ENV))
        assert eval_pwf(E, 0) == 1  # mean of the unit exponential
        x = Fraction(2)
        assert abs(float(eval_pwf(E, x)) - (2 + math.exp(-2))) < 1e-12

    def test_pareto_two(self):
        E = superexpectation(DistributionSpec.from_cdf(PARETO_2, ENV))
        assert eval_pwf(E, 1) == 2
        assert eval_pwf(E, 10) == Fraction(101, 10)
        assert eval_pwf(E, 0) == 2  # flat at the mean below the support

    def test_heavy_tail_rejected(self):
        d = DistributionSpec.from_cdf("pw{ x < 1 -> 0 ; x >= 1 -> 1 - x^(-1/2) }", ENV)
        with pytest.raises(NoFirstMoment):
            superexpectation(d)


class TestQuantiles:
    def test_uniform(self):
        d = DistributionSpec.from_cdf(UNIFORM, ENV)
        assert num(quantile(d, Fraction(1, 4))) == 0.25
        assert num(superquantile(d, Fraction(1, 2))) == 0.75
        assert num(cvar(d, Fraction(9, 10))) == 0.95

    def test_coin_jump(self):
        d = DistributionSpec.from_cdf(COIN, ENV)
        assert num(quantile(d, Fraction(1, 4))) == 0
        assert num(quantile(d, Fraction(3, 4))) == 1
        # averaging over the upper half mixes the two atoms
        assert num(superquantile(d, Fraction(1, 2))) == 1

    def test_exponential_closed_forms(self):
        d = DistributionSpec.from_cdf(EXPONENTIAL, ENV)
        q = quantile(d, Fraction(1, 2))
        assert abs(num(q) - math.log(2)) < 1e-12
        c = cvar(d, Fraction(19, 20))
        assert abs(num(c) - (1 + math.log(20))) < 1e-12

    def test_out_of_range(self):
        d = DistributionSpec.from_cdf(UNIFORM, ENV)
        with pytest.raises(POutOfRange):
            quantile(d, Fraction(3, 2))
        with pytest.raises(POutOfRange):
            superquantile(d, 1)
        with pytest.raises(POutOfRange):
            cvar(d, Fraction(-1, 10))


class TestConjugateRoute:
    def test_exponential_exact_pieces(self):
        d = DistributionSpec.from_cdf(EXPONENTIAL, ENV)
        C = superexpectation_conjugate(d)
        assert C.varname == "p"
        assert eval_pwf(C, 0) == -1
        assert eval_pwf(C, 1) == 0
        p = Fraction(1, 2)
        expect = -1 + 0.5 - 0.5 * math.log(0.5) + math.log(0.5)
        assert abs(float(eval_pwf(C, p)) - expect) < 1e-12
        assert eval_pwf(C, 2) == INF
        assert eval_pwf(C, Fraction(-1, 2)) == INF

    def test_uniform_exact_pieces(self):
        d = DistributionSpec.from_cdf(UNIFORM, ENV)
        C = superexpectation_conjugate(d)
        # E(x) has slope p where F(x) = 1 - ... ; conjugate lives on [0, 1]
        assert eval_pwf(C, 0) == Fraction(-1, 2)
        assert eval_pwf(C, 1) == 0
        assert eval_pwf(C, Fraction(1, 2)) == Fraction(-3, 8)

    def test_superquantile_secant_identity(self):
        # (E(x) - x*? ) route: -E*(p)/(1-p) must agree with the direct walk
        for text in (UNIFORM, EXPONENTIAL, COIN, PARETO_2):
            d = DistributionSpec.from_cdf(text, ENV)
            C = superexpectation_conjugate(d)
            for p in (Fraction(1, 10), Fraction(1, 2), Fraction(4, 5)):
                lhs = num(superquantile(d, p))
                rhs = -float(eval_pwf(C, p)) / float(1 - p)
                assert abs(lhs - rhs) < 1e-9, (text, p)


class TestQuantileInput:
    def test_uniform_from_quantile(self):
        d = DistributionSpec.from_quantile("p", ENV)
        E = superexpectation(d)
        assert eval_pwf(E, Fraction(1, 2)) == Fraction(5, 8)
        assert num(superquantile(d, Fraction(1, 2))) == 0.75

    def test_point_mass_from_constant_quantile(self):
        d = DistributionSpec.from_quantile("2", ENV)
        E = superexpectation(d)
        assert eval_pwf(E, 0) == 2
        assert eval_pwf(E, 3) == 3

    def test_agrees_with_cdf_route(self):
        dq = DistributionSpec.from_quantile("-ln(1 - p)", ENV)
        dc = DistributionSpec.from_cdf(EXPONENTIAL, ENV)
        for p in (Fraction(1, 4), Fraction(1, 2), Fraction(9, 10)):
            assert abs(num(quantile(dq, p)) - num(quantile(dc, p))) < 1e-9
            assert abs(num(superquantile(dq, p)) - num(superquantile(dc, p))) < 1e-9


class TestCdfValidation:
    def test_decreasing_rejected(self):
        with pytest.raises(InputError):
            DistributionSpec.from_cdf("pw{ x < 0 -> 0 ; 0 <= x & x < 1 -> 1 - x ; x >= 1 -> 1 }", ENV)

    def test_bad_left_tail(self):
        with pytest.raises(InputError):
            DistributionSpec.from_cdf("pw{ x < 0 -> 1/4 ; x >= 0 -> 1 }", ENV)

    def test_bad_right_tail(self):
        with pytest.raises(InputError):
            DistributionSpec.from_cdf("pw{ x < 0 -> 0 ; x >= 0 -> 1/2 }", ENV)

    def test_left_continuous_jump_rejected(self):
        # CDF must take the upper value at a jump
        with pytest.raises(InputError):
            DistributionSpec.from_cdf("pw{ x <= 0 -> 0 ; x > 0 -> 1 }", ENV)

    def test_values_outside_unit_interval(self):
        with pytest.raises(InputError):
            DistributionSpec.from_cdf("pw{ x < 0 -> 0 ; 0 <= x & x < 1 -> 2*x ; x >= 1 -> 1 }", ENV)
