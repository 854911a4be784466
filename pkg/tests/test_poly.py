import random
from fractions import Fraction

import pytest

from odeobs.expr import (
    Const,
    DivisionByZeroError,
    Symbol,
    add,
    diff,
    eval_exact,
    eval_float,
    mul,
    neg,
    parse_expr,
    sym,
)
from odeobs.poly import (
    PROBABLY_NONZERO,
    PROBABLY_ZERO,
    ZERO_EXACT,
    Poly,
    is_zero,
    normalize_rational,
    poly_gcd,
)

from conftest import random_expr, random_point

S = Symbol("S", "state")
I = Symbol("I", "state")
X = Symbol("x", "state")


class TestNormalize:
    def test_sum_over_common_denominator(self):
        table = {"S": S, "I": I}
        rf = normalize_rational(parse_expr("S/I + 1", table), var_order=(S, I))
        assert rf.num == Poly((S, I), {(1, 0): Fraction(1), (0, 1): Fraction(1)})
        assert rf.den == Poly((S, I), {(0, 1): Fraction(1)})

    def test_gcd_cancellation(self):
        rf = normalize_rational(parse_expr("(x^2 - 1)/(x - 1)", {"x": X}))
        assert rf.num == Poly((X,), {(1,): Fraction(1), (0,): Fraction(1)})
        assert rf.den == Poly((X,), {(0,): Fraction(1)})

    def test_lv_gradient_residual_is_zero_form(self):
        # grad(H) . f for the logarithmic first integral reduces to 0/1
        names = {
            n: Symbol(n, "state" if n in ("r", "m") else "parameter")
            for n in ("r", "m", "R", "D", "B", "M")
        }
        h = parse_expr("R*ln(m) + M*ln(r) - D*m - B*r", names)
        f_r = parse_expr("R*r - D*r*m", names)
        f_m = parse_expr("B*r*m - M*m", names)
        residual = add(
            mul(diff(h, names["r"]), f_r), mul(diff(h, names["m"]), f_m)
        )
        rf = normalize_rational(residual)
        assert rf.num.is_zero
        assert rf.den.is_constant and rf.den.constant_value() == 1
        # independent float oracle: residual vanishes at random positive points
        rng = random.Random(23)
        for _ in range(20):
            point = {s: rng.uniform(0.2, 8.0) for s in names.values()}
            assert eval_float(residual, point) == pytest.approx(0.0, abs=1e-9)

    def test_identically_zero_denominator_rejected(self):
        e = parse_expr("1/(x - x)", {"x": X})
        with pytest.raises(DivisionByZeroError):
            normalize_rational(e)

    def test_eval_agreement_with_source_expression(self):
        rng = random.Random(29)
        checked = 0
        while checked < 120:
            e = random_expr(rng, depth=4)
            point = random_point(rng)
            try:
                direct = eval_exact(e, point)
                rf = normalize_rational(e)
                via_form = rf.eval(point)
            except (DivisionByZeroError, ZeroDivisionError):
                continue
            assert direct == via_form
            checked += 1

    def test_canonical_form_is_deterministic(self):
        rng = random.Random(31)
        for _ in range(40):
            e = random_expr(rng, depth=3)
            a = normalize_rational(e)
            b = normalize_rational(e)
            assert a.num == b.num and a.den == b.den


class TestGcd:
    def test_known_univariate(self):
        x = (X,)
        a = Poly(x, {(2,): Fraction(1), (0,): Fraction(-1)})  # x^2 - 1
        b = Poly(x, {(1,): Fraction(1), (0,): Fraction(-1)})  # x - 1
        g = poly_gcd(a, b)
        assert g == Poly(x, {(1,): Fraction(1), (0,): Fraction(-1)})

    def test_multivariate_common_factor(self):
        y = Symbol("y", "state")
        vars = (X, y)
        # (x + y) * (x - y)  and  (x + y) * x
        common = Poly(vars, {(1, 0): Fraction(1), (0, 1): Fraction(1)})
        a = common * Poly(vars, {(1, 0): Fraction(1), (0, 1): Fraction(-1)})
        b = common * Poly(vars, {(1, 0): Fraction(1)})
        assert poly_gcd(a, b) == common

    def test_random_products_share_planted_factor(self):
        rng = random.Random(37)
        y = Symbol("y", "state")
        vars = (X, y)

        def random_poly():
            coeffs = {}
            for _ in range(rng.randint(1, 3)):
                mono = (rng.randint(0, 2), rng.randint(0, 2))
                coeffs[mono] = Fraction(rng.randint(1, 4))
            return Poly(vars, coeffs)

        from odeobs.poly import _divexact

        for _ in range(40):
            g = random_poly()
            a = g * random_poly()
            b = g * random_poly()
            got = poly_gcd(a, b)
            # the computed gcd divides both inputs exactly
            assert (_divexact(a, got) * got) == a
            assert (_divexact(b, got) * got) == b
            # and the planted factor divides the computed gcd
            monic_g = poly_gcd(g, g)
            assert poly_gcd(got, g) == monic_g


class TestIsZero:
    def test_sir_population_invariant(self):
        names = {
            n: Symbol(n, "state" if n in "SIR" else "parameter")
            for n in ("S", "I", "R", "beta", "lam")
        }
        h = parse_expr("S + I + R", names)
        fs = [
            parse_expr("-beta*S*I", names),
            parse_expr("beta*S*I - lam*I", names),
            parse_expr("lam*I", names),
        ]
        residual = add(
            *[mul(diff(h, names[v]), f) for v, f in zip("SIR", fs)]
        )
        assert is_zero(residual).kind == ZERO_EXACT

    def test_lv_residual_zero(self):
        names = {
            n: Symbol(n, "state" if n in ("r", "m") else "parameter")
            for n in ("r", "m", "R", "D", "B", "M")
        }
        h = parse_expr("R*ln(m) + M*ln(r) - D*m - B*r", names)
        f_r = parse_expr("R*r - D*r*m", names)
        f_m = parse_expr("B*r*m - M*m", names)
        residual = add(
            mul(diff(h, names["r"]), f_r), mul(diff(h, names["m"]), f_m)
        )
        assert is_zero(residual).kind == ZERO_EXACT

    def test_nonzero_monomial_with_witness(self):
        names = {
            n: Symbol(n, "state" if n in "SI" else "parameter")
            for n in ("S", "I", "beta")
        }
        e = parse_expr("beta*S*I", names)
        result = is_zero(e)
        assert not result.is_zero_like
        assert result.witness is not None
        assert eval_exact(e, result.witness) != 0

    def test_e_minus_e_is_zero(self):
        rng = random.Random(41)
        for _ in range(80):
            e = random_expr(rng, depth=3)
            assert is_zero(add(e, neg(e))).kind == ZERO_EXACT

    def test_transcendental_identity_sampled(self):
        # exp products are outside the exact path; the float sampler decides
        from odeobs.expr import exp as exp_

        e = add(
            mul(exp_(sym(X)), exp_(sym(X))),
            neg(mul(exp_(sym(X)), exp_(sym(X)))),
        )
        result = is_zero(e)
        assert result.kind == PROBABLY_ZERO
        assert result.trials > 0
        # a genuinely transcendental zero: ln(x^2) - 2*ln(x) on x > 0 domain
        two_ln = add(parse_expr("ln(x^2)", {"x": X}), mul(Const(Fraction(-2)), parse_expr("ln(x)", {"x": X})))
        result = is_zero(two_ln, seed=1)
        assert result.kind == PROBABLY_ZERO
        assert result.trials > 0

    def test_transcendental_nonzero_sampled(self):
        e = parse_expr("ln(x) + 1", {"x": X})
        result = is_zero(e, seed=2)
        assert result.kind == PROBABLY_NONZERO
        assert result.witness is not None

    def test_seed_determinism(self):
        names = {"S": S, "I": I}
        e = parse_expr("S*I + 1", names)
        a = is_zero(e, seed=5)
        b = is_zero(e, seed=5)
        assert a == b
