from decimal import Decimal, localcontext
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from valring.errors import LiteralSyntaxError, NonSquarefreeRadicand, PrecisionLimitError
from valring.exact_reals import QuadExt, is_squarefree, parse_quadext, qx_arith, qx_sign, rational_rank

RADICANDS = (1, 2, 3, 5, 6)


def q(text):
    return parse_quadext(text)


def decimal_value(x: QuadExt, digits: int = 320) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits
        total = Decimal(0)
        for d, c in x.terms.items():
            total += Decimal(c.numerator) / Decimal(c.denominator) * Decimal(d).sqrt()
        return total


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
quadexts = st.dictionaries(st.sampled_from(RADICANDS), rationals, max_size=5).map(QuadExt)


class TestArithmetic:
    def test_cancellation(self):
        assert qx_arith(q("1 + sqrt(2)"), q("1 - sqrt(2)"), "add") == QuadExt(2)

    def test_difference_of_squares(self):
        assert qx_arith(q("1 + sqrt(2)"), q("1 - sqrt(2)"), "mul") == QuadExt(-1)

    def test_square_factor_folds_into_coefficient(self):
        assert qx_arith(QuadExt.sqrt(2), QuadExt.sqrt(6), "mul") == q("2*sqrt(3)")

    def test_subtraction(self):
        assert qx_arith(q("3/2 + sqrt(5)"), q("1/2"), "sub") == q("1 + sqrt(5)")

    def test_unknown_operation(self):
        with pytest.raises(ValueError):
            qx_arith(QuadExt(1), QuadExt(1), "div")

    @given(quadexts, quadexts, quadexts)
    def test_ring_laws(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a + b == b + a
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert a - a == QuadExt(0)

    @given(quadexts)
    def test_canonical_form_is_idempotent(self, a):
        again = QuadExt(a.terms)
        assert again == a and again.terms == a.terms
        assert all(c != 0 for c in a.terms.values())
        assert all(is_squarefree(d) for d in a.terms)

    @given(quadexts)
    def test_text_round_trip(self, a):
        assert parse_quadext(str(a)) == a


class TestSign:
    @pytest.mark.parametrize(
        "text, expected",
        [("3 - 2*sqrt(2)", 1), ("0", 0), ("sqrt(2) + sqrt(3) - sqrt(5)", 1), ("-1/7", -1), ("2*sqrt(2) - 3", -1)],
    )
    def test_examples(self, text, expected):
        assert qx_sign(q(text)) == expected

    def test_close_values(self):
        # 99^2 = 9801 = 2 * 70^2 + 1, so 99 - 70*sqrt(2) is about 0.00505
        assert qx_sign(q("99 - 70*sqrt(2)")) == 1
        assert qx_sign(q("-99 + 70*sqrt(2)")) == -1

    def test_refinement_cap_raises_instead_of_guessing(self):
        # about 3e-18 with coefficients near 1e18: 64 bits cannot separate it from zero
        tiny = q("1331714 - 941664*sqrt(2)") * q("1331714 - 941664*sqrt(2)") * q("1331714 - 941664*sqrt(2)")
        with pytest.raises(PrecisionLimitError):
            tiny.sign(rounds=1)
        assert tiny.sign(rounds=4) == 1

    @given(quadexts)
    def test_zero_iff_empty(self, a):
        assert (qx_sign(a) == 0) == (not a.terms)

    @settings(max_examples=300)
    @given(quadexts, quadexts)
    def test_sign_matches_decimal_oracle(self, a, b):
        diff = a - b
        ref = decimal_value(diff)
        assert qx_sign(diff) == (ref > 0) - (ref < 0)

    @given(quadexts, quadexts, quadexts)
    def test_order_compatible_with_addition(self, a, b, c):
        if a < b:
            assert a + c < b + c


class TestParsing:
    def test_grammar_example(self):
        x = q("3/2 + 2*sqrt(2) - 1/3*sqrt(6)")
        assert x.terms == {1: F(3, 2), 2: F(2), 6: F(-1, 3)}

    def test_leading_sign(self):
        assert q("-sqrt(3) + 1") == QuadExt({1: 1, 3: -1})

    def test_non_squarefree_rejected_with_column(self):
        with pytest.raises(NonSquarefreeRadicand) as info:
            parse_quadext("1 + sqrt(8)")
        assert info.value.col == 10

    def test_column_offset(self):
        with pytest.raises(LiteralSyntaxError) as info:
            parse_quadext("1 +* 2", col_offset=10)
        assert info.value.col == 14

    @pytest.mark.parametrize("bad", ["", "1 +", "sqrt(2", "1/0", "2 sqrt(2)", "x"])
    def test_malformed(self, bad):
        with pytest.raises(LiteralSyntaxError):
            parse_quadext(bad)

    def test_constructor_rejects_non_squarefree(self):
        with pytest.raises(ValueError):
            QuadExt({12: 1})


def test_rational_rank():
    assert rational_rank([QuadExt(1), QuadExt.sqrt(2)]) == 2
    assert rational_rank([QuadExt(1), QuadExt(2)]) == 1
    assert rational_rank([q("1 + sqrt(2)"), q("2 + 2*sqrt(2)"), QuadExt.sqrt(3)]) == 2
