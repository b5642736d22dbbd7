import logging

import pytest
from hypothesis import given, settings, strategies as st

from suqtwist.models.words import (WordIndex, QuotientWord, TensorWordSum,
                                   IDENTITY, GENERATORS, word_product,
                                   canonical_terms, parse_generator_word)
from suqtwist.models.common import TruncationWindow
from suqtwist.operators.core import compose, InteriorSet, interior_residual
from suqtwist.algebra.suq2 import word_op, word_sum_op, counit_char

log = logging.getLogger(__name__)

ideal_words = st.builds(WordIndex, st.integers(0, 4), st.integers(-3, 3), st.integers(0, 4))
quotient_words = st.builds(QuotientWord, st.integers(0, 4), st.integers(0, 4))
words = st.one_of(ideal_words, quotient_words)

_W000 = WordIndex(0, 0, 0)


def _sum(word):
    return TensorWordSum.from_word(word)


class TestWords:

    def test_invalid_exponents(self):
        with pytest.raises(ValueError):
            WordIndex(-1, 0, 0)
        with pytest.raises(ValueError):
            QuotientWord(0, -2)

    def test_names(self):
        assert str(GENERATORS["T"]) == "T"
        assert str(GENERATORS["S*"]) == "S*"
        assert str(_W000) == "S*S"
        assert str(WordIndex(1, 2, 0)) == "W(1,2,0)"
        assert str(QuotientWord(2, 3)) == "Q(2,3)"

    def test_reach_and_levels(self):
        w = WordIndex(3, -2, 1)
        assert w.reach == 2
        assert w.top_level == 3
        assert w.adjoint() == WordIndex(1, 2, 3)
        assert QuotientWord(1, 4).reach == 3
        assert QuotientWord(1, 4).degree == -3

    def test_counit(self):
        assert WordIndex(0, 1, 0).counit == 0
        assert QuotientWord(2, 0).counit == 1

    def test_canonical_terms(self):
        assert canonical_terms(QuotientWord(2, 1)) == [(1, QuotientWord(1, 0)),
                                                       (-1, WordIndex(1, 0, 0))]
        assert canonical_terms(QuotientWord(0, 3)) == [(1, QuotientWord(0, 3))]
        assert canonical_terms(_W000) == [(1, _W000)]

    def test_word_product_rules(self):
        assert word_product(WordIndex(0, 1, 2), WordIndex(2, 1, 0)) == [(1, WordIndex(0, 2, 0))]
        assert word_product(WordIndex(0, 1, 2), WordIndex(1, 1, 0)) == []
        # T* S = 0, S T = 0
        assert word_product(GENERATORS["T*"], GENERATORS["S"]) == []
        assert word_product(GENERATORS["S"], GENERATORS["T"]) == []
        assert word_product(GENERATORS["T"], GENERATORS["S"]) == [(1, WordIndex(1, 1, 0))]


class TestParseGeneratorWord:

    def test_tokens(self):
        assert parse_generator_word("TS*") == ["T", "S*"]
        assert parse_generator_word("S*S T") == ["S*", "S", "T"]

    def test_invalid(self):
        for sx in ("", "TX", "s"):
            with pytest.raises(ValueError):
                parse_generator_word(sx)


class TestTensorWordSum:

    def test_toeplitz_relations(self):
        one = _sum(IDENTITY)
        assert TensorWordSum.from_generators("T*T") == one
        assert TensorWordSum.from_generators("S*S") == _sum(_W000)
        assert TensorWordSum.from_generators("TT*") == one - _sum(_W000)
        assert TensorWordSum.from_generators("TT*") + TensorWordSum.from_generators("S*S") == one
        assert TensorWordSum.from_generators("SS*") == TensorWordSum.from_generators("S*S")

    def test_vanishing_products(self):
        assert len(TensorWordSum.from_generators("ST")) == 0
        assert len(TensorWordSum.from_generators("S*T")) == 0
        assert len(TensorWordSum.from_generators("T*S")) == 0
        assert len(TensorWordSum.from_generators("TS*")) == 1

    def test_zero_terms_dropped(self):
        x = TensorWordSum([(1, (_W000,)), (-1, (_W000,))])
        assert len(x) == 0
        log.info(x)

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            TensorWordSum([(1, (IDENTITY,)), (1, (IDENTITY, IDENTITY))])
        with pytest.raises(ValueError):
            _sum(IDENTITY) * TensorWordSum.from_word(IDENTITY, IDENTITY)

    def test_tensor(self):
        x = TensorWordSum.from_generators("S").tensor(TensorWordSum.from_generators("T"))
        assert x.order == 2
        assert x == TensorWordSum.from_word(GENERATORS["S"], GENERATORS["T"])
        assert x.max_reach() == 1
        assert x.top_level() == 1

    def test_apply_counit(self):
        x = TensorWordSum([(2, (GENERATORS["T"], GENERATORS["S"])),
                           (3, (GENERATORS["S"], GENERATORS["T*"]))])
        assert x.apply_counit(0) == _sum(GENERATORS["S"]).scale(2)
        assert x.apply_counit(1) == _sum(GENERATORS["S"]).scale(3)
        with pytest.raises(ValueError):
            _sum(IDENTITY).apply_counit(0)

    def test_is_close(self):
        x = TensorWordSum([(1.0, (_W000,))])
        y = TensorWordSum([(1.0 + 1e-14, (_W000,))])
        assert x.is_close(y)
        assert not x.is_close(y.scale(2))

    def test_iteration_is_sorted(self):
        x = TensorWordSum([(1, (QuotientWord(2, 0),)), (1, (QuotientWord(0, 1),))])
        assert [legs for _, legs in x] == sorted(legs for _, legs in x)

    @settings(max_examples=60, deadline=None)
    @given(words, words, words)
    def test_associative(self, x, y, z):
        a, b, c = _sum(x), _sum(y), _sum(z)
        assert (a * b) * c == a * (b * c)

    @settings(max_examples=60, deadline=None)
    @given(words, words)
    def test_adjoint_reverses_products(self, x, y):
        a, b = _sum(x), _sum(y)
        assert (a * b).adjoint() == b.adjoint() * a.adjoint()

    @settings(max_examples=60, deadline=None)
    @given(words, words)
    def test_counit_is_multiplicative(self, x, y):
        assert counit_char(_sum(x) * _sum(y)) == counit_char(x) * counit_char(y)

    @settings(max_examples=30, deadline=None)
    @given(words, words)
    def test_products_match_matrices(self, x, y):
        leg = TruncationWindow(12, 8, 1)
        op = word_sum_op(_sum(x) * _sum(y), leg) - compose(word_op(x, leg), word_op(y, leg))
        # inputs whose image under y stays inside the window
        interior = InteriorSet(leg, 4, floor=0)
        assert interior_residual(op, interior) < 1e-12
