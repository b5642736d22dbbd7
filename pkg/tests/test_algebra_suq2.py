import logging

import numpy as np
import pytest

from base_utils import LEG, max_abs_diff
from suqtwist.models.common import TruncationWindow, WindowError
from suqtwist.models.words import WordIndex, QuotientWord, TensorWordSum
from suqtwist.operators.core import apply, compose, identity
from suqtwist.algebra.suq2 import (gen_T, gen_S, word_op, word_sum_op, phi_a,
                                   phi_b, phi_a_series, phi_b_series,
                                   check_A_relations, check_suq2_relations,
                                   check_phi_series, counit_char, Character,
                                   rep_omega, rep_rho_t, rho_t_phi,
                                   continuity_bound_phi_b,
                                   phi_b_continuity_rows, A_RELATION_TOL)

log = logging.getLogger(__name__)


class TestGenerators:

    def test_T(self):
        out = apply(gen_T(LEG), LEG.basis_vector((2, 1)))
        assert out[LEG.index((3, 1))] == 1.0
        assert np.count_nonzero(out) == 1

    def test_S(self):
        S = gen_S(LEG)
        out = apply(S, LEG.basis_vector((0, 2)))
        assert out[LEG.index((0, 3))] == 1.0
        assert np.count_nonzero(apply(S, LEG.basis_vector((1, 0)))) == 0

    def test_tensor_window_rejected(self):
        with pytest.raises(WindowError):
            gen_T(LEG.with_order(2))

    def test_word_op(self):
        out = apply(word_op(WordIndex(1, 2, 0), LEG), LEG.basis_vector((0, -1)))
        assert out[LEG.index((1, 1))] == 1.0
        q = word_op(QuotientWord(2, 1), LEG)
        assert np.count_nonzero(apply(q, LEG.basis_vector((0, 0)))) == 0
        assert apply(q, LEG.basis_vector((3, 0)))[LEG.index((4, 0))] == 1.0
        assert q.reach == 1

    def test_word_sum_op(self):
        x = TensorWordSum.from_generators("TT*") + TensorWordSum.from_generators("S*S")
        assert max_abs_diff(word_sum_op(x, LEG).matrix, identity(LEG).matrix) == 0.0
        tt = word_sum_op(TensorWordSum.from_generators("T").tensor(
            TensorWordSum.from_generators("T")), LEG)
        assert tt.window == LEG.with_order(2)


class TestRelations:

    def test_A_relations(self):
        rows = check_A_relations(LEG, command="verify-relations")
        assert [r.check for r in rows] == ["a_rel_isometry", "a_rel_normal", "a_rel_partition"]
        for row in rows:
            log.info(row)
            assert row.q is None
            assert row.residual == 0.0
            assert row.passed

    @pytest.mark.parametrize("q", [0.0, 0.3, 0.5, 0.9])
    def test_suq2_relations(self, q):
        rows = check_suq2_relations(q, LEG)
        assert len(rows) == 5
        for row in rows:
            assert row.passed, row
            assert row.params["interior_order"] == 2

    def test_phi_at_zero(self):
        a = phi_a(0.0, LEG)
        # phi_0(a) = T*
        assert max_abs_diff(a.matrix, gen_T(LEG).H.matrix) == 0.0
        b = phi_b(0.0, LEG)
        assert max_abs_diff(b.matrix, gen_S(LEG).matrix) == 0.0

    @pytest.mark.parametrize("q", [0.3, 0.5])
    def test_phi_series(self, q):
        rows = check_phi_series(q, LEG, 1e-8)
        assert [r.check for r in rows] == ["phi_a_series", "phi_b_series"]
        assert all(r.passed for r in rows)
        assert rows[0].params["series_terms"] >= 1

    def test_phi_series_tail(self):
        w = TruncationWindow(40, 4, 1)
        b = phi_b_series(0.5, w, 1e-6)
        assert 0 < b.err <= 1e-6
        assert b.meta["series_terms"] == 20
        a = phi_a_series(0.5, w, 1e-6)
        assert 0 < a.err <= 1e-6

    def test_phi_series_needs_positive_q(self):
        with pytest.raises(ValueError):
            phi_a_series(0.0, LEG, 1e-8)
        with pytest.raises(ValueError):
            phi_b_series(0.0, LEG, 1e-8)


class TestCounitAndCharacters:

    def test_counit(self):
        assert counit_char(WordIndex(2, -1, 0)) == 0
        assert counit_char(QuotientWord(0, 3)) == 1
        assert counit_char(TensorWordSum.from_generators("T*T")) == 1
        assert counit_char(TensorWordSum.from_generators("S*S")) == 0
        with pytest.raises(ValueError):
            counit_char(TensorWordSum.from_generators("T").tensor(TensorWordSum.from_generators("T")))

    def test_character(self):
        w = Character(1j)
        log.info(w)
        assert w("T") == 1j
        assert w("T*") == -1j
        assert w("S") == 0
        assert w("TT*") == 1
        assert w(QuotientWord(2, 0)) == -1
        assert w.phi_images(0.5) == (-1j, 0j)

    def test_counit_is_omega_one(self):
        eps = rep_omega(1)
        for word in (WordIndex(0, 0, 0), QuotientWord(3, 1), QuotientWord(0, 0)):
            assert eps(word) == counit_char(word)

    def test_not_unit_modulus(self):
        with pytest.raises(ValueError):
            Character(2)
        with pytest.raises(ValueError):
            rep_rho_t(0.5, 4)


class TestRepRhoT:

    def test_images(self):
        T, S = rep_rho_t(1j, 6)
        tt = (T @ T.conj().T).toarray()
        ss = (S.conj().T @ S).toarray()
        np.testing.assert_allclose(tt + ss, np.eye(6))
        # isometry away from the top level
        np.testing.assert_allclose((T.conj().T @ T).toarray()[:5, :5], np.eye(5))
        assert S[0, 0] == 1j

    def test_too_few_levels(self):
        with pytest.raises(WindowError):
            rep_rho_t(1, 1)

    @pytest.mark.parametrize("q", [0.0, 0.5])
    def test_phi_relations(self, q):
        t = np.exp(0.3j)
        a, b = rho_t_phi(t, q, 8)
        a_, b_ = a.toarray(), b.toarray()
        np.testing.assert_allclose(a_ @ b_, q * b_ @ a_, atol=1e-14)
        np.testing.assert_allclose(a_.conj().T @ a_ + b_.conj().T @ b_, np.eye(8), atol=1e-14)
        np.testing.assert_allclose(b_.conj().T @ b_, b_ @ b_.conj().T, atol=1e-14)


class TestContinuity:

    def test_bound(self):
        assert continuity_bound_phi_b(0.0, 0.5, LEG) == 0.5
        assert continuity_bound_phi_b(0.5, 0.5, LEG) == 0.0

    def test_rows(self):
        rows = phi_b_continuity_rows([0.1, 0.2, 0.4], LEG, command="sweep")
        assert [r.q for r in rows] == [0.2, 0.4]
        assert rows[1].params["step"] == 0.2
        for row in rows:
            assert row.passed
            assert row.residual == pytest.approx(row.budget - A_RELATION_TOL)

    def test_unsorted(self):
        with pytest.raises(ValueError):
            phi_b_continuity_rows([0.4, 0.2], LEG)

    def test_phi_b_difference_is_diagonal_in_levels(self):
        d = phi_b(0.5, LEG) - phi_b(0.25, LEG)
        out = apply(d, LEG.basis_vector((1, 0)))
        assert out[LEG.index((1, 1))] == pytest.approx(0.25)
        assert compose(d, identity(LEG)).reach == 1
