import logging
import types

import numpy as np
import pytest
import scipy.sparse

from base_utils import LEG, SMALL_PAIR, TRIPLE, max_abs_diff
from suqtwist.models.common import TruncationWindow, WindowError, NotInIdealError
from suqtwist.models.report import Verdicts
from suqtwist.models.words import WordIndex, GENERATORS
from suqtwist.operators.core import SparseOperator, identity, tensor
from suqtwist.algebra.suq2 import gen_T, gen_S, word_op, word_sum_op
from suqtwist.algebra.comultiplication import LEFT, RIGHT, delta0_generators
from suqtwist.algebra.cocycle import u_q
from suqtwist.algebra.lift import (extract_J_coeffs, extract_tensor_coeffs,
                                   eps_tensor_id, carrier_word, carriers,
                                   carrier_mask, TripleOperator,
                                   LegPairOperator, MultiplierLift, apply_chain,
                                   triple_samples, lift_delta0_leg,
                                   pseudo_cocycle_probe, two_cocycle_residual,
                                   counit_factor_rows, density_identity_rows,
                                   nonvanishing_norms, nonvanishing_row,
                                   extraction_rows, u_tilde_word_row,
                                   counit_u_rows, COUNIT_U_WORDS, A_LEG, J_LEG)

log = logging.getLogger(__name__)

_S, _T, _TS = GENERATORS["S"], GENERATORS["T"], GENERATORS["T*"]


class TestExtractJ:

    def test_S(self):
        coeffs = extract_J_coeffs(gen_S(LEG))
        log.info(coeffs)
        assert len(coeffs) == 1
        assert coeffs[_S] == pytest.approx(1.0)
        assert coeffs.err == pytest.approx(0.0, abs=1e-14)

    def test_ideal_word(self):
        w = WordIndex(2, -1, 1)
        coeffs = extract_J_coeffs(word_op(w, LEG))
        assert coeffs[w] == pytest.approx(1.0)
        assert coeffs.spread == pytest.approx(0.0, abs=1e-14)

    def test_rejects_T(self):
        with pytest.raises(NotInIdealError):
            extract_J_coeffs(gen_T(LEG))

    def test_needs_one_leg(self):
        with pytest.raises(WindowError):
            extract_J_coeffs(identity(SMALL_PAIR))

    def test_synthesize(self):
        coeffs = extract_J_coeffs(gen_S(LEG))
        op = coeffs.synthesize(LEG)
        assert max_abs_diff(op.matrix, gen_S(LEG).matrix) < 1e-14


class TestExtractTensor:

    def setup_method(self, method):
        self.leg = SMALL_PAIR.leg()

    def test_tensor_of_isometries(self):
        T = gen_T(self.leg)
        coeffs = extract_tensor_coeffs(tensor(T, T), (A_LEG, A_LEG))
        assert coeffs[(_T, _T)] == pytest.approx(1.0)
        assert coeffs.to_word_sum().is_close(delta0_generators("T"))

    def test_delta0_of_S(self):
        d0 = word_sum_op(delta0_generators("S"), SMALL_PAIR)
        coeffs = extract_tensor_coeffs(d0, (A_LEG, A_LEG))
        assert coeffs[(_S, _TS)] == pytest.approx(1.0)
        assert coeffs[(_T, _S)] == pytest.approx(1.0)
        assert coeffs.to_word_sum().is_close(delta0_generators("S"))

    def test_j_legs_reject_shifts(self):
        T = gen_T(self.leg)
        with pytest.raises(NotInIdealError):
            extract_tensor_coeffs(tensor(T, T), (J_LEG, J_LEG))

    def test_invalid(self):
        with pytest.raises(ValueError):
            extract_tensor_coeffs(identity(SMALL_PAIR), ("A", "X"))
        with pytest.raises(WindowError):
            extract_tensor_coeffs(identity(self.leg))

    def test_input_levels(self):
        x = word_sum_op(carrier_word(1, 0), SMALL_PAIR)
        coeffs = extract_tensor_coeffs(x, (J_LEG, J_LEG), input_levels=(1, 0),
                                       windings=(-1, 0, 1))
        assert coeffs[(WordIndex(1, 0, 1), WordIndex(0, 0, 0))] == pytest.approx(1.0)
        assert len(coeffs) == 1


class TestEpsTensorId:

    def setup_method(self, method):
        self.leg = SMALL_PAIR.leg()

    def test_tensor_of_isometries(self):
        T = gen_T(self.leg)
        for side in (LEFT, RIGHT):
            op = eps_tensor_id(tensor(T, T), side)
            assert max_abs_diff(op.matrix, T.matrix) < 1e-14
            assert op.meta["side"] == side

    def test_delta0_of_S(self):
        d0 = word_sum_op(delta0_generators("S"), SMALL_PAIR)
        for side in (LEFT, RIGHT):
            op = eps_tensor_id(d0, side)
            assert max_abs_diff(op.matrix, gen_S(self.leg).matrix) < 1e-14

    def test_bad_side(self):
        with pytest.raises(ValueError):
            eps_tensor_id(identity(SMALL_PAIR), "middle")


class TestCarriers:

    def test_carriers_add_up_to_identity(self):
        acc = None
        for a, b in carriers(SMALL_PAIR.k_max):
            op = word_sum_op(carrier_word(a, b), SMALL_PAIR)
            acc = op if acc is None else acc + op
        assert max_abs_diff(acc.matrix, identity(SMALL_PAIR).matrix) < 1e-14

    @pytest.mark.parametrize("side", [LEFT, RIGHT])
    def test_masks_partition_the_triple_window(self, side):
        total = sum(carrier_mask(TRIPLE, side, a, b).astype(int)
                    for a, b in carriers(TRIPLE.k_max))
        assert np.all(total == 1)

    def test_bad_side(self):
        with pytest.raises(ValueError):
            carrier_mask(TRIPLE, "middle", 0, 0)


class TestTripleOperators:

    def setup_method(self, method):
        leg = SMALL_PAIR.leg()
        self.TT = tensor(gen_T(leg), gen_T(leg)).evolve(name="TT")

    def test_needs_three_legs(self):
        with pytest.raises(WindowError):
            TripleOperator(SMALL_PAIR, "x")

    def test_identity(self):
        op = LegPairOperator(identity(SMALL_PAIR), TRIPLE, (0, 1))
        v = triple_samples(TRIPLE, 1)[0]
        out, leak, err = op(v)
        assert np.allclose(out, v)
        assert leak == pytest.approx(0.0, abs=1e-14)
        assert err == 0.0

    def test_leg_pairs(self):
        left = LegPairOperator(self.TT, TRIPLE, (0, 1))
        log.info(left)
        assert left.provenance == "TT(x)I"
        out, leak, _ = left(TRIPLE.basis_vector((1, 0), (2, 0), (0, 0)))
        assert out[TRIPLE.index((2, 0), (3, 0), (0, 0))] == pytest.approx(1.0)
        assert leak == pytest.approx(0.0, abs=1e-14)
        right = LegPairOperator(self.TT, TRIPLE, (1, 2))
        out, _, _ = right(TRIPLE.basis_vector((0, 0), (1, 0), (2, 0)))
        assert out[TRIPLE.index((0, 0), (2, 0), (3, 0))] == pytest.approx(1.0)

    def test_leak_at_the_boundary(self):
        op = LegPairOperator(self.TT, TRIPLE, (0, 1))
        out, leak, _ = op(TRIPLE.basis_vector((3, 0), (0, 0), (1, 0)))
        assert np.count_nonzero(out) == 0
        assert leak == pytest.approx(1.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            LegPairOperator(self.TT, TRIPLE, (0, 2))
        with pytest.raises(WindowError):
            LegPairOperator(self.TT, TruncationWindow(8, 4, 3), (0, 1))

    def test_apply_chain(self):
        ops = [LegPairOperator(identity(SMALL_PAIR), TRIPLE, (1, 2)),
               LegPairOperator(identity(SMALL_PAIR), TRIPLE, (0, 1))]
        v = triple_samples(TRIPLE, 1, seed=3)[0]
        out, budget, lost = apply_chain(ops, v)
        assert np.allclose(out, v)
        assert budget == 0.0
        assert lost == pytest.approx(0.0, abs=1e-14)

    def test_triple_samples(self):
        vs = triple_samples(TRIPLE, 3, seed=1)
        assert len(vs) == 3
        for v in vs:
            assert np.linalg.norm(v) == pytest.approx(1.0)
            for i in np.flatnonzero(v):
                for k, m in TRIPLE.label(i):
                    assert k <= 2 and abs(m) <= 1


class TestLiftDelta0Leg:

    @pytest.mark.parametrize("side", [LEFT, RIGHT])
    def test_identity_lifts_to_carrier_projection(self, side):
        v = triple_samples(TRIPLE, 1, seed=2)[0]
        vec, err, lost = lift_delta0_leg(identity(SMALL_PAIR), side, TRIPLE, (0, 0), v, 1e-10)
        expected = np.where(carrier_mask(TRIPLE, side, 0, 0), v, 0.0)
        assert np.allclose(vec, expected)
        assert err <= 1e-12
        assert lost == pytest.approx(0.0, abs=1e-12)

    def test_carrier_outside_interior(self):
        v = triple_samples(TRIPLE, 1)[0]
        with pytest.raises(WindowError):
            lift_delta0_leg(identity(SMALL_PAIR), LEFT, TRIPLE, (6, 0), v, 1e-10)


class TestProbesAtZero:

    @classmethod
    def setup_class(cls):
        cls.bundle = u_q(0.0, SMALL_PAIR, 1e-8)

    def test_pseudo_cocycle(self):
        rows = pseudo_cocycle_probe(0.0, TRIPLE, 3, 1e-8, bundle=self.bundle,
                                    command="cocycle-probe")
        assert [r.check for r in rows] == ["pseudo_cocycle_commutant_s",
                                           "pseudo_cocycle_commutant_t"]
        for row in rows:
            log.info(row)
            assert row.passed, row
            assert row.residual < 1e-12
            assert row.params["samples"] == 3

    def test_two_cocycle_is_measured(self):
        row = two_cocycle_residual(0.0, TRIPLE, 3, bundle=self.bundle)
        assert row.verdict == Verdicts.MEASURED
        assert row.residual < 1e-12
        assert row.params["triple_k_max"] == 4

    def test_counit_factor_rows(self):
        rows = counit_factor_rows(self.bundle, command="verify-theorem")
        assert [r.check for r in rows] == ["counit_u_tilde_left", "counit_u_left",
                                           "counit_u_tilde_right", "counit_u_right",
                                           "counit_delta0_symbolic"]
        for row in rows:
            assert row.passed, row

    def test_u_tilde_word_row(self):
        row = u_tilde_word_row(self.bundle)
        assert row.passed
        assert row.params["nwords"] == 0

    def test_counit_u_rows(self):
        rows = counit_u_rows(self.bundle, command="verify-theorem")
        assert [r.check for r in rows] == ["counit_u_built_left", "counit_u_built_right"]
        for row in rows:
            log.info(row)
            assert row.verdict == Verdicts.PASS, row
            assert row.params["words"] == list(COUNIT_U_WORDS)
            assert row.params["resolved"]

    def test_lost_mass_is_reported(self):
        row = two_cocycle_residual(0.0, TRIPLE, 2, bundle=self.bundle)
        assert row.params["lost"] < 1e-12
        assert row.residual == pytest.approx(row.params["measured"] + row.params["lost"])


class TestDensityAndNonvanishing:

    def test_density_identity(self):
        row = density_identity_rows(SMALL_PAIR, command="verify-theorem")
        assert row.check == "density_identity"
        assert row.q is None
        assert row.passed, row

    def test_norms(self):
        norms = nonvanishing_norms(0.5, 1.0, 1j, 8)
        assert set(norms) == {"omega_rho", "rho_omega", "rho_rho"}
        for value in norms.values():
            assert value > 0.1

    def test_row(self):
        row = nonvanishing_row(0.5, levels=6, n_pairs=3)
        assert row.passed
        assert row.params["min_norm"] > 0.1


class TestExtractionRows:

    def test_positive_q(self):
        rows = extraction_rows(0.3, LEG, 1e-8)
        assert [r.check for r in rows] == ["extract_j_s", "extract_j_rejects_t", "extract_j_phi_b"]
        for row in rows:
            assert row.passed, row

    def test_q_zero(self):
        rows = extraction_rows(0.0, LEG, 1e-8)
        assert len(rows) == 2


@pytest.mark.slow
class TestIntertwinerFactors:

    @classmethod
    def setup_class(cls):
        cls.bundle = u_q(0.3, TruncationWindow(10, 8, 2), 1e-6)

    def test_counit_factor_rows(self):
        for row in counit_factor_rows(self.bundle, samples=40):
            log.info(row)
            assert row.passed, row

    def test_u_tilde_word_row(self):
        row = u_tilde_word_row(self.bundle)
        assert row.passed, row
        assert row.params["nwords"] > 0


def _winding_dependent(window):
    """Diagonal operator whose entries move with the winding of the first leg"""
    _, ms = window.leg().leg_grid()
    diag = np.kron(1.0 + 0.1 * ms, np.ones(window.leg_dim))
    return SparseOperator(window, scipy.sparse.diags(diag.astype(np.complex128)), name="W")


class TestLostMass:

    def setup_method(self, method):
        leg = SMALL_PAIR.leg()
        self.TT = tensor(gen_T(leg), gen_T(leg)).evolve(name="TT")

    def test_chain_keeps_boundary_mass_out_of_the_budget(self):
        op = LegPairOperator(self.TT, TRIPLE, (0, 1))
        out, budget, lost = apply_chain([op], TRIPLE.basis_vector((3, 0), (0, 0), (1, 0)))
        assert np.count_nonzero(out) == 0
        assert budget == 0.0
        assert lost == pytest.approx(1.0)

    def test_host_levels_are_lost(self):
        x = identity(SMALL_PAIR).evolve(level_margin=3)
        lift = MultiplierLift(x, LEFT, TRIPLE, 1e-10)
        assert not lift._extractable(3, 0)
        out, lost, _ = lift(TRIPLE.basis_vector((3, 0), (3, 0), (0, 0)))
        assert np.count_nonzero(out) == 0
        assert lost == pytest.approx(1.0)
        v = TRIPLE.basis_vector((0, 0), (1, 0), (0, 0))
        out, lost, err = lift(v)
        np.testing.assert_allclose(out, v, atol=1e-12)
        assert lost == pytest.approx(0.0, abs=1e-12)
        assert err <= 1e-12

    def test_extraction_tolerance_carries_the_operator_error(self):
        x = identity(SMALL_PAIR).evolve(err=1e-6)
        lift = MultiplierLift(x, RIGHT, TRIPLE, 1e-10)
        assert lift.extract_tol == pytest.approx(1e-6 + 1e-10)
        assert lift.err == pytest.approx(1e-6)


class TestExtractionFailures:

    def setup_method(self, method):
        self.bundle = types.SimpleNamespace(u=_winding_dependent(SMALL_PAIR))

    def test_error_carries_the_deviation(self):
        with pytest.raises(NotInIdealError) as e:
            extract_tensor_coeffs(self.bundle.u, (J_LEG, J_LEG), 1e-8)
        assert e.value.tol == 1e-8
        assert e.value.deviation > 1e-8

    def test_pseudo_cocycle_rows_fail(self):
        rows = pseudo_cocycle_probe(0.2, TRIPLE, 2, 1e-8, bundle=self.bundle)
        assert [r.check for r in rows] == ["pseudo_cocycle_commutant_s",
                                           "pseudo_cocycle_commutant_t"]
        for row in rows:
            log.info(row)
            assert row.verdict == Verdicts.FAIL
            assert "error" in row.params
            assert row.residual > row.budget

    def test_two_cocycle_row_fails(self):
        row = two_cocycle_residual(0.2, TRIPLE, 2, tol=1e-8, bundle=self.bundle)
        assert row.verdict == Verdicts.FAIL
        assert "error" in row.params


@pytest.mark.slow
class TestTripleRowsAtPositiveQ:

    TOL = 1e-6

    @pytest.mark.parametrize("q", [0.2, 0.5])
    def test_pseudo_cocycle(self, q):
        bundle = u_q(q, TruncationWindow(10, 4, 2), self.TOL)
        rows = pseudo_cocycle_probe(q, TRIPLE, 2, self.TOL, bundle=bundle)
        assert len(rows) == 2
        for row in rows:
            log.info(row)
            assert "error" not in row.params
            assert row.verdict != Verdicts.MEASURED
            assert row.params["measured"] >= 0.0
            assert row.params["lost"] >= 0.0
            assert row.residual == pytest.approx(row.params["measured"] + row.params["lost"])
            assert row.budget >= 10 * self.TOL

    @pytest.mark.parametrize("q", [0.2, 0.5])
    def test_two_cocycle(self, q):
        bundle = u_q(q, TruncationWindow(10, 4, 2), self.TOL)
        row = two_cocycle_residual(q, TRIPLE, 2, tol=self.TOL, bundle=bundle)
        log.info(row)
        assert row.verdict == Verdicts.MEASURED
        assert "error" not in row.params
        assert np.isfinite(row.residual)
        assert row.residual == pytest.approx(row.params["measured"] + row.params["lost"])
