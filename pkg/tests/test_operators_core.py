import logging

import numpy as np
import pytest
import scipy.sparse

from base_utils import max_abs_diff
from suqtwist.models.common import (TruncationWindow, WindowError,
                                    WindowMismatchError, BudgetExceededError)
from suqtwist.operators.core import (SparseOperator, InteriorSet, identity,
                                     zero, apply, compose, compose_all, add,
                                     scale, adjoint, tensor, tensor_all,
                                     linear_combination, from_entries,
                                     from_matrix, locality_margin,
                                     geometric_margin, geometric_tail,
                                     interior_for, interior_residual,
                                     norm_estimate, power_count,
                                     power_projection, binomial_coefficients,
                                     series_length, inv_sqrt)
from suqtwist.operators.linops import Kron, Power, PolynomialSeries
from suqtwist.algebra.suq2 import gen_T, gen_S

log = logging.getLogger(__name__)


def _diag(window, values):
    return SparseOperator(window, scipy.sparse.diags(np.asarray(values, dtype=complex)).tocsr())


class TestSparseOperator:

    def setup_method(self, method):
        self.leg = TruncationWindow(6, 4, 1)
        self.T = gen_T(self.leg)
        self.S = gen_S(self.leg)

    def test_shape_mismatch(self):
        with pytest.raises(WindowMismatchError):
            SparseOperator(self.leg, scipy.sparse.identity(10, format="csr"))

    def test_window_mismatch(self):
        other = gen_T(TruncationWindow(6, 5, 1))
        with pytest.raises(WindowMismatchError):
            compose(self.T, other)
        with pytest.raises(WindowMismatchError):
            add(self.T, other)

    def test_compose_bookkeeping(self):
        a = self.T.evolve(margin=2, err=0.1)
        b = self.S.evolve(margin=3, err=0.2)
        ab = compose(a, b)
        assert ab.reach == 2
        assert ab.margin == 3
        assert ab.order == 5
        assert ab.err == pytest.approx(0.1 + 0.2 + 0.02)
        assert (a @ b).reach == 2

    def test_level_margin_propagates(self):
        a = self.T.evolve(level_margin=3)
        b = self.S.evolve(level_margin=1)
        assert compose(a, b).level_margin == 3
        assert add(b, a).level_margin == 3
        assert tensor(a, b).level_margin == 3
        assert adjoint(a).level_margin == 3
        assert self.T.level_margin == 0

    def test_add_and_scale(self):
        a = self.T.evolve(err=0.1)
        b = self.S.evolve(err=0.2)
        assert add(a, b).err == pytest.approx(0.3)
        assert add(a, b).reach == 1
        assert scale(a, -2.0).err == pytest.approx(0.2)
        assert (a - b).err == pytest.approx(0.3)
        assert max_abs_diff((a - a).matrix, zero(self.leg).matrix) == 0.0
        assert max_abs_diff((-a).matrix, (a * -1.0).matrix) == 0.0
        c = linear_combination([(2.0, a), (1j, b)])
        assert max_abs_diff(c.matrix, 2.0 * a.matrix + 1j * b.matrix) == 0.0

    def test_adjoint(self):
        assert self.T.H.name == "T*"
        assert max_abs_diff(adjoint(self.T).matrix, self.T.matrix.conj().T) == 0.0
        # T*T = I on the window, apart from the top level
        tt = compose(self.T.H, self.T)
        interior = InteriorSet(self.leg, 1, floor=0)
        assert interior_residual(tt - identity(self.leg), interior) == 0.0

    def test_apply(self):
        v = self.leg.basis_vector((2, 1))
        out = apply(self.T, v)
        assert out[self.leg.index((3, 1))] == 1.0
        block = np.column_stack([v, self.leg.basis_vector((0, 0))])
        assert apply(self.T, block).shape == (self.leg.dim, 2)
        assert np.allclose(self.T.dot(v), out)
        with pytest.raises(WindowMismatchError):
            apply(self.T, np.ones(3))

    def test_lazy_and_materialized_agree(self):
        w2 = self.leg.with_order(2)
        lazy = compose(tensor(self.T, self.S), identity(w2))
        assert not lazy.is_materialized
        with pytest.raises(WindowError):
            lazy.to_csr()
        eager = tensor(self.T, self.S)
        v = np.random.default_rng(0).standard_normal(w2.dim)
        assert np.allclose(apply(lazy, v), apply(eager, v))
        one_leg = SparseOperator(self.leg, self.T.as_linear_operator())
        assert max_abs_diff(one_leg.materialize().matrix, self.T.matrix) == 0.0

    def test_tensor(self):
        ts = tensor(self.T, self.S)
        assert ts.window == self.leg.with_order(2)
        assert ts.name == "T(x)S"
        assert tensor_all(self.T, self.T, self.T).window.tensor_order == 3
        with pytest.raises(WindowMismatchError):
            tensor(self.T, gen_T(TruncationWindow(7, 4, 1)))

    def test_entries(self):
        e = gen_S(self.leg).entries()
        assert len(e) == 8
        assert e[(((0, 1),), ((0, 0),))] == 1.0

    def test_from_entries_drops_outside(self):
        entries = {(((0, 0),), ((1, 0),)): 2.0,
                   (((9, 0),), ((0, 0),)): 5.0}
        op = from_entries(self.leg, entries, reach=1)
        assert op.matrix.nnz == 1
        assert op.matrix[self.leg.index((0, 0)), self.leg.index((1, 0))] == 2.0

    def test_compose_all(self):
        op = compose_all(self.T, self.T, self.T.H)
        assert op.reach == 3
        assert from_matrix(self.leg, op.matrix, reach=1).reach == 1


class TestLocalityMargin:

    def test_values(self):
        assert locality_margin(0.0, 1e-8) == 0
        assert locality_margin(0.5, 1e-8) == 5
        assert locality_margin(0.7, 1e-8) == 7
        assert locality_margin(0.9, 1e-8) == 13
        assert locality_margin(0.01, 1e-8) == 2

    def test_monotone(self):
        margins = [locality_margin(q, 1e-8) for q in np.linspace(0.05, 0.95, 19)]
        assert margins == sorted(margins)



class TestGeometricMargin:

    def test_values(self):
        assert geometric_margin(0.0, 1e-8) == 0
        assert geometric_margin(0.01, 1e-8) == 4
        assert geometric_margin(0.2, 1e-8) == 11
        assert geometric_margin(0.5, 1e-8) == 24
        assert geometric_margin(0.9, 1e-8) == 153

    def test_exceeds_locality_margin(self):
        for q in np.linspace(0.05, 0.95, 19):
            assert geometric_margin(q, 1e-8) >= locality_margin(q, 1e-8)

    def test_tail(self):
        assert geometric_tail(0.0, 5) == 0.0
        assert geometric_tail(0.5, 3) == pytest.approx(0.5)
        assert geometric_tail(0.5, -1) == pytest.approx(4.0)
        assert geometric_tail(0.3, 12) < geometric_tail(0.3, 11)

class TestInteriorSet:

    def setup_method(self, method):
        self.w = TruncationWindow(8, 6, 2)

    def test_symmetric(self):
        s = InteriorSet(self.w, 2)
        assert s.floor == 2
        assert list(s.levels) == [2, 3, 4, 5]
        assert list(s.windings) == list(range(-4, 5))
        assert s.size == (4 * 9) ** 2
        assert len(s.indices()) == s.size
        log.info(s)

    def test_floor(self):
        s = InteriorSet(self.w, 2, floor=0)
        assert list(s.levels) == list(range(6))
        assert s.contains((0, 4), (5, -4))
        assert not s.contains((6, 0), (0, 0))
        assert not s.contains((0, 5), (0, 0))
        assert all(s.contains(*labels) for labels in s.labels()[:20])

    def test_level_order(self):
        s = InteriorSet(self.w, 2, floor=0, level_order=3)
        assert s.level_order == 3
        assert list(s.levels) == [0, 1, 2]
        assert s.top_level == 2
        assert list(s.windings) == list(range(-4, 5))
        assert not s.contains((3, 0), (0, 0))
        with pytest.raises(WindowError):
            InteriorSet(self.w, 2, floor=0, level_order=6)

    def test_empty(self):
        with pytest.raises(WindowError):
            InteriorSet(self.w, 7)
        with pytest.raises(WindowError):
            InteriorSet(self.w, 4)

    def test_mask(self):
        s = InteriorSet(self.w, 3, floor=0)
        assert s.mask().sum() == s.size

    def test_thinned(self):
        s = InteriorSet(self.w, 1)
        idx = s.thinned_indices(25)
        assert 0 < idx.size <= 25
        assert set(idx) <= set(s.indices())
        assert s.thinned_indices().size == s.size

    def test_blocks(self):
        s = InteriorSet(self.w, 2)
        block = s.basis_block(10)
        assert block.shape == (self.w.dim, 10)
        np.testing.assert_allclose(np.linalg.norm(block, axis=0), 1.0)
        r = s.random_block(3, np.random.default_rng(1))
        np.testing.assert_allclose(np.linalg.norm(r, axis=0), 1.0)
        assert np.all(r[~s.mask()] == 0)


class TestInteriorResidual:

    def setup_method(self, method):
        self.leg = TruncationWindow(6, 4, 1)

    def test_identity_and_zero(self):
        s = InteriorSet(self.leg, 0)
        assert interior_residual(identity(self.leg), s) == pytest.approx(1.0)
        assert interior_residual(zero(self.leg), s) == 0.0

    def test_window_mismatch(self):
        s = InteriorSet(TruncationWindow(6, 5, 1), 0)
        with pytest.raises(WindowMismatchError):
            interior_residual(identity(self.leg), s)

    def test_interior_for(self):
        op = gen_T(self.leg).evolve(margin=2)
        s = interior_for(op)
        assert s.order == 3
        assert s.floor == 0
        s = interior_for(op.evolve(level_margin=2))
        assert s.level_order == 2
        assert s.top_level == 0

    def test_tensor_samples(self):
        w2 = self.leg.with_order(2)
        op = scale(identity(w2), 3.0)
        assert interior_residual(op, InteriorSet(w2, 1), samples=5) == pytest.approx(3.0)


class TestNormEstimate:

    def test_scaled_identity(self):
        leg = TruncationWindow(6, 4, 1)
        est = norm_estimate(scale(identity(leg), 2.0))
        assert est.value == pytest.approx(2.0)

    def test_lower_bound(self):
        leg = TruncationWindow(6, 4, 1)
        d = _diag(leg, np.linspace(0.1, 0.9, leg.dim))
        est = norm_estimate(d, iters=200)
        assert est.value <= 0.9 + 1e-12
        assert est.value > 0.85

    def test_restricted_to_interior(self):
        leg = TruncationWindow(6, 4, 1)
        est = norm_estimate(gen_S(leg), interior=InteriorSet(leg, 1, floor=1))
        assert est.value == 0.0


class TestPowerProjection:

    def setup_method(self, method):
        self.leg = TruncationWindow(4, 4, 1)
        n = self.leg.dim
        self.values = np.where(np.arange(n) < n // 2, 1.0, 0.2)
        self.x = _diag(self.leg, self.values)

    def test_power_count(self):
        assert power_count(0.0, 1e-8) == 1
        assert power_count(0.25, 1e-8) == 14

    def test_projection(self):
        e = power_projection(self.x, 0.25, 1e-8)
        assert e.meta["power"] == 14
        assert e.err == pytest.approx(0.25 ** 14)
        d = e.matrix.diagonal()
        assert max(abs(d - (self.values == 1.0))) <= e.err

    def test_lazy_projection(self):
        w2 = self.leg.with_order(2)
        x = tensor(self.x, identity(self.leg))
        e = power_projection(x, 0.25, 1e-8)
        assert not e.is_materialized
        v = w2.basis_vector((0, -4), (1, 0))
        assert np.allclose(apply(e, v), v)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            power_projection(self.x, 0.25, 1e-8, power_budget=5)

    def test_invalid(self):
        with pytest.raises(ValueError):
            power_projection(self.x, 1.0, 1e-8)
        with pytest.raises(ValueError):
            power_projection(self.x, 0.25, 0.0)


class TestInvSqrt:

    def setup_method(self, method):
        self.leg = TruncationWindow(4, 4, 1)

    def test_binomial_coefficients(self):
        np.testing.assert_allclose(binomial_coefficients(4), [1.0, 0.5, 0.375, 0.3125])

    def test_series_length(self):
        assert series_length(1.0, 1e-8) == (0, 0.0)
        n, tail = series_length(0.5, 1e-8)
        assert tail <= 1e-8
        with pytest.raises(BudgetExceededError):
            series_length(0.01, 1e-12, series_budget=10)

    def test_inverse_square_root(self):
        values = np.linspace(0.3, 1.0, self.leg.dim)
        y = _diag(self.leg, values)
        r = inv_sqrt(y, 0.3, 1e-10)
        assert r.meta["series_terms"] > 1
        d = r.matrix.diagonal()
        assert max(abs(d - values ** -0.5)) <= r.err + 1e-12

    def test_exact_identity(self):
        r = inv_sqrt(identity(self.leg), 1.0, 1e-8)
        assert r.err == 0.0
        assert max_abs_diff(r.matrix, identity(self.leg).matrix) == 0.0

    def test_lazy_defect(self):
        w2 = self.leg.with_order(2)
        z = tensor(scale(identity(self.leg), 0.5), identity(self.leg))
        y = identity(w2) - z
        r = inv_sqrt(y, 0.5, 1e-10, defect=z)
        assert not r.is_materialized
        v = w2.basis_vector((1, 0), (2, 0))
        assert np.allclose(apply(r, v), np.sqrt(2.0) * v, atol=1e-9)

    def test_invalid_lower(self):
        with pytest.raises(ValueError):
            inv_sqrt(identity(self.leg), 0.0, 1e-8)


class TestLinops:

    def test_kron(self):
        rng = np.random.default_rng(3)
        a = scipy.sparse.random(5, 5, density=0.4, random_state=1, format="csr")
        b = scipy.sparse.random(4, 4, density=0.5, random_state=2, format="csr")
        k = Kron(a, b)
        v = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        expected = scipy.sparse.kron(a, b) @ v
        assert np.allclose(k.matvec(v), expected)
        assert np.allclose(k.H.matvec(v), scipy.sparse.kron(a, b).conj().T @ v)
        assert np.allclose(k.matmat(np.column_stack([v, v])), np.column_stack([expected, expected]))

    def test_power(self):
        a = scipy.sparse.random(6, 6, density=0.5, random_state=4, format="csr")
        v = np.arange(6, dtype=float)
        assert np.allclose(Power(a, 3).matvec(v), a @ (a @ (a @ v)))
        assert np.allclose(Power(a, 0).matvec(v), v)

    def test_polynomial_series(self):
        a = scipy.sparse.random(6, 6, density=0.5, random_state=5, format="csr")
        v = np.arange(6, dtype=float)
        p = PolynomialSeries(a, [1.0, 2.0, 3.0])
        assert np.allclose(p.matvec(v), v + 2 * (a @ v) + 3 * (a @ (a @ v)))
