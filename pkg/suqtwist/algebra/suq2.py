"""
Generators of A in the faithful representation on l2(N x Z), word operators,
the isomorphisms phi_q onto C(SU_q(2)), relation checks, the counit and the
irreducible representations omega_t and rho_t.
"""

import logging
import math
from collections import namedtuple

import numpy as np
import scipy.sparse

from suqtwist.models.common import DeformationParameter, WindowError
from suqtwist.models.report import ResidualReport
from suqtwist.models.words import WordIndex, QuotientWord, TensorWordSum
from suqtwist.validators import validate_unit_modulus
from suqtwist.operators.core import (SparseOperator, identity, compose, scale,
                                     interior_for, interior_residual)

log = logging.getLogger(__name__)

A_RELATION_TOL = 1e-12
SUQ2_RELATION_TOL = 1e-10

IrreducibleImages = namedtuple("IrreducibleImages", "T S")
PhiImages = namedtuple("PhiImages", "a b")


def _leg(window):
    if window.tensor_order != 1:
        raise WindowError("Generators live on single-leg windows, got {w}".format(w=window))
    return window


def _shift_matrix(window, src_k, src_m, dst_k, dst_m, amplitudes):
    """Sparse matrix sending xi(src) to amplitude * xi(dst), dropping images outside the window"""
    keep = ((dst_k >= 0) & (dst_k < window.k_max) &
            (np.abs(dst_m) <= window.m_max) &
            (src_k >= 0) & (src_k < window.k_max) &
            (np.abs(src_m) <= window.m_max) & (amplitudes != 0))
    rows = window.leg_index(dst_k[keep], dst_m[keep])
    cols = window.leg_index(src_k[keep], src_m[keep])
    m = scipy.sparse.coo_matrix((amplitudes[keep].astype(np.complex128), (rows, cols)),
                                shape=(window.leg_dim, window.leg_dim))
    return m.tocsr()


def gen_T(window):
    """rho(T): xi(k, m) -> xi(k + 1, m)"""
    w = _leg(window)
    ks, ms = w.leg_grid()
    m = _shift_matrix(w, ks, ms, ks + 1, ms, np.ones(ks.size))
    return SparseOperator(w, m, reach=1, name="T")


def gen_S(window):
    """rho(S): xi(k, m) -> delta_{k,0} xi(k, m + 1)"""
    w = _leg(window)
    ks, ms = w.leg_grid()
    amps = (ks == 0).astype(float)
    m = _shift_matrix(w, ks, ms, ks, ms + 1, amps)
    return SparseOperator(w, m, reach=1, name="S")


def word_matrix(word, window):
    """Sparse single-leg matrix of a WordIndex or QuotientWord"""
    ks, ms = window.leg_grid()
    if isinstance(word, WordIndex):
        amps = (ks == word.n).astype(float)
        return _shift_matrix(window, ks, ms, ks - word.n + word.m, ms + word.j, amps)
    amps = (ks >= word.b).astype(float)
    return _shift_matrix(window, ks, ms, ks + word.a - word.b, ms, amps)


def word_op(word, window):
    """
    rho(w) for a WordIndex, a QuotientWord or a TensorWordSum.

    A WordIndex (m, j, n) maps xi(n, x) to xi(m, x + j) and kills every other
    level; a QuotientWord (a, b) maps xi(k, x) to xi(k + a - b, x) for k >= b.
    Word sums are synthesized on the window of their tensor order.
    """
    if isinstance(word, TensorWordSum):
        return word_sum_op(word, window)
    w = _leg(window)
    return SparseOperator(w, word_matrix(word, w), reach=word.reach, name=str(word))


def word_sum_op(wsum, window):
    w = window.with_order(wsum.order)
    leg = w.leg()
    cache = {}

    def _m(word):
        if word not in cache:
            cache[word] = word_matrix(word, leg)
        return cache[word]

    acc = scipy.sparse.csr_matrix((w.dim, w.dim), dtype=np.complex128)
    for coeff, legs in wsum:
        term = _m(legs[0])
        for word in legs[1:]:
            term = scipy.sparse.kron(term, _m(word), format="csr")
        acc = acc + coeff * term
    return SparseOperator(w, acc.tocsr(), reach=wsum.max_reach())


def phi_a(q, window):
    """rho(phi_q(a)): xi(k, m) -> sqrt(1 - q^(2k)) xi(k - 1, m)"""
    q = DeformationParameter(q).q
    w = _leg(window)
    ks, ms = w.leg_grid()
    amps = np.sqrt(1.0 - np.power(q, 2.0 * ks))
    m = _shift_matrix(w, ks, ms, ks - 1, ms, amps)
    return SparseOperator(w, m, reach=1, name="a")


def phi_b(q, window):
    """rho(phi_q(b)): xi(k, m) -> q^k xi(k, m + 1)"""
    q = DeformationParameter(q).q
    w = _leg(window)
    ks, ms = w.leg_grid()
    amps = np.power(q, ks.astype(float))
    m = _shift_matrix(w, ks, ms, ks, ms + 1, amps)
    return SparseOperator(w, m, reach=1, name="b")


def _require_positive_q(q):
    q = DeformationParameter(q).q
    if q == 0:
        raise ValueError("Series form of phi_q needs q in (0, 1)")
    return q


def phi_a_series(q, window, tol):
    """
    phi_q(a) = sum_n (sqrt(1 - q^(2(n+1))) - sqrt(1 - q^(2n))) T^n T*^(n+1).

    The n-th coefficient is at most q^(2n) sqrt(1 - q^2), which gives the
    geometric tail bound used for truncation.
    """
    q = _require_positive_q(q)
    w = _leg(window)
    scale_ = math.sqrt(1 - q * q) / (1 - q * q)
    n_max = 0
    while scale_ * q ** (2 * (n_max + 1)) > tol and n_max < w.k_max:
        n_max += 1
    tail = 0.0 if n_max >= w.k_max else scale_ * q ** (2 * (n_max + 1))
    terms = []
    for n in range(n_max + 1):
        c = math.sqrt(1 - q ** (2 * (n + 1))) - math.sqrt(1 - q ** (2 * n))
        terms.append((c, (QuotientWord(n, n + 1),)))
    op = word_sum_op(TensorWordSum(terms), w)
    log.debug("phi_a series q=%.3g terms=%d tail=%.3g", q, n_max + 1, tail)
    return op.evolve(reach=1, err=tail, meta=dict(series_terms=n_max + 1), name="a_series")


def phi_b_series(q, window, tol):
    """phi_q(b) = sum_n q^n T^n S T*^n; the tail after N has norm q^(N+1)"""
    q = _require_positive_q(q)
    w = _leg(window)
    n_max = 0
    while q ** (n_max + 1) > tol and n_max < w.k_max:
        n_max += 1
    tail = 0.0 if n_max >= w.k_max else q ** (n_max + 1)
    terms = [(q ** n, (WordIndex(n, 1, n),)) for n in range(n_max + 1)]
    op = word_sum_op(TensorWordSum(terms), w)
    log.debug("phi_b series q=%.3g terms=%d tail=%.3g", q, n_max + 1, tail)
    return op.evolve(reach=1, err=tail, meta=dict(series_terms=n_max + 1), name="b_series")


def relation_row(check, command, q, op, budget, anchor, samples=None, **params):
    """Row for max ||op v|| over the checking interior of op (level floor 0)"""
    interior = interior_for(op)
    residual = interior_residual(op, interior, samples=samples)
    params.update(interior_order=interior.order)
    return ResidualReport(check, command, q, residual, budget, anchor=anchor,
                          params=params)


def check_A_relations(window, command=None):
    """T*T = I, S*S = SS* and TT* + S*S = I on interior vectors"""
    w = _leg(window)
    T, S = gen_T(w), gen_S(w)
    I = identity(w)
    rels = [("a_rel_isometry", compose(T.H, T) - I, "T*T = I"),
            ("a_rel_normal", compose(S.H, S) - compose(S, S.H), "S*S = SS*"),
            ("a_rel_partition", compose(T, T.H) + compose(S.H, S) - I, "TT* + S*S = I")]
    return [relation_row(check, command, None, op, A_RELATION_TOL, anchor)
            for check, op, anchor in rels]


def check_suq2_relations(q, window, command=None):
    """The five defining relations of C(SU_q(2)) for a = phi_q(a), b = phi_q(b)"""
    w = _leg(window)
    a, b = phi_a(q, w), phi_b(q, w)
    I = identity(w)
    rels = [("suq2_rel_unit_left", compose(a.H, a) + compose(b.H, b) - I, "a*a + b*b = I"),
            ("suq2_rel_ab", compose(a, b) - scale(compose(b, a), q), "ab = qba"),
            ("suq2_rel_unit_right", compose(a, a.H) + scale(compose(b.H, b), q * q) - I, "aa* + q^2 b*b = I"),
            ("suq2_rel_ab_star", compose(a, b.H) - scale(compose(b.H, a), q), "ab* = qb*a"),
            ("suq2_rel_b_normal", compose(b.H, b) - compose(b, b.H), "b*b = bb*")]
    return [relation_row(check, command, q, op, SUQ2_RELATION_TOL, anchor)
            for check, op, anchor in rels]


def check_phi_series(q, window, tol, command=None):
    """Series and direct constructions of phi_q(a), phi_q(b) agree within 2 tol"""
    w = _leg(window)
    rows = []
    for check, series, direct in (("phi_a_series", phi_a_series(q, w, tol), phi_a(q, w)),
                                  ("phi_b_series", phi_b_series(q, w, tol), phi_b(q, w))):
        rows.append(relation_row(check, command, q, series - direct, 2 * tol,
                                 "phi_q series vs representation list",
                                 series_terms=series.meta["series_terms"]))
    return rows


def counit_char(word):
    """
    epsilon(w): 0 on every ideal word, 1 on every quotient word. One-leg word
    sums are evaluated linearly.
    """
    if isinstance(word, TensorWordSum):
        if word.order not in (None, 1):
            raise ValueError("Counit acts on single-leg word sums")
        return sum(c * legs[0].counit for c, legs in word)
    return word.counit


class Character:
    """
    One-dimensional representation omega_t: T -> t, S -> 0.

    omega_1 is the counit.
    """

    def __init__(self, t):
        self._t = validate_unit_modulus(t)

    def __repr__(self):
        return "<{k} t:{t} >".format(k=self.__class__.__name__, t=self._t)

    @property
    def t(self):
        return self._t

    def __call__(self, word):
        if isinstance(word, str):
            word = TensorWordSum.from_generators(word)
        if isinstance(word, TensorWordSum):
            return sum(c * self(legs[0]) for c, legs in word)
        if isinstance(word, WordIndex):
            return 0j
        return self._t ** word.a * self._t.conjugate() ** word.b

    def phi_images(self, q):
        """omega_t(phi_q(a)) = conj(t), omega_t(phi_q(b)) = 0"""
        DeformationParameter(q)
        return PhiImages(self._t.conjugate(), 0j)


def rep_omega(t):
    return Character(t)


def _levels_matrix(levels, rows, cols, amps):
    m = scipy.sparse.coo_matrix((np.asarray(amps, dtype=np.complex128), (rows, cols)),
                                shape=(levels, levels))
    return m.tocsr()


def rep_rho_t(t, levels):
    """
    rho_t on l2(N) truncated to ``levels``: rho_t(T) xi(n) = xi(n + 1),
    rho_t(S) xi(n) = delta_{n,0} t xi(0).
    """
    t = validate_unit_modulus(t)
    if levels < 2:
        raise WindowError("rho_t needs at least 2 levels, got {n}".format(n=levels))
    n = np.arange(levels - 1)
    T = _levels_matrix(levels, n + 1, n, np.ones(n.size))
    S = _levels_matrix(levels, [0], [0], [t])
    return IrreducibleImages(T, S)


def rho_t_phi(t, q, levels):
    """
    rho_t(phi_q(a)) xi(n) = sqrt(1 - q^(2n)) xi(n - 1) and
    rho_t(phi_q(b)) xi(n) = t q^n xi(n).
    """
    t = validate_unit_modulus(t)
    q = DeformationParameter(q).q
    n = np.arange(levels)
    a = _levels_matrix(levels, n[1:] - 1, n[1:], np.sqrt(1 - np.power(q, 2.0 * n[1:])))
    b = _levels_matrix(levels, n, n, t * np.power(q, n.astype(float)))
    return PhiImages(a, b)


def continuity_bound_phi_b(q1, q2, window):
    """max_k |q2^k - q1^k|, the entrywise increment of phi_q(b) on the window"""
    ks = np.arange(window.k_max)
    return float(np.max(np.abs(np.power(q2, ks) - np.power(q1, ks))))


def phi_b_continuity_rows(grid, window, command=None, samples=None):
    """
    ||phi_q1(b) - phi_q0(b)|| per grid step against the exact entrywise
    bound max_k |q1^k - q0^k|.
    """
    grid = [DeformationParameter(q).q for q in grid]
    if grid != sorted(grid):
        raise ValueError("q grid must be sorted, got {g}".format(g=grid))
    w = _leg(window)
    rows = []
    for q0, q1 in zip(grid[:-1], grid[1:]):
        op = phi_b(q1, w) - phi_b(q0, w)
        bound = continuity_bound_phi_b(q0, q1, w) + A_RELATION_TOL
        rows.append(relation_row("continuity_phi_b", command, q1, op, bound,
                                 "q -> phi_q(b) is norm continuous", samples=samples,
                                 step=round(q1 - q0, 12)))
    return rows
