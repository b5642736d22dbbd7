"""
Sparse complex operators on truncated copies of l2(N x Z) and their tensor
powers, with the functional calculus needed by the comultiplication builders.

All infinite operators are compressed to a TruncationWindow. A compressed
operator is exact on basis vectors far enough from the window boundary; the
InteriorSet of an operator is derived from its shift ``reach`` (exact) and its
locality ``margin`` (the extra room needed by functional-calculus outputs whose
entries decay with distance instead of vanishing).
"""

import functools
import logging
import math
from collections import namedtuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from suqtwist.models.common import (WindowError, WindowMismatchError,
                                    BudgetExceededError)
from suqtwist.operators.linops import (Kron, Power, PolynomialSeries,
                                       to_linear_operator)

log = logging.getLogger(__name__)

NormEstimate = namedtuple("NormEstimate", "value iterations")

# number of interior columns pushed through a lazy operator at once
_BLOCK_WIDTH = 32


def _is_sparse(x):
    return scipy.sparse.issparse(x)


def _merge_meta(*ops):
    d = {}
    for op in ops:
        d.update(op.meta)
    return d


class SparseOperator:
    """
    Complex operator on a window, held either as a csr matrix of its nonzero
    entries or as a lazy ``LinearOperator`` expression tree.

    :param window: TruncationWindow the operator acts on
    :param matrix: scipy sparse matrix or LinearOperator of shape (dim, dim)
    :param reach: maximal level/winding shift of a single basis vector
    :param margin: extra locality margin of functional-calculus outputs
    :param err: analytic operator-norm bound of the construction on the interior
    :param level_margin: top levels of the window that only serve as host room
        for truncation tails and are excluded from the interior
    :param meta: construction record (power p, series length, ...)
    """

    def __init__(self, window, matrix, reach=0, margin=0, err=0.0, meta=None,
                 name=None, level_margin=0):
        if matrix.shape != (window.dim, window.dim):
            raise WindowMismatchError(
                "Matrix shape {s} does not fit {w}".format(s=matrix.shape, w=window))
        if _is_sparse(matrix):
            matrix = scipy.sparse.csr_matrix(matrix, dtype=np.complex128)
        self._window = window
        self._matrix = matrix
        self._reach = int(reach)
        self._margin = int(margin)
        self._err = float(err)
        self._meta = dict(meta or {})
        self._name = name
        self._level_margin = int(level_margin)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, n=self.name or "op",
                  w=self.window, r=self.reach, m=self.margin,
                  s="sparse" if self.is_materialized else "lazy", e=self.err)
        return "<{k} {n} {w} reach:{r} margin:{m} {s} err:{e:.2e} >".format(**_d)

    @property
    def window(self):
        return self._window

    @property
    def matrix(self):
        return self._matrix

    @property
    def reach(self):
        return self._reach

    @property
    def margin(self):
        return self._margin

    @property
    def err(self):
        return self._err

    @property
    def level_margin(self):
        return self._level_margin

    @property
    def meta(self):
        return dict(self._meta)

    @property
    def name(self):
        return self._name

    @property
    def is_materialized(self):
        return _is_sparse(self._matrix)

    @property
    def order(self):
        """Interior order needed to check this operator"""
        return self._reach + self._margin

    def evolve(self, **kwargs):
        """Copy with some fields replaced"""
        d = dict(window=self._window, matrix=self._matrix, reach=self._reach,
                 margin=self._margin, err=self._err, meta=self._meta,
                 name=self._name, level_margin=self._level_margin)
        d.update(kwargs)
        return SparseOperator(**d)

    def as_linear_operator(self):
        return to_linear_operator(self._matrix)

    def to_csr(self):
        """
        Explicit entries. Lazy expressions are materialized column by column,
        which is only allowed on single-leg windows.
        """
        if self.is_materialized:
            return self._matrix
        if self._window.tensor_order != 1:
            raise WindowError(
                "Refusing to materialize a lazy operator on {w}".format(w=self._window))
        dense = self._matrix.matmat(np.eye(self._window.dim, dtype=np.complex128))
        return scipy.sparse.csr_matrix(dense)

    def materialize(self):
        return self.evolve(matrix=self.to_csr())

    def entries(self):
        """{(row labels, col labels): amplitude} of the nonzero entries"""
        coo = self.to_csr().tocoo()
        w = self._window
        return {(w.label(r), w.label(c)): v
                for r, c, v in zip(coo.row, coo.col, coo.data) if v != 0}

    def dot(self, v):
        return apply(self, v)

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return compose(self, other)
        return apply(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __rmul__(self, c):
        return scale(self, c)

    def __mul__(self, c):
        return scale(self, c)

    @property
    def H(self):
        return adjoint(self)


def _check_same_window(a, b):
    if a.window != b.window:
        raise WindowMismatchError(
            "Operators live on different windows {a} and {b}".format(a=a.window, b=b.window))


def from_matrix(window, matrix, reach, name=None, **kwargs):
    return SparseOperator(window, matrix, reach=reach, name=name, **kwargs)


def from_entries(window, entries, reach, name=None):
    """
    Build an operator from {(row labels, col labels): amplitude}; entries
    with a label outside the window are dropped (compression).
    """
    rows, cols, data = [], [], []
    for (r, c), v in entries.items():
        if all(window.contains(*x) for x in r) and all(window.contains(*x) for x in c):
            rows.append(window.index(*r))
            cols.append(window.index(*c))
            data.append(v)
    m = scipy.sparse.coo_matrix((np.asarray(data, dtype=np.complex128), (rows, cols)),
                                shape=(window.dim, window.dim))
    return SparseOperator(window, m.tocsr(), reach=reach, name=name)


def identity(window):
    return SparseOperator(window, scipy.sparse.identity(window.dim, dtype=np.complex128, format="csr"),
                          reach=0, name="I")


def zero(window):
    return SparseOperator(window, scipy.sparse.csr_matrix((window.dim, window.dim), dtype=np.complex128),
                          reach=0, name="0")


def apply(op, v):
    """op . v; lazy trees act right to left by repeated sparse actions"""
    v = np.asarray(v)
    if v.shape[0] != op.window.dim:
        raise WindowMismatchError(
            "Vector of length {n} does not live on {w}".format(n=v.shape[0], w=op.window))
    if op.is_materialized:
        return op.matrix @ v
    if v.ndim == 1:
        return op.matrix.matvec(v)
    return op.matrix.matmat(v)


def compose(a, b):
    """a . b"""
    _check_same_window(a, b)
    if a.is_materialized and b.is_materialized and a.window.tensor_order == 1:
        matrix = (a.matrix @ b.matrix).tocsr()
    else:
        matrix = a.as_linear_operator() @ b.as_linear_operator()
    return SparseOperator(a.window, matrix,
                          reach=a.reach + b.reach,
                          margin=max(a.margin, b.margin),
                          err=a.err + b.err + a.err * b.err,
                          meta=_merge_meta(a, b),
                          level_margin=max(a.level_margin, b.level_margin))


def compose_all(*ops):
    return functools.reduce(compose, ops)


def add(a, b):
    _check_same_window(a, b)
    if a.is_materialized and b.is_materialized:
        matrix = (a.matrix + b.matrix).tocsr()
    else:
        matrix = a.as_linear_operator() + b.as_linear_operator()
    return SparseOperator(a.window, matrix,
                          reach=max(a.reach, b.reach),
                          margin=max(a.margin, b.margin),
                          err=a.err + b.err,
                          meta=_merge_meta(a, b),
                          level_margin=max(a.level_margin, b.level_margin))


def scale(a, c):
    matrix = c * a.matrix if a.is_materialized else c * a.as_linear_operator()
    return a.evolve(matrix=matrix, err=abs(c) * a.err, name=None)


def linear_combination(terms):
    """sum_i c_i op_i from [(c_i, op_i)]"""
    return functools.reduce(add, [scale(op, c) for c, op in terms])


def adjoint(a):
    matrix = a.matrix.conj().T.tocsr() if a.is_materialized else a.matrix.H
    name = None if a.name is None else a.name + "*"
    return a.evolve(matrix=matrix, name=name)


def tensor(a, b):
    """a (x) b on the window of tensor order a.order + b.order"""
    if not a.window.is_compatible(b.window):
        raise WindowMismatchError(
            "Cannot tensor {a} with {b}".format(a=a.window, b=b.window))
    w = a.window.with_order(a.window.tensor_order + b.window.tensor_order)
    if a.is_materialized and b.is_materialized:
        matrix = scipy.sparse.kron(a.matrix, b.matrix, format="csr")
    else:
        matrix = Kron(a.matrix, b.matrix)
    name = None if a.name is None or b.name is None else "{a}(x){b}".format(a=a.name, b=b.name)
    return SparseOperator(w, matrix,
                          reach=max(a.reach, b.reach),
                          margin=max(a.margin, b.margin),
                          err=a.err + b.err + a.err * b.err,
                          meta=_merge_meta(a, b),
                          name=name,
                          level_margin=max(a.level_margin, b.level_margin))


def tensor_all(*ops):
    return functools.reduce(tensor, ops)


def locality_margin(q, tol, slack=10.0):
    """
    Smallest r >= 1 with q^(r^2) <= slack * tol, 0 at q = 0.

    Entries of the spectral projections and inverse square roots between
    basis vectors r levels apart are bounded by q^(r^2) up to constants,
    because every level climb picks up a factor q^level.
    """
    if q == 0:
        return 0
    r = math.sqrt(math.log(slack * tol) / math.log(q))
    return max(1, int(math.ceil(r - 1e-12)))


def geometric_margin(q, tol, slack=10.0):
    """
    Smallest r >= 1 with q^r <= slack * tol, 0 at q = 0.

    Truncation tails that climb one level per power of q (the adjoint of an
    intertwiner summed over powers of Delta_q(T), say) only decay
    geometrically in the distance to the top of the window.
    """
    if q == 0:
        return 0
    r = math.log(slack * tol) / math.log(q)
    return max(1, int(math.ceil(r - 1e-12)))


def geometric_tail(q, distance):
    """q^d / (1 - q)^2, the summed geometric tail d levels below the window top"""
    if q == 0:
        return 0.0
    return q ** max(int(distance), 0) / (1.0 - q) ** 2


class InteriorSet:
    """
    Basis tuples whose images under an operator of the given order stay
    inside the window: floor <= k < k_max - order - level_order and
    |m| <= m_max - order in every leg. Without a floor the set is symmetric
    (floor = order). ``level_order`` reserves extra top levels only.
    """

    def __init__(self, window, order, floor=None, level_order=0):
        order = int(order)
        floor = order if floor is None else int(floor)
        level_order = int(level_order)
        self._window = window
        self._order = order
        self._floor = floor
        self._level_order = level_order
        self._levels = np.arange(floor, window.k_max - order - level_order)
        self._windings = np.arange(-(window.m_max - order), window.m_max - order + 1)
        if self._levels.size == 0 or self._windings.size == 0:
            raise WindowError(
                "Empty interior of order {o} (floor {f}) in {w}".format(o=order, f=floor, w=window))

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, o=self._order, f=self._floor,
                  l=self._level_order, w=self._window, n=self.size)
        return "<{k} order:{o} floor:{f} level_order:{l} {w} size:{n} >".format(**_d)

    @property
    def window(self):
        return self._window

    @property
    def order(self):
        return self._order

    @property
    def floor(self):
        return self._floor

    @property
    def level_order(self):
        return self._level_order

    @property
    def top_level(self):
        """Highest interior level"""
        return int(self._levels[-1])

    @property
    def levels(self):
        return self._levels

    @property
    def windings(self):
        return self._windings

    @property
    def size(self):
        return len(self.leg_indices()) ** self._window.tensor_order

    def leg_indices(self):
        ks, ms = np.meshgrid(self._levels, self._windings, indexing="ij")
        return np.sort(self._window.leg_index(ks, ms).ravel())

    def indices(self):
        legs = self.leg_indices()
        n = self._window.tensor_order
        grids = np.meshgrid(*([legs] * n), indexing="ij")
        return np.ravel_multi_index([g.ravel() for g in grids], self._window.leg_shape)

    def labels(self):
        return [self._window.label(i) for i in self.indices()]

    def mask(self):
        m = np.zeros(self._window.dim, dtype=bool)
        m[self.indices()] = True
        return m

    def contains(self, *labels):
        return all(self._floor <= k < self._window.k_max - self._order - self._level_order and
                   abs(m) <= self._window.m_max - self._order for k, m in labels)

    def thinned_indices(self, limit=None):
        """Interior indices, evenly thinned to at most ``limit``"""
        idx = self.indices()
        if limit is None or idx.size <= limit:
            return idx
        picks = np.unique(np.linspace(0, idx.size - 1, int(limit)).round().astype(int))
        return idx[picks]

    def basis_block(self, limit=None):
        """Dense (dim, n) block of interior basis vectors"""
        idx = self.thinned_indices(limit)
        block = np.zeros((self._window.dim, idx.size), dtype=np.complex128)
        block[idx, np.arange(idx.size)] = 1.0
        return block

    def random_block(self, n, rng):
        """n seeded random unit vectors supported on the interior"""
        idx = self.indices()
        block = np.zeros((self._window.dim, n), dtype=np.complex128)
        z = rng.standard_normal((idx.size, n)) + 1j * rng.standard_normal((idx.size, n))
        block[idx, :] = z / np.linalg.norm(z, axis=0)
        return block


def interior_for(op, floor=0):
    """Checking interior of an operator, from its reach, locality and level margins"""
    return InteriorSet(op.window, op.order, floor=floor, level_order=op.level_margin)


def _iter_blocks(block):
    for i in range(0, block.shape[1], _BLOCK_WIDTH):
        yield block[:, i:i + _BLOCK_WIDTH]


def interior_residual(op, interior, samples=None, n_random=4, seed=0):
    """
    max ||op v|| over interior unit vectors v.

    The probe set is every interior basis vector (thinned to ``samples`` on
    tensor windows) plus ``n_random`` seeded random interior combinations.
    """
    if interior.window != op.window:
        raise WindowMismatchError(
            "Interior {i} does not match {w}".format(i=interior, w=op.window))
    if op.is_materialized:
        idx = interior.indices() if op.window.tensor_order == 1 else interior.thinned_indices(samples)
        cols = op.matrix[:, idx]
        norms = np.sqrt(np.asarray(abs(cols).power(2).sum(axis=0))).ravel()
        value = float(norms.max()) if norms.size else 0.0
    else:
        value = 0.0
        limit = None if op.window.tensor_order == 1 else samples
        for chunk in _iter_blocks(interior.basis_block(limit)):
            out = apply(op, chunk)
            value = max(value, float(np.linalg.norm(out, axis=0).max()))
    if n_random:
        rng = np.random.default_rng(seed)
        out = apply(op, interior.random_block(n_random, rng))
        value = max(value, float(np.linalg.norm(out, axis=0).max()))
    return value


def norm_estimate(op, iters=50, interior=None, seed=0):
    """
    Power iteration on op* op from a fixed start vector. Returns the largest
    ||op v|| seen over unit iterates v, a lower bound on ||op|| (on the
    interior if given) converging upward.
    """
    rng = np.random.default_rng(seed)
    n = op.window.dim
    v = np.ones(n, dtype=np.complex128) + 0.5 * rng.standard_normal(n)
    mask = None if interior is None else interior.mask()
    if mask is not None:
        v = np.where(mask, v, 0.0)
    best = 0.0
    it = 0
    for it in range(1, iters + 1):
        nv = np.linalg.norm(v)
        if nv == 0:
            break
        v = v / nv
        w = apply(op, v)
        value = float(np.linalg.norm(w))
        converged = value <= best * (1 + 1e-14)
        best = max(best, value)
        if value == 0 or converged:
            break
        v = apply(adjoint(op), w)
        if mask is not None:
            v = np.where(mask, v, 0.0)
    return NormEstimate(best, it)


def _sparse_power(x, p):
    out = None
    base = x
    while p:
        if p & 1:
            out = base if out is None else (out @ base).tocsr()
        p >>= 1
        if p:
            base = (base @ base).tocsr()
    return out


def power_count(gap, tol):
    """Smallest p with gap^p <= tol; 1 for an exact projection"""
    if gap == 0:
        return 1
    return max(1, int(math.ceil(math.log(tol) / math.log(gap) - 1e-12)))


def power_projection(x, gap, tol, power_budget=512, reach=0, margin=0):
    """
    Spectral projection E_x({1}) of a positive contraction whose remaining
    spectrum lies in [0, gap], approximated by x^p with gap^p <= tol.
    """
    if not 0 <= gap < 1:
        raise ValueError("Spectral gap must lie in [0, 1), got {g}".format(g=gap))
    if tol <= 0:
        raise ValueError("tol must be positive, got {t}".format(t=tol))
    p = power_count(gap, tol)
    if p > power_budget:
        raise BudgetExceededError(
            "Power {p} for gap {g} and tol {t} exceeds budget {b}".format(
                p=p, g=gap, t=tol, b=power_budget))
    bound = gap ** p
    log.debug("power projection p=%d gap=%.3g bound=%.3g", p, gap, bound)
    if x.is_materialized and x.window.tensor_order == 1:
        matrix = _sparse_power(x.matrix, p)
    else:
        matrix = Power(x.matrix, p)
    meta = _merge_meta(x)
    meta.update(dict(power=p, power_bound=bound))
    return SparseOperator(x.window, matrix, reach=reach,
                          margin=max(x.margin, margin),
                          err=x.err * p + bound, meta=meta)


def binomial_coefficients(n_terms):
    """c_k = binom(2k, k) / 4^k, the coefficients of (1 - z)^(-1/2)"""
    c = np.ones(n_terms)
    for k in range(1, n_terms):
        c[k] = c[k - 1] * (2 * k - 1) / (2 * k)
    return c


def series_length(lower, tol, series_budget=2048):
    """
    Smallest N with c_(N+1) r^(N+1) / (1 - r) <= tol, r = 1 - lower; returns
    (N, tail bound).
    """
    r = 1.0 - lower
    if r == 0:
        return 0, 0.0
    n, c_next = 0, 0.5
    tail = c_next * r / (1 - r)
    while tail > tol:
        n += 1
        if n > series_budget:
            raise BudgetExceededError(
                "Series for lower bound {l} and tol {t} exceeds budget {b}".format(
                    l=lower, t=tol, b=series_budget))
        c_next *= (2 * n + 1) / (2 * n + 2)
        tail = c_next * r ** (n + 1) / (1 - r)
    return n, tail


def inv_sqrt(y, lower, tol, series_budget=2048, defect=None, reach=0, margin=0):
    """
    y^(-1/2) for y = I - Z with ||Z|| <= 1 - lower, by the binomial series in
    Z truncated where the geometric tail bound drops below tol.

    :param defect: Z itself, when it is cheaper to build than I - y
    """
    if not 0 < lower <= 1:
        raise ValueError("lower must lie in (0, 1], got {l}".format(l=lower))
    n, tail = series_length(lower, tol, series_budget)
    log.debug("inverse square root N=%d lower=%.3g tail=%.3g", n, lower, tail)
    z = defect if defect is not None else add(identity(y.window), scale(y, -1.0))
    coeffs = binomial_coefficients(n + 1)
    meta = _merge_meta(z)
    meta.update(dict(series_terms=n + 1, series_tail=tail))
    if n == 0:
        return identity(y.window).evolve(err=tail, meta=meta, name=None)
    if z.is_materialized and z.window.tensor_order == 1:
        acc = coeffs[-1] * identity(z.window).matrix
        for c in coeffs[-2::-1]:
            acc = (c * identity(z.window).matrix + z.matrix @ acc).tocsr()
        matrix = acc
    else:
        matrix = PolynomialSeries(z.matrix, coeffs)
    return SparseOperator(y.window, matrix, reach=reach,
                          margin=max(z.margin, margin),
                          err=z.err * n + tail, meta=meta)
