"""
The intertwiner between Delta_0 and Delta_q.

The range of Delta_q(S*S) has the orthonormal basis

    f_{n,i,m,j} = sum_k Lambda(n+m)^-1 lambda(n+m, k) xi(n+k, i-k) (x) xi(m+k, j+k)

(nm = 0), built from the lambda recursion. The partial isometry U~ maps
f^0 = xi(n,i) (x) xi(m,j) to f^q, and

    U = sum_k Delta_q(T)^k U~ Delta_0(T*)^k

is the unitary with Delta_q = Ad(U) o Delta_0.
"""

import functools
import logging
import math
from collections import namedtuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from suqtwist.models.common import (DeformationParameter, TruncationWindow,
                                    WindowError, WindowMismatchError)
from suqtwist.models.report import ResidualReport
from suqtwist.models.words import WordIndex, QuotientWord, TensorWordSum
from suqtwist.operators.core import (SparseOperator, identity, compose, tensor,
                                     locality_margin, geometric_margin,
                                     geometric_tail, InteriorSet, interior_for,
                                     apply)
from suqtwist.algebra.suq2 import gen_T, word_sum_op, relation_row
from suqtwist.algebra.comultiplication import (ComultiplicationSet,
                                               delta0_generators, delta_q_generators,
                                               symbol_row)

log = logging.getLogger(__name__)

# relative slack for comparing tabulated lambdas with their analytic bound
LAMBDA_BOUND_SLACK = 1e-15

RECURSION_TOL = 1e-12

INTERTWINING_WORDS = ("S", "T", "S*", "T*", "ST", "TS*", "S*S")

# most levels stacked on a checking window to host the truncation tails of U
HOST_LEVEL_CAP = 8

FLabel = namedtuple("FLabel", "n i m j")


def lambda_bound(q, n, k):
    """(q^(n+k) / (1 - q^2))^k"""
    return (q ** (n + k) / (1 - q * q)) ** k


def lambda_step(q, n, k):
    """lambda(n, k+1) / lambda(n, k)"""
    return (q ** (n + 2 * k + 1) /
            math.sqrt(1 - q ** (2 * (n + k + 1))) /
            math.sqrt(1 - q ** (2 * (k + 1))))


def _tail_after(q, n, k_cut):
    """
    Bound on sum_{k > k_cut} lambda(n, k). Once x = q^(n+k+1)/(1-q^2) <= 1/2
    the bounds decay at least geometrically with ratio 1/2; before that no
    finite bound is claimed.
    """
    k = k_cut + 1
    if q ** (n + k) / (1 - q * q) > 0.5:
        return math.inf
    return 2 * lambda_bound(q, n, k)


class LambdaTable:
    """lambda(n, k) for k = 0..k_cut with a tail bound for k > k_cut"""

    def __init__(self, q, n, values, tail):
        self.q = q
        self.n = n
        self.values = np.asarray(values, dtype=float)
        self.tail = float(tail)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, q=self.q, n=self.n, c=self.k_cut, t=self.tail)
        return "<{k} q:{q} n:{n} k_cut:{c} tail:{t:.2e} >".format(**_d)

    @property
    def k_cut(self):
        return len(self.values) - 1

    def __getitem__(self, k):
        return self.values[k] if k <= self.k_cut else 0.0

    def bounds(self):
        return np.array([lambda_bound(self.q, self.n, k) for k in range(len(self.values))])

    def bound_violation(self):
        """max relative excess of lambda over its bound, 0 when the bound holds"""
        b = self.bounds()
        excess = np.where(b > 0, self.values / np.where(b > 0, b, 1.0) - 1.0,
                          np.where(self.values > 0, np.inf, 0.0))
        return float(max(0.0, excess.max()))


@functools.lru_cache(maxsize=1024)
def lambda_table(q, n, tol):
    """
    The lambda recursion from lambda(n, 0) = 1, cut at the smallest k_cut whose
    summed bound over k > k_cut is <= tol.
    """
    q = DeformationParameter(q).q
    if q == 0:
        return LambdaTable(q, n, [1.0], 0.0)
    values = [1.0]
    k_cut = 0
    tail = _tail_after(q, n, k_cut)
    while tail > tol:
        values.append(values[-1] * lambda_step(q, n, k_cut))
        k_cut += 1
        tail = _tail_after(q, n, k_cut)
    log.debug("lambda table q=%.3g n=%d k_cut=%d tail=%.3g", q, n, k_cut, tail)
    return LambdaTable(q, n, values, tail)


def capital_lambda(q, n, tol):
    """Lambda(n) = (sum_k lambda(n, k)^2)^(1/2) >= 1"""
    table = lambda_table(q, n, tol)
    return float(math.sqrt(np.sum(table.values ** 2)))


class FVector:
    """
    Truncated f^q_{n,i,m,j}: coefficients on xi(n+k, i-k) (x) xi(m+k, j+k),
    with the l2 mass of what was dropped (window and lambda tail) as defect.
    """

    def __init__(self, q, label, coefficients, defect):
        self.q = q
        self.label = FLabel(*label)
        self.coefficients = list(coefficients)
        self.defect = float(defect)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, q=self.q, l=tuple(self.label),
                  n=len(self.coefficients), d=self.defect)
        return "<{k} q:{q} label:{l} nterms:{n} defect:{d:.2e} >".format(**_d)

    @property
    def norm(self):
        return float(math.sqrt(sum(abs(c) ** 2 for _, c in self.coefficients)))

    def to_vector(self, window):
        w = window.with_order(2)
        v = np.zeros(w.dim, dtype=np.complex128)
        for labels, c in self.coefficients:
            v[w.index(*labels)] = c
        return v


def _validate_label(n, i, m, j):
    if n < 0 or m < 0:
        raise ValueError("Levels must be non-negative, got n={n} m={m}".format(n=n, m=m))
    if n * m != 0:
        raise ValueError("f vectors need nm = 0, got n={n} m={m}".format(n=n, m=m))


def f_vector(q, n, i, m, j, window, tol):
    """f^q_{n,i,m,j}, truncated by the window and by the lambda tail"""
    _validate_label(n, i, m, j)
    q = DeformationParameter(q).q
    w = window.with_order(2)
    if not (w.contains(n, i) and w.contains(m, j)):
        raise WindowError("Leading term of f_{l} lies outside {w}".format(l=(n, i, m, j), w=w))
    table = lambda_table(q, n + m, tol)
    big = capital_lambda(q, n + m, tol)
    kept, dropped = [], 0.0
    for k, lam in enumerate(table.values):
        labels = ((n + k, i - k), (m + k, j + k))
        c = lam / big
        if w.contains(*labels[0]) and w.contains(*labels[1]):
            kept.append((labels, c))
        else:
            dropped += c * c
    return FVector(q, (n, i, m, j), kept, math.sqrt(dropped) + table.tail)


def f_labels(window, q, tol, interior=None, limit=None):
    """
    Labels (n, i, m, j), nm = 0, whose f^q support up to k_cut fits the
    window, with the leading term inside ``interior`` when given. Thinned
    evenly to ``limit``.
    """
    w = window.with_order(2)
    out = []
    for n in range(w.k_max):
        for m in range(w.k_max):
            if n * m != 0:
                continue
            k_cut = lambda_table(q, n + m, tol).k_cut
            for i in range(-w.m_max, w.m_max + 1):
                for j in range(-w.m_max, w.m_max + 1):
                    if not (w.contains(n + k_cut, i - k_cut) and w.contains(m + k_cut, j + k_cut)):
                        continue
                    if interior is not None and not interior.contains((n, i), (m, j)):
                        continue
                    out.append(FLabel(n, i, m, j))
    if limit is not None and len(out) > limit:
        picks = np.unique(np.linspace(0, len(out) - 1, int(limit)).round().astype(int))
        out = [out[p] for p in picks]
    return out


def kernel_check(q, window, samples, tol, command=None, comult=None):
    """
    Delta_q(phi_q(a)) kills every f^q, and consecutive f^q coefficients follow
    the kernel recursion.
    """
    w = window.with_order(2)
    da = comult.da if comult is not None else delta_q_generators(q, w)[0]
    labels = f_labels(w, q, tol, limit=samples)
    kernel, budget, recursion = 0.0, 1e-12, 0.0
    for label in labels:
        f = f_vector(q, *label, w, tol)
        kernel = max(kernel, float(np.linalg.norm(apply(da, f.to_vector(w)))))
        budget = max(budget, (1 + q) * f.defect + 1e-12)
        for (l0, c0), (l1, c1) in zip(f.coefficients[:-1], f.coefficients[1:]):
            (k1, _), (k2, _) = l0
            factor = (q ** (k1 + k2 + 1) /
                      math.sqrt(1 - q ** (2 * (k1 + 1))) /
                      math.sqrt(1 - q ** (2 * (k2 + 1))))
            recursion = max(recursion, abs(c1 - factor * c0) / max(abs(c1), 1e-300))
    params = dict(nlabels=len(labels))
    return [ResidualReport("kernel_delta_a", command, q, kernel, budget,
                           anchor="Delta_q(phi_q(a)) f^q = 0", params=params),
            ResidualReport("kernel_recursion", command, q, recursion, RECURSION_TOL,
                           anchor="c(n+1,i-1,m+1,j+1) = q^(n+m+1)(1-q^(2(n+1)))^(-1/2)(1-q^(2(m+1)))^(-1/2)c(n,i,m,j)",
                           params=params)]


def gram_check(q, window, tol, samples=20, command=None):
    """f^q vectors of distinct labels are orthonormal within 2 tol"""
    w = window.with_order(2)
    labels = f_labels(w, q, tol, limit=max(samples, 20))
    F = np.column_stack([f_vector(q, *label, w, tol).to_vector(w) for label in labels])
    gram = F.conj().T @ F
    residual = float(np.max(np.abs(gram - np.eye(len(labels)))))
    return ResidualReport("f_gram", command, q, residual, 2 * tol,
                          anchor="f^q form an orthonormal basis of the range of Delta_q(S*S)",
                          params=dict(nlabels=len(labels)))


def lambda_rows(q, tol, n_values, command=None):
    """Tabulated lambdas stay below their analytic bound"""
    violation = max(lambda_table(q, n, tol).bound_violation() for n in n_values)
    return ResidualReport("lambda_bound", command, q, violation, LAMBDA_BOUND_SLACK,
                          anchor="lambda(n,k) <= (q^(n+k)(1-q^2)^-1)^k",
                          params=dict(n_max=max(n_values)))


def _coefficient_grid(q, n_max, tol):
    """coef[N, k] = Lambda(N)^-1 lambda(N, k), zero past each k_cut"""
    tables = [lambda_table(q, n, tol) for n in range(n_max + 1)]
    k_len = max(t.k_cut for t in tables) + 1
    coef = np.zeros((n_max + 1, k_len))
    for n, table in enumerate(tables):
        coef[n, :table.k_cut + 1] = table.values / capital_lambda(q, n, tol)
    tail = max(t.tail for t in tables)
    return coef, tail


def u_tilde(q, window, tol):
    """
    U~ as the basis map f^0_{n,i,m,j} -> f^q_{n,i,m,j} over every label of the
    window, zero on levels with min(k1, k2) >= 1.
    """
    q = DeformationParameter(q).q
    w = window.with_order(2)
    leg = w.leg()
    coef, tail = _coefficient_grid(q, w.k_max - 1, tol)
    ks, ms = leg.leg_grid()
    K1, K2 = np.meshgrid(ks, ks, indexing="ij")
    M1, M2 = np.meshgrid(ms, ms, indexing="ij")
    sel = np.minimum(K1, K2) == 0
    n, i, m, j = K1[sel], M1[sel], K2[sel], M2[sel]
    cols = w.leg_dim * leg.leg_index(n, i) + leg.leg_index(m, j)
    rows_, cols_, data = [], [], []
    for k in range(coef.shape[1]):
        c = coef[n + m, k]
        ok = ((n + k < w.k_max) & (m + k < w.k_max) &
              (np.abs(i - k) <= w.m_max) & (np.abs(j + k) <= w.m_max) & (c != 0))
        rows_.append(w.leg_dim * leg.leg_index(n[ok] + k, i[ok] - k) + leg.leg_index(m[ok] + k, j[ok] + k))
        cols_.append(cols[ok])
        data.append(c[ok])
    matrix = scipy.sparse.coo_matrix(
        (np.concatenate(data).astype(np.complex128), (np.concatenate(rows_), np.concatenate(cols_))),
        shape=(w.dim, w.dim)).tocsr()
    if matrix.nnz == 0:
        raise WindowError("Window {w} hosts no f vector".format(w=w))
    return SparseOperator(w, matrix, reach=0, margin=locality_margin(q, tol), err=tail,
                          meta=dict(k_terms=coef.shape[1]), name="U~")


def u_tilde_leading():
    """I(x)I - TT*(x)TT*, the part of U~ outside J (x) J"""
    one, ttstar = QuotientWord(0, 0), QuotientWord(1, 1)
    return TensorWordSum([(1, (one, one)), (-1, (ttstar, ttstar))])


def u_tilde_series_terms(q, levels, tol):
    """
    The word series of U~:

    I(x)I - TT*(x)TT* + sum (Lambda(n+m)^-1 - 1) W(n,0,n)(x)W(m,0,m)
        + sum_{k>=1} Lambda(n+m)^-1 lambda(n+m,k) W(n+k,-k,n)(x)W(m+k,k,m)

    over nm = 0 and n, m < levels.
    """
    q = DeformationParameter(q).q
    terms = list(u_tilde_leading())
    for n in range(levels):
        for m in range(levels):
            if n * m != 0:
                continue
            table = lambda_table(q, n + m, tol)
            big = capital_lambda(q, n + m, tol)
            terms.append((1 / big - 1, (WordIndex(n, 0, n), WordIndex(m, 0, m))))
            for k in range(1, table.k_cut + 1):
                terms.append((table.values[k] / big,
                              (WordIndex(n + k, -k, n), WordIndex(m + k, k, m))))
    return TensorWordSum(terms)


def u_tilde_series(q, window, tol):
    """U~ synthesized from its word series on the window"""
    w = window.with_order(2)
    terms = u_tilde_series_terms(q, w.k_max, tol)
    op = word_sum_op(terms, w)
    tail = max(lambda_table(q, n, tol).tail for n in range(w.k_max))
    return op.evolve(reach=0, margin=locality_margin(q, tol), err=tail, name="U~ series")


class IntertwinerOperator(scipy.sparse.linalg.LinearOperator):
    """
    sum_{k<K} D^k U~ A^k applied by Horner's rule, with D = Delta_q(T) and
    A = Delta_0(T*) = T*(x)T*. The adjoint sum_k A*^k U~* D*^k stores the
    powers D*^k v.
    """

    def __init__(self, delta_t, u_tilde_, shift, n_terms, adjoint=False):
        self.delta_t = delta_t
        self.u_tilde = u_tilde_
        self.shift = shift
        self.n_terms = int(n_terms)
        self.is_adjoint = adjoint
        super().__init__(dtype=np.complex128, shape=u_tilde_.shape)

    def _matvec(self, v):
        v = np.asarray(v, dtype=np.complex128).ravel()
        if self.is_adjoint:
            return self._rmatvec_impl(v)
        parts = []
        x = v
        for _ in range(self.n_terms):
            parts.append(self.u_tilde.matvec(x))
            x = self.shift.matvec(x)
        acc = parts[-1]
        for u in parts[-2::-1]:
            acc = u + self.delta_t.matvec(acc)
        return acc

    def _rmatvec_impl(self, v):
        powers = []
        x = v
        for _ in range(self.n_terms):
            powers.append(x)
            x = self.delta_t.rmatvec(x)
        acc = self.u_tilde.rmatvec(powers[-1])
        for w in powers[-2::-1]:
            acc = self.u_tilde.rmatvec(w) + self.shift.rmatvec(acc)
        return acc

    def _adjoint(self):
        return IntertwinerOperator(self.delta_t, self.u_tilde, self.shift,
                                   self.n_terms, adjoint=not self.is_adjoint)


class IntertwinerBundle:
    """
    U~ (both constructions), U and the comultiplication they were built
    against, for one q. Everything lives on the host window; the checking
    window is the one the caller asked for.
    """

    def __init__(self, q, window, tol, comult, u_tilde_, u_tilde_series_, u,
                 checking_window=None):
        self.q = q
        self.window = window
        self.tol = tol
        self.comult = comult
        self.u_tilde = u_tilde_
        self.u_tilde_series = u_tilde_series_
        self.u = u
        self.checking_window = window if checking_window is None else checking_window
        self.rows = []

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, q=self.q, w=self.window,
                  c=self.checking_window, e=self.u.err)
        return "<{k} q:{q} host:{w} checking:{c} err_U:{e:.2e} >".format(**_d)

    @property
    def margin(self):
        return locality_margin(self.q, self.tol)

    @property
    def level_margin(self):
        """Host levels stacked on the checking window"""
        return self.u.level_margin

    def level_tail(self, level):
        """Truncation tail of U and U* on inputs at ``level``"""
        return geometric_tail(self.q, self.window.k_max - level)

    def delta0(self, sx):
        """(rho(x)rho)Delta_0 of a generator product"""
        return word_sum_op(delta0_generators(sx), self.window)

    def conjugate(self, op):
        """U op U*"""
        return compose(self.u, compose(op, self.u.H))

    def unitary_budget(self):
        return max(10 * self.tol, 2 * self.u.err + 1e-12)


def _highest_interior_level(window, order):
    return window.k_max - order - 1


def host_levels(q, tol, cap=HOST_LEVEL_CAP):
    """
    Levels stacked on a checking window before U is built. The interior
    already sits locality_margin + 1 levels below the top, the rest of the
    geometric margin is added up to ``cap``.
    """
    q = DeformationParameter(q).q
    need = geometric_margin(q, tol) - locality_margin(q, tol) - 1
    return max(0, min(int(cap), need))


def host_window(q, window, tol, cap=HOST_LEVEL_CAP, levels=None):
    """
    The two-leg window U is built on for checks on ``window``. ``levels``
    overrides the stacked level count, so a q grid can share one host.
    """
    w = window.with_order(2)
    extra = host_levels(q, tol, cap) if levels is None else int(levels)
    if extra < 0:
        raise WindowError("Host levels must be non-negative, got {n}".format(n=levels))
    return TruncationWindow(w.k_max + extra, w.m_max, 2)


def u_q(q, window, tol, power_budget=512, series_budget=2048, comult=None,
        cap=HOST_LEVEL_CAP, levels=None):
    """
    U = sum_{k<k_max} Delta_q(T)^k U~ Delta_0(T*)^k on the host window of
    ``window``; every term with k >= k_max vanishes there.

    U* climbs one level per power of Delta_q(T)* with amplitude about q, so the
    truncated sum is off by about q^d on inputs d levels below the top. The
    host levels are excluded from every checking interior (level_margin) and
    the tail left at the checking window's top is part of the error bound.
    """
    q = DeformationParameter(q).q
    checking = window.with_order(2)
    w = host_window(q, checking, tol, cap, levels)
    extra = w.k_max - checking.k_max
    if comult is None:
        comult = ComultiplicationSet(q, w, tol, power_budget, series_budget)
    elif comult.window != w:
        raise WindowMismatchError(
            "Comultiplication lives on {c}, U needs the host window {w}".format(c=comult.window, w=w))
    ut = u_tilde(q, w, tol)
    uts = u_tilde_series(q, w, tol)
    leg = w.leg()
    shift = tensor(gen_T(leg).H, gen_T(leg).H)
    matrix = IntertwinerOperator(comult.T.as_linear_operator(), ut.as_linear_operator(),
                                 shift.as_linear_operator(), w.k_max)
    margin = locality_margin(q, tol)
    k_int = max(0, _highest_interior_level(w, comult.T.reach + margin + extra))
    tail = geometric_tail(q, margin + extra + 1)
    err = k_int * comult.T.err + ut.err + tail
    u = SparseOperator(w, matrix, reach=0, margin=margin, err=err,
                       meta=dict(k_int=k_int, host_levels=extra, level_tail=tail),
                       name="U", level_margin=extra)
    log.debug("Built U q=%.3g host=%s k_int=%d tail=%.3g err=%.3g", q, w, k_int, tail, err)
    return IntertwinerBundle(q, w, tol, comult, ut, uts, u, checking_window=checking)


def unitarity_rows(bundle, command=None, samples=None):
    u, I = bundle.u, identity(bundle.window)
    budget = bundle.unitary_budget()
    return [relation_row("u_unitary_left", command, bundle.q, compose(u.H, u) - I, budget,
                         "U*U = I", samples=samples),
            relation_row("u_unitary_right", command, bundle.q, compose(u, u.H) - I, budget,
                         "UU* = I", samples=samples)]


def u_tilde_dual_row(bundle, command=None, samples=None):
    """The basis-map and series constructions of U~ agree"""
    diff = bundle.u_tilde - bundle.u_tilde_series
    budget = bundle.u_tilde.err + bundle.u_tilde_series.err + 1e-12
    return relation_row("u_tilde_dual", command, bundle.q, diff, budget,
                        "U~ basis map = U~ word series", samples=samples)


def u_maps_f_row(bundle, samples, command=None):
    """U f^0 = f^q on sampled labels"""
    w = bundle.window
    interior = interior_for(bundle.u)
    labels = f_labels(w, bundle.q, bundle.tol, interior=interior, limit=samples)
    residual, budget = 0.0, 1e-12
    for label in labels:
        f = f_vector(bundle.q, *label, w, bundle.tol)
        f0 = w.basis_vector((label.n, label.i), (label.m, label.j))
        residual = max(residual, float(np.linalg.norm(apply(bundle.u, f0) - f.to_vector(w))))
        budget = max(budget, 2 * f.defect + bundle.u.err + 1e-12)
    return ResidualReport("u_maps_f0_to_fq", command, bundle.q, residual, budget,
                          anchor="U: f^0 -> f^q", params=dict(nlabels=len(labels)))


def d_words():
    """Fixed two-leg words of D used for ideal stability and continuity"""
    sss = TensorWordSum.from_generators("S*S")
    return {"s_star_s_s_star_s": sss.tensor(sss),
            "s_t": TensorWordSum.from_generators("S").tensor(TensorWordSum.from_generators("T"))}


def u_times_word(bundle, wsum):
    """U (rho(x)rho)(w) for a fixed two-leg word sum"""
    return compose(bundle.u, word_sum_op(wsum, bundle.window))


def symbol_rows(bundle, command=None, probe_radius=2):
    """
    U preserves D on both sides and Ad U fixes the T(x)T symbol. Symbols are
    read below the host levels and carry the truncation tail of U and U* there.
    """
    q, tol = bundle.q, bundle.tol
    top = bundle.window.k_max - bundle.level_margin
    tail = 2 * bundle.level_tail(top - 1)
    rows = []
    for name, wsum in sorted(d_words().items()):
        d = word_sum_op(wsum, bundle.window)
        rows.append(symbol_row("symbol_u_left_" + name, command, q, tol, compose(bundle.u, d),
                               probe_radius=probe_radius, anchor="U D is contained in D",
                               top=top, tail=tail))
        rows.append(symbol_row("symbol_u_right_" + name, command, q, tol, compose(d, bundle.u),
                               probe_radius=probe_radius, anchor="D U is contained in D",
                               top=top, tail=tail))
    tt = bundle.conjugate(bundle.delta0("T"))
    rows.append(symbol_row("symbol_u_conjugate_tt", command, q, tol, tt,
                           expected={(1, 1): 1.0}, probe_radius=probe_radius,
                           anchor="U(T(x)T)U* equals T(x)T plus an element of D",
                           top=top, tail=tail))
    return rows


def intertwining_budget(lhs, rhs, tol, slack=10.0):
    return 2 * (lhs.err + rhs.err) + slack * tol


def verify_intertwining(bundle, words=INTERTWINING_WORDS, tol=None, command=None,
                        samples=None):
    """
    Delta_q(x) = U Delta_0(x) U* on interior vectors for generator words x,
    plus the two Delta_q(S) action laws on f^q and the positive-scalar anchor.
    """
    tol = bundle.tol if tol is None else tol
    rows = []
    for sx in words:
        lhs = bundle.comult.image(sx)
        rhs = bundle.conjugate(bundle.delta0(sx))
        op = lhs - rhs
        check = "intertwining_" + sx.lower().replace("*", "_star")
        rows.append(relation_row(check, command, bundle.q, op,
                                 intertwining_budget(lhs, rhs, tol),
                                 "Delta_q(x) = U Delta_0(x) U*", samples=samples,
                                 word=sx))
    rows.extend(action_law_rows(bundle, samples=samples, command=command))
    return rows


def action_law_rows(bundle, samples=None, command=None):
    """
    Delta_q(S) f_{0,i,m,j} = f_{0,i+1,m-1,j} (m >= 1),
    Delta_q(S) f_{n,i,0,j} = f_{n+1,i,0,j+1}, and
    <Delta_q(S) f_{n,i,0,j}, f_{n+1,i,0,j+1}> real, positive and close to 1.
    """
    q, tol, w = bundle.q, bundle.tol, bundle.window
    S = bundle.comult.S
    interior = InteriorSet(w, S.order + 1, floor=0)
    labels = f_labels(w, q, tol, interior=interior, limit=samples)
    law_m, law_n, anchor = 0.0, 0.0, 0.0
    budget = 1e-12
    for label in labels:
        n, i, m, j = label
        if n == 0 and m >= 1:
            target = (0, i + 1, m - 1, j)
        elif m == 0:
            target = (n + 1, i, 0, j + 1)
        else:
            continue
        f = f_vector(q, *label, w, tol)
        try:
            g = f_vector(q, *target, w, tol)
        except WindowError:
            continue
        image = apply(S, f.to_vector(w))
        gv = g.to_vector(w)
        residual = float(np.linalg.norm(image - gv))
        budget = max(budget, f.defect + g.defect + S.err + 10 * tol)
        if m == 0:
            law_n = max(law_n, residual)
            z = complex(np.vdot(gv, image))
            anchor = max(anchor, abs(z - 1.0))
        else:
            law_m = max(law_m, residual)
    params = dict(nlabels=len(labels))
    return [ResidualReport("action_law_m", command, q, law_m, budget,
                           anchor="Delta_q(S) f_{0,i,m,j} = f_{0,i+1,m-1,j}", params=params),
            ResidualReport("action_law_n", command, q, law_n, budget,
                           anchor="Delta_q(S) f_{n,i,0,j} = f_{n+1,i,0,j+1}", params=params),
            ResidualReport("positive_scalar_anchor", command, q, anchor, budget,
                           anchor="the transition scalar is positive, hence 1", params=params)]


def omega_rows(bundle, samples=None, command=None, probe_radius=2):
    """Every gate of the intertwiner construction"""
    q, tol, w = bundle.q, bundle.tol, bundle.window
    rows = [lambda_rows(q, tol, range(w.k_max), command=command)]
    rows.extend(kernel_check(q, w, samples, tol, command=command, comult=bundle.comult))
    rows.append(gram_check(q, w, tol, command=command))
    rows.extend(unitarity_rows(bundle, command=command, samples=samples))
    rows.append(u_tilde_dual_row(bundle, command=command, samples=samples))
    rows.append(u_maps_f_row(bundle, samples, command=command))
    rows.append(symbol_row("symbol_u_tilde", command, q, tol, bundle.u_tilde,
                           probe_radius=probe_radius, anchor="U~ belongs to (rho(x)rho)(D)"))
    return rows
