"""
Word coefficients of elements of J and D, the counit slices (epsilon (x) id)
and (id (x) epsilon) on D, and the multiplier lifts (Delta_0 (x) id),
(id (x) Delta_0) of two-leg operators onto the triple window.

A multiplier is never held as a matrix on the triple window. It is evaluated
strictly: against each carrier c_ab = P_a (x) P_b (P_a = T^a S*S T*^a) the
product x c_ab lies in J (x) J, its word coefficients are read off, Delta_0
is applied symbolically to one leg and the result is synthesized on the
triple window. The carriers add up to I, so a lift applied to a vector is the
sum of the per-carrier lifts on its carrier components.
"""

import collections
import functools
import itertools
import logging
import math

import numpy as np
import scipy.sparse

from suqtwist.models.common import (TruncationWindow, WindowError,
                                    NotInIdealError)
from suqtwist.models.report import ResidualReport
from suqtwist.models.words import WordIndex, QuotientWord, TensorWordSum
from suqtwist.operators.core import (zero, compose, compose_all, locality_margin,
                                     InteriorSet, interior_for, interior_residual, apply)
from suqtwist.algebra.suq2 import (word_op, word_sum_op, gen_S, gen_T, phi_b,
                                   relation_row, rep_rho_t, rho_t_phi, Character)
from suqtwist.algebra.comultiplication import (LEFT, RIGHT, delta0_word,
                                               delta0_leg, delta0_generators,
                                               density_identity_terms,
                                               mixed_delta_q, symbol_decay,
                                               SYMBOL_RESOLUTION)
from suqtwist.algebra.cocycle import u_q, u_tilde_leading, u_tilde_series_terms

log = logging.getLogger(__name__)

J_LEG = "J"
A_LEG = "A"

DEFAULT_TAIL_BAND = 2

# windings averaged over when extracting x c_ab for a lift
LIFT_PROBE_WINDINGS = (-1, 0, 1)

# the lowest norm accepted as "does not vanish"
NONVANISHING_FLOOR = 0.1

_LEG_INDEX = {LEFT: 0, RIGHT: 1}


def _leg_position(side):
    try:
        return _LEG_INDEX[side]
    except KeyError:
        raise ValueError("side must be '{l}' or '{r}', got {x}".format(l=LEFT, r=RIGHT, x=side))


class WordCoefficients:
    """
    Word coefficients of an operator, keyed by one word per tensor leg.

    ``spread`` is the largest variation of a probed entry over the winding
    coordinate, ``residual`` the synthesis residual on the probed inputs and
    ``dropped`` the summed modulus of coefficients below the cutoff.
    """

    def __init__(self, coefficients, order, tol, spread=0.0, residual=0.0, dropped=0.0):
        self.coefficients = dict(coefficients)
        self.order = order
        self.tol = tol
        self.spread = float(spread)
        self.residual = float(residual)
        self.dropped = float(dropped)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, n=len(self), o=self.order,
                  s=self.spread, r=self.residual)
        return "<{k} order:{o} nterms:{n} spread:{s:.2e} residual:{r:.2e} >".format(**_d)

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, key):
        if not isinstance(key, tuple) or isinstance(key, (WordIndex, QuotientWord)):
            key = (key,)
        return self.coefficients.get(key, 0j)

    def items(self):
        return sorted(self.coefficients.items())

    @property
    def err(self):
        return self.residual + self.dropped

    def to_word_sum(self):
        return TensorWordSum(((c, legs) for legs, c in self.coefficients.items()),
                             order=self.order)

    def synthesize(self, window):
        op = word_sum_op(self.to_word_sum(), window.with_order(self.order))
        return op.evolve(err=self.err)


def _probe_columns(window, inputs, sparse=False):
    rows = [window.index(*labels) for labels in inputs]
    if sparse:
        return scipy.sparse.csc_matrix(
            (np.ones(len(rows), dtype=np.complex128), (rows, np.arange(len(rows)))),
            shape=(window.dim, len(rows)))
    block = np.zeros((window.dim, len(rows)), dtype=np.complex128)
    block[rows, np.arange(len(rows))] = 1.0
    return block


def _read_entries(x, inputs, zero_cut):
    """
    Push the probe inputs through x; return the raw readings
    {((m, j, n) per leg): [values]} and the outputs as a sparse block.
    """
    w = x.window
    readings = collections.defaultdict(list)
    outputs = []
    for start in range(0, len(inputs), 32):
        chunk = inputs[start:start + 32]
        out = np.asarray(apply(x, _probe_columns(w, chunk)))
        outputs.append(scipy.sparse.csc_matrix(out))
        for col, labels in enumerate(chunk):
            nz = np.flatnonzero(np.abs(out[:, col]) > zero_cut)
            if nz.size == 0:
                continue
            legs = np.unravel_index(nz, w.leg_shape)
            ks, ms = zip(*[np.divmod(leg, w.leg_width) for leg in legs])
            for p, idx in enumerate(nz):
                key = tuple((int(ks[i][p]), int(ms[i][p] - w.m_max - y), n)
                            for i, (n, y) in enumerate(labels))
                readings[key].append(out[idx, col])
    return readings, scipy.sparse.hstack(outputs).tocsc()


def _max_column_norm(m):
    if m.nnz == 0:
        return 0.0
    return float(np.sqrt(np.max(np.asarray(abs(m).power(2).sum(axis=0)))))


def _average(readings, windings, m_max):
    """Mean over the windings of each reading, missing entries counted as zero"""
    means, spread = {}, 0.0
    for key, values in readings.items():
        count = 1
        for (_, j, _), ys in zip(key, windings):
            count *= sum(1 for y in ys if abs(y + j) <= m_max)
        values = np.asarray(values)
        mean = values.sum() / max(count, len(values))
        dev = float(np.max(np.abs(values - mean)))
        if len(values) < count:
            dev = max(dev, abs(mean))
        means[key] = complex(mean)
        spread = max(spread, dev)
    return means, spread


def _leg_words(values, flag, band, fit):
    """
    Rewrite readings {(m, j, n): c} of one leg as words. A legs read their
    Toeplitz part at the band levels (winding shift 0, degree m - n) and keep
    the remainder as ideal words; J legs keep ideal words on fit levels only.
    """
    toeplitz, spread = {}, 0.0
    if flag == A_LEG and band:
        by_degree = collections.defaultdict(list)
        for (m, j, n), c in values.items():
            if j == 0 and n in band:
                by_degree[m - n].append(c)
        for d, cs in by_degree.items():
            cs = np.asarray(cs + [0j] * (len(band) - len(cs)))
            toeplitz[d] = complex(cs.mean())
            spread = max(spread, float(np.max(np.abs(cs - toeplitz[d]))))
    words = collections.defaultdict(complex)
    for d, c in toeplitz.items():
        words[QuotientWord(d, 0) if d >= 0 else QuotientWord(0, -d)] += c
    for (m, j, n), c in values.items():
        if n not in fit:
            continue
        if j == 0:
            c = c - toeplitz.get(m - n, 0j)
        words[WordIndex(m, j, n)] += c
    return words, spread


def _to_words(means, flags, bands, fits):
    """Apply the per-leg rewrite leg by leg"""
    table = {key: c for key, c in means.items()}
    spread = 0.0
    for leg, flag in enumerate(flags):
        grouped = collections.defaultdict(dict)
        for key, c in table.items():
            rest = key[:leg] + key[leg + 1:]
            grouped[rest][key[leg]] = c
        table = {}
        for rest, values in grouped.items():
            words, s = _leg_words(values, flag, bands[leg], fits[leg])
            spread = max(spread, s)
            for word, c in words.items():
                table[rest[:leg] + (word,) + rest[leg:]] = c
    return table, spread


def _extract(x, flags, tol, tail_band=DEFAULT_TAIL_BAND, input_levels=None,
             windings=None, cutoff=None):
    w = x.window
    if len(flags) != w.tensor_order:
        raise WindowError("Expected {n} leg flags for {w}, got {f}".format(
            n=w.tensor_order, w=w, f=flags))
    cutoff = tol / 100.0 if cutoff is None else cutoff
    interior = interior_for(x)
    if input_levels is None:
        levels = [list(interior.levels)] * len(flags)
        n_band = min(tail_band, len(interior.levels) - 1)
        bands = [set(interior.levels[len(interior.levels) - n_band:])] * len(flags)
        fits = [set(interior.levels[:len(interior.levels) - n_band])] * len(flags)
    else:
        levels = [[int(k)] for k in input_levels]
        bands = [set()] * len(flags)
        fits = [set(lv) for lv in levels]
    ys = [list(windings) if windings is not None else list(interior.windings)] * len(flags)
    per_leg = [[(k, y) for k in lv for y in yy] for lv, yy in zip(levels, ys)]
    inputs = list(itertools.product(*per_leg))
    readings, outputs = _read_entries(x, inputs, cutoff / 10.0)
    means, spread = _average(readings, ys, w.m_max)
    table, toeplitz_spread = _to_words(means, flags, bands, fits)
    kept, dropped = {}, 0.0
    for legs, c in table.items():
        if abs(c) > cutoff:
            kept[legs] = c
        else:
            dropped += abs(c)
    coeffs = WordCoefficients(kept, len(flags), tol, spread=max(spread, toeplitz_spread),
                              dropped=dropped)
    diff = outputs
    if kept:
        synth = word_sum_op(coeffs.to_word_sum(), w)
        diff = scipy.sparse.csc_matrix(outputs - synth.matrix @ _probe_columns(w, inputs, sparse=True))
    coeffs.residual = _max_column_norm(diff)
    log.debug("Extracted %d words (flags %s) spread=%.3g residual=%.3g dropped=%.3g",
              len(kept), flags, coeffs.spread, coeffs.residual, dropped)
    if coeffs.spread > tol or coeffs.residual > tol:
        raise NotInIdealError(
            "Operator is not in {f} within {t}: spread {s:.3e}, synthesis residual {r:.3e}".format(
                f="(x)".join(flags), t=tol, s=coeffs.spread, r=coeffs.residual),
            deviation=max(coeffs.spread, coeffs.residual), tol=tol)
    return coeffs


def extract_J_coeffs(x, tol=1e-10, tail_band=DEFAULT_TAIL_BAND, windings=None):
    """
    Coefficients of x in rho(J): the coefficient of W(m, j, n) is the entry
    <xi(m, y + j), x xi(n, y)>, constant in y for elements of J. The top
    ``tail_band`` interior levels are not fitted, so anything that does not
    vanish at large levels (a shift, say) leaves a synthesis residual there.
    """
    if x.window.tensor_order != 1:
        raise WindowError("extract_J_coeffs needs a single-leg operator, got {w}".format(w=x.window))
    return _extract(x, (J_LEG,), tol, tail_band=tail_band, windings=windings)


def extract_tensor_coeffs(x, legs=(A_LEG, A_LEG), tol=1e-10, tail_band=DEFAULT_TAIL_BAND,
                          input_levels=None, windings=None, cutoff=None):
    """
    Two-leg word coefficients. Legs flagged A admit quotient words read off
    the Toeplitz diagonals at the band levels; legs flagged J admit ideal
    words only. With ``input_levels`` the probe is restricted to one input
    level per leg and no band is reserved.
    """
    if x.window.tensor_order != 2:
        raise WindowError("extract_tensor_coeffs needs a two-leg operator, got {w}".format(w=x.window))
    for flag in legs:
        if flag not in (A_LEG, J_LEG):
            raise ValueError("Leg flags are '{a}' or '{j}', got {f}".format(a=A_LEG, j=J_LEG, f=flag))
    return _extract(x, tuple(legs), tol, tail_band=tail_band, input_levels=input_levels,
                    windings=windings, cutoff=cutoff)


def eps_tensor_id(x, side=LEFT, tol=1e-10, tail_band=DEFAULT_TAIL_BAND, leading=None,
                  leg_window=None):
    """
    (epsilon (x) id)(x) for side="left", (id (x) epsilon)(x) for side="right",
    through the word coefficients of x in D.

    With a known ``leading`` word sum the remainder x - leading is read as an
    element of J (x) J instead of decomposing x in A (x) A.
    The slice is synthesized on ``leg_window`` (default: one leg of x.window).
    """
    pos = _leg_position(side)
    if leading is None:
        coeffs = extract_tensor_coeffs(x, (A_LEG, A_LEG), tol, tail_band=tail_band)
        words = coeffs.to_word_sum()
    else:
        rest = x - word_sum_op(leading, x.window)
        coeffs = extract_tensor_coeffs(rest, (J_LEG, J_LEG), tol, tail_band=tail_band)
        words = leading + coeffs.to_word_sum()
    sliced = words.apply_counit(pos)
    leg = x.window.leg() if leg_window is None else leg_window.leg()
    op = word_sum_op(sliced, leg) if len(sliced) else zero(leg)
    return op.evolve(err=coeffs.err, meta=dict(side=side, nwords=len(coeffs)),
                     name="eps_" + side)


def carrier_word(a, b):
    """c_ab = P_a (x) P_b with P_a = T^a S*S T*^a"""
    return TensorWordSum.from_word(WordIndex(a, 0, a), WordIndex(b, 0, b))


def carriers(levels):
    """All carriers (a, b) over ``levels`` levels; they add up to I"""
    return [(a, b) for a in range(levels) for b in range(levels)]


@functools.lru_cache(maxsize=8)
def _triple_levels(window3):
    ks, _ = window3.leg().leg_grid()
    grids = np.meshgrid(ks, ks, ks, indexing="ij")
    return [g.ravel() for g in grids]


def carrier_mask(window3, side, a, b):
    """Support of the lifted carrier: (Delta_0 (x) id)(c_ab) or (id (x) Delta_0)(c_ab)"""
    k1, k2, k3 = _triple_levels(window3)
    if side == LEFT:
        return (np.minimum(k1, k2) == a) & (k3 == b)
    if side == RIGHT:
        return (k1 == a) & (np.minimum(k2, k3) == b)
    raise ValueError("side must be '{l}' or '{r}', got {x}".format(l=LEFT, r=RIGHT, x=side))


class TripleOperator:
    """
    Operator on a three-leg window, applied by matvec only. ``apply`` returns
    the image, the norm lost at the window boundary and the compression error
    bound of the image.
    """

    def __init__(self, window, provenance, err=0.0):
        if window.tensor_order != 3:
            raise WindowError("Triple operators live on three-leg windows, got {w}".format(w=window))
        self.window = window
        self.provenance = provenance
        self.err = float(err)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, p=self.provenance, w=self.window, e=self.err)
        return "<{k} {p} {w} err:{e:.2e} >".format(**_d)

    def apply(self, v):
        raise NotImplementedError

    def __call__(self, v):
        return self.apply(v)


class LegPairOperator(TripleOperator):
    """
    x (x) I (legs (0, 1)) or I (x) x (legs (1, 2)) for a two-leg operator x
    on a larger host window: slices are embedded in the host window, acted on
    and restricted back.
    """

    def __init__(self, x, window3, legs):
        if legs not in ((0, 1), (1, 2)):
            raise ValueError("legs must be (0, 1) or (1, 2), got {l}".format(l=legs))
        host = x.window.leg()
        if host.k_max < window3.k_max or host.m_max < window3.m_max:
            raise WindowError("Host window {h} does not contain {w}".format(h=host, w=window3))
        name = x.name or "x"
        provenance = "{n}(x)I".format(n=name) if legs == (0, 1) else "I(x){n}".format(n=name)
        super().__init__(window3, provenance, err=x.err)
        self.x = x
        self.legs = legs
        ks, ms = window3.leg().leg_grid()
        emb = host.leg_index(ks, ms)
        self._pair_index = (emb[:, None] * host.leg_dim + emb[None, :]).ravel()
        self._host_dim = host.leg_dim ** 2

    def apply(self, v):
        L = self.window.leg_dim
        V = np.asarray(v, dtype=np.complex128).reshape(L, L, L)
        M = V.reshape(L * L, L) if self.legs == (0, 1) else V.reshape(L, L * L).T
        out = np.zeros_like(M)
        cols = np.flatnonzero(np.linalg.norm(M, axis=0) > 0)
        leak = 0.0
        if cols.size:
            X = np.zeros((self._host_dim, cols.size), dtype=np.complex128)
            X[self._pair_index] = M[:, cols]
            Y = np.asarray(apply(self.x, X))
            R = Y[self._pair_index]
            out[:, cols] = R
            leak = math.sqrt(max(np.linalg.norm(Y) ** 2 - np.linalg.norm(R) ** 2, 0.0))
        if self.legs == (1, 2):
            out = out.T
        return out.reshape(-1), leak, self.err


def _input_level(word):
    return word.n if isinstance(word, WordIndex) else word.b


def _escapes(legs, k_max):
    """A word past the top level that still acts on window vectors"""
    return (any(word.top_level >= k_max for word in legs) and
            all(_input_level(word) < k_max for word in legs))


class LiftedCarrier(collections.namedtuple("LiftedCarrier", "op err escape")):
    """
    Synthesized lift of x c_ab on the triple window. ``err`` bounds the
    compression error, ``escape`` the summed modulus of the words mapping
    window vectors past the top level.
    """
    pass


class MultiplierLift(TripleOperator):
    """
    (Delta_0 (x) id)(x) (side="left") or (id (x) Delta_0)(x) (side="right")
    for a two-leg operator x, evaluated carrier by carrier.

    x is known only up to x.err, so its word coefficients are extracted within
    tol + x.err.
    """

    def __init__(self, x, side, window3, tol, cutoff=None):
        pos = _leg_position(side)
        super().__init__(window3, "Delta_0 lift of {n} on the {s} leg".format(n=x.name or "x", s=side),
                         err=x.err)
        self.x = x
        self.side = side
        self.pos = pos
        self.tol = tol
        self.extract_tol = tol + x.err
        self.cutoff = tol / 100.0 if cutoff is None else cutoff
        self._cache = {}

    def _extractable(self, a, b):
        top = self.x.window.k_max - self.x.order - self.x.level_margin
        return a < top and b < top

    def lifted(self, a, b):
        """LiftedCarrier of the carrier c_ab"""
        key = (a, b)
        if key not in self._cache:
            host = self.x.window
            xc = compose(self.x, word_sum_op(carrier_word(a, b), host))
            coeffs = extract_tensor_coeffs(xc, (J_LEG, J_LEG), self.extract_tol, input_levels=(a, b),
                                           windings=LIFT_PROBE_WINDINGS, cutoff=self.cutoff)
            lifted = delta0_leg(coeffs.to_word_sum(), self.pos)
            w3 = self.window
            kept, escape = [], 0.0
            for c, legs in lifted:
                if all(word.top_level < w3.k_max for word in legs):
                    kept.append((c, legs))
                elif _escapes(legs, w3.k_max):
                    escape += abs(c)
            op = word_sum_op(TensorWordSum(kept, order=3), w3)
            err = self.x.err + coeffs.err + coeffs.spread
            self._cache[key] = LiftedCarrier(op, err, escape)
            log.debug("Lifted carrier %s: %d words, err=%.3g escape=%.3g", key, len(kept), err, escape)
        return self._cache[key]

    def apply(self, v):
        v = np.asarray(v, dtype=np.complex128)
        out = np.zeros_like(v)
        lost, err = 0.0, 0.0
        for a, b in carriers(self.window.k_max):
            mask = carrier_mask(self.window, self.side, a, b)
            part = np.where(mask, v, 0.0)
            size = float(np.linalg.norm(part))
            if size == 0.0:
                continue
            if size <= self.cutoff or not self._extractable(a, b):
                lost += size
                continue
            lc = self.lifted(a, b)
            out += apply(lc.op, part)
            lost += lc.escape * size
            err = max(err, lc.err)
        return out, lost, err


def apply_chain(ops, v):
    """
    Apply triple operators right to left. Returns the image, the accumulated
    compression budget and the norm lost at the window boundary.
    """
    budget, lost = 0.0, 0.0
    for op in reversed(ops):
        v, leak, err = op(v)
        lost += leak
        budget += err * max(float(np.linalg.norm(v)), 1.0)
    return v, budget, lost


def triple_samples(window3, n, seed=0, max_level=2, max_winding=1):
    """Seeded unit vectors supported on low levels and central windings"""
    ks, ms = window3.leg().leg_grid()
    ok = (ks <= max_level) & (np.abs(ms) <= max_winding)
    legs = np.flatnonzero(ok)
    grids = np.meshgrid(legs, legs, legs, indexing="ij")
    idx = np.ravel_multi_index([g.ravel() for g in grids], window3.leg_shape)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = np.zeros(window3.dim, dtype=np.complex128)
        z = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
        v[idx] = z / np.linalg.norm(z)
        out.append(v)
    return out


def lift_delta0_leg(x, leg, window3, carrier, v, tol):
    """
    ((Delta_0 (x) id)(x)) ((Delta_0 (x) id)(c)) v for leg="left" (and the
    id (x) Delta_0 version for leg="right"), with c = c_ab the carrier (a, b).
    Returns the image vector, its error bound and the norm lost at the top level.
    """
    a, b = carrier
    lift = MultiplierLift(x, leg, window3, tol)
    if not lift._extractable(a, b):
        raise WindowError("Carrier {c} is outside the interior of {w}".format(c=carrier, w=x.window))
    lc = lift.lifted(a, b)
    part = np.where(carrier_mask(window3, leg, a, b), np.asarray(v, dtype=np.complex128), 0.0)
    return apply(lc.op, part), lc.err, lc.escape * float(np.linalg.norm(part))


def _host_window(host):
    return host if host is not None else TruncationWindow(10, 10, 2)


def _bundle(q, host, tol, bundle, power_budget, series_budget):
    if bundle is not None:
        return bundle
    return u_q(q, _host_window(host), tol, power_budget=power_budget,
               series_budget=series_budget)


def _extraction_failure(check, command, q, error, anchor, params, measured=False):
    """Failed row for a check whose word extraction fell outside its tolerance"""
    log.error("%s at q=%s: %s", check, q, error)
    deviation = error.deviation if error.deviation is not None else 1.0
    tol = error.tol if error.tol is not None else 0.0
    return ResidualReport(check, command, q, max(deviation, tol), tol, anchor=anchor,
                          params=dict(params, error=str(error)), measured=measured)


def pseudo_cocycle_probe(q, window3, samples, tol, host=None, bundle=None, seed=0,
                         command=None, power_budget=512, series_budget=2048,
                         words=("S", "T")):
    """
    c = (id (x) Delta_0)(U*) (I (x) U*) (U (x) I) (Delta_0 (x) id)(U) commutes
    with (Delta_0 (x) id)Delta_0(x); one row per x with the largest
    commutator residual over the samples.

    Norm pushed past the top level of the triple window is added to the
    residual rather than to the budget. A word whose lifts cannot be extracted
    within tolerance gets a failed row.
    """
    w3 = window3.with_order(3)
    bundle = _bundle(q, host, tol, bundle, power_budget, series_budget)
    U = bundle.u
    chain = [MultiplierLift(U.H, RIGHT, w3, tol),
             LegPairOperator(U.H, w3, (1, 2)),
             LegPairOperator(U, w3, (0, 1)),
             MultiplierLift(U, LEFT, w3, tol)]
    vectors = triple_samples(w3, samples, seed=seed)
    anchor = "the pseudo-cocycle element commutes with (Delta_0(x)id)Delta_0(A)"
    rows = []
    for sx in words:
        check = "pseudo_cocycle_commutant_" + sx.lower().replace("*", "_star")
        params = dict(samples=len(vectors), word=sx, triple_k_max=w3.k_max, triple_m_max=w3.m_max)
        X3 = word_sum_op(delta0_leg(delta0_generators(sx), 0), w3)
        measured, budget, lost = 0.0, 0.0, 0.0
        try:
            for v in vectors:
                cxv, b1, l1 = apply_chain(chain, apply(X3, v))
                cv, b2, l2 = apply_chain(chain, v)
                measured = max(measured, float(np.linalg.norm(cxv - apply(X3, cv))))
                budget = max(budget, 2 * (b1 + b2))
                lost = max(lost, l1 + l2)
        except NotInIdealError as e:
            rows.append(_extraction_failure(check, command, q, e, anchor, params))
            continue
        rows.append(ResidualReport(check, command, q, measured + lost, budget + 10 * tol,
                                   anchor=anchor,
                                   params=dict(params, measured=measured, lost=lost)))
    return rows


def two_cocycle_residual(q, window3, samples, tol=1e-8, host=None, bundle=None, seed=0,
                         command=None, power_budget=512, series_budget=2048):
    """
    ||((U (x) I)(Delta_0 (x) id)(U) - (I (x) U)(id (x) Delta_0)(U)) w|| over
    sampled w. Whether U is a 2-cocycle is open, so the row is a measurement
    reported with its error budget and never gated. A failed extraction is
    gated.
    """
    w3 = window3.with_order(3)
    bundle = _bundle(q, host, tol, bundle, power_budget, series_budget)
    U = bundle.u
    lhs = [LegPairOperator(U, w3, (0, 1)), MultiplierLift(U, LEFT, w3, tol)]
    rhs = [LegPairOperator(U, w3, (1, 2)), MultiplierLift(U, RIGHT, w3, tol)]
    vectors = triple_samples(w3, samples, seed=seed)
    anchor = "(U(x)I)(Delta_0(x)id)(U) = (I(x)U)(id(x)Delta_0)(U)"
    params = dict(samples=len(vectors), triple_k_max=w3.k_max, triple_m_max=w3.m_max)
    measured, budget, lost = 0.0, 0.0, 0.0
    try:
        for v in vectors:
            left, b1, l1 = apply_chain(lhs, v)
            right, b2, l2 = apply_chain(rhs, v)
            measured = max(measured, float(np.linalg.norm(left - right)))
            budget = max(budget, 2 * (b1 + b2))
            lost = max(lost, l1 + l2)
    except NotInIdealError as e:
        return _extraction_failure("two_cocycle", command, q, e, anchor, params)
    return ResidualReport("two_cocycle", command, q, measured + lost, budget + 10 * tol,
                          anchor=anchor, params=dict(params, measured=measured, lost=lost),
                          measured=True)


COUNIT_U_WORDS = ("S", "T", "S*", "T*", "TS*")


def counit_u_rows(bundle, command=None, words=COUNIT_U_WORDS, samples=None):
    """
    (epsilon (x) id)(U Delta_0(x)) = x = (id (x) epsilon)(U Delta_0(x)) on
    the built U, one row per side with the worst word.

    The slices are read off the Toeplitz band, where the ideal part of U still
    carries about 2 q^k; when that exceeds SYMBOL_RESOLUTION the rows are
    measurements.
    """
    q, tol = bundle.q, bundle.tol
    leg = bundle.window.leg()
    rows = []
    for side in (LEFT, RIGHT):
        check = "counit_u_built_" + side
        anchor = "(epsilon(x)id)(U Delta_0(x)) = x = (id(x)epsilon)(U Delta_0(x))"
        residual, budget, decay = 0.0, 0.0, 0.0
        failure = None
        for sx in words:
            x = compose(bundle.u, bundle.delta0(sx))
            band = interior_for(x).top_level - DEFAULT_TAIL_BAND + 1
            d = symbol_decay(q, band)
            decay = max(decay, d)
            xtol = tol + x.err + d
            try:
                sliced = eps_tensor_id(x, side, tol=xtol)
            except NotInIdealError as e:
                failure = _extraction_failure(check, command, q, e, anchor, dict(word=sx),
                                              measured=decay > SYMBOL_RESOLUTION)
                break
            op = sliced - word_sum_op(TensorWordSum.from_generators(sx), leg)
            interior = InteriorSet(leg, x.order, floor=0, level_order=x.level_margin + DEFAULT_TAIL_BAND)
            residual = max(residual, interior_residual(op, interior, samples=samples))
            budget = max(budget, sliced.err + xtol)
        if failure is not None:
            rows.append(failure)
            continue
        resolved = decay <= SYMBOL_RESOLUTION
        if not resolved:
            log.warning("%s at q=%.3g: band decay %.2e exceeds %.2e, not gated",
                        check, q, decay, SYMBOL_RESOLUTION)
        rows.append(ResidualReport(check, command, q, residual, budget, anchor=anchor,
                                   params=dict(words=list(words), decay=decay, resolved=resolved),
                                   measured=not resolved))
    return rows


def counit_factor_rows(bundle, command=None, max_power=2, max_winding=2, samples=None):
    """
    (epsilon (x) id) and (id (x) epsilon) of U Delta_0(T^m S^i T*^n) against
    T^m S^i T*^n, through U Delta_0(T^m S^i T*^n) = Delta_q(T)^m U~ Delta_0(S^i T*^n).
    Negative powers of T are read as powers of T*.
    """
    q, tol = bundle.q, bundle.tol
    base = bundle.window.leg()
    # the leg must host the interior of every product below at the locality margin
    need = max_power + max(max_power, max_winding) + locality_margin(q, tol) + 2
    leg = TruncationWindow(max(base.k_max, need), max(base.m_max, need), 1)
    rows = []
    symbolic = 0.0
    for side in (LEFT, RIGHT):
        pos = _leg_position(side)
        _, t_img = mixed_delta_q(q, side, 1.0, leg, tol, bundle.comult.power_budget,
                                 bundle.comult.series_budget)
        u_eps = eps_tensor_id(bundle.u_tilde, side, tol=max(tol, 1e-10), tail_band=0,
                              leading=u_tilde_leading(), leg_window=leg)
        s_star_s = word_op(WordIndex(0, 0, 0), leg)
        rows.append(relation_row("counit_u_tilde_" + side, command, q, u_eps - s_star_s,
                                 u_eps.err + 10 * tol,
                                 "(epsilon(x)id)(U~) = S*S = (id(x)epsilon)(U~)",
                                 samples=samples))
        residual, budget = 0.0, 0.0
        for m, n in itertools.product(range(max_power + 1), repeat=2):
            for i in range(-max_winding, max_winding + 1):
                tail = delta0_word(WordIndex(0, i, n)).apply_counit(pos)
                symbolic = max(symbolic, 0.0 if tail.is_close(
                    TensorWordSum.from_word(WordIndex(0, i, n))) else 1.0)
                factors = [t_img] * m + [u_eps, word_sum_op(tail, leg)]
                product = compose_all(*factors)
                op = product - word_op(WordIndex(m, i, n), leg)
                r = interior_residual(op, interior_for(op), samples=samples)
                residual = max(residual, r)
                budget = max(budget, 2 * product.err + 10 * tol)
        rows.append(ResidualReport("counit_u_" + side, command, q, residual, budget,
                                   anchor="(epsilon(x)id)(U) = I = (id(x)epsilon)(U)",
                                   params=dict(max_power=max_power, max_winding=max_winding)))
    rows.append(ResidualReport("counit_delta0_symbolic", command, q, symbolic, 0.0,
                               anchor="(epsilon(x)id)Delta_0(x) = x = (id(x)epsilon)Delta_0(x)"))
    return rows


def density_identity_rows(window, command=None, n_values=(0, 1, 2), samples=None):
    """Delta_0(S T*^n)(S(x)T) = delta_{n,0} S^2(x)I = delta_{n,0}(S(x)T + S^2T*(x)S*)Delta_0(S)"""
    w = window.with_order(2)
    residual = 0.0
    for n in n_values:
        terms = density_identity_terms(n)
        symbolic = max((abs(c) for c, _ in terms.lhs - terms.rhs), default=0.0)
        op = word_sum_op(terms.lhs, w) - word_sum_op(terms.rhs, w)
        residual = max(residual, symbolic,
                       interior_residual(op, interior_for(op), samples=samples))
        if n == 0:
            other = (TensorWordSum.from_word(WordIndex(0, 1, 0), QuotientWord(1, 0)) +
                     TensorWordSum.from_word(WordIndex(0, 2, 1), WordIndex(0, -1, 0)))
            third = other * delta0_generators("S")
            residual = max(residual, max((abs(c) for c, _ in third - terms.rhs), default=0.0))
    return ResidualReport("density_identity", command, None,
                          residual, 1e-12,
                          anchor="Delta_0(ST^-n)S(x)T = delta_n0 S^2(x)I",
                          params=dict(n_values=list(n_values)))


def _dense(x):
    return x.toarray() if scipy.sparse.issparse(x) else np.atleast_2d(np.asarray(x, dtype=np.complex128))


def _irrep_images(kind, t, q, levels):
    """(phi_q(a), phi_q(b), S) images under omega_t ("omega") or rho_t ("rho") as dense matrices"""
    if kind == "omega":
        oa, ob = Character(t).phi_images(q)
        return np.array([[oa]]), np.array([[ob]]), np.array([[0j]])
    a, b = rho_t_phi(t, q, levels)
    return _dense(a), _dense(b), _dense(rep_rho_t(t, levels).S)


def nonvanishing_norms(q, t, z, levels):
    """
    Norms of d (pi_1 (x) pi_2)(Delta_q(phi_q(b))) for the three representation
    pairs omega_t(x)rho_z, rho_t(x)omega_z, rho_t(x)rho_z, maximized over
    d in {S*(x)I, I(x)S*}.
    """
    out = {}
    for left, right in (("omega", "rho"), ("rho", "omega"), ("rho", "rho")):
        a1, b1, s1 = _irrep_images(left, t, q, levels)
        a2, b2, s2 = _irrep_images(right, z, q, levels)
        delta_b = np.kron(b1, a2) + np.kron(a1.conj().T, b2)
        best = 0.0
        for d in (np.kron(s1.conj().T, np.eye(a2.shape[0])),
                  np.kron(np.eye(a1.shape[0]), s2.conj().T)):
            best = max(best, float(np.linalg.norm(d @ delta_b, 2)))
        out["{l}_{r}".format(l=left, r=right)] = best
    return out


def nonvanishing_row(q, levels=8, n_pairs=4, seed=0, command=None):
    """None of omega_t(x)rho_z, rho_t(x)omega_z, rho_t(x)rho_z vanishes on D Delta_q(phi_q(b))"""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, size=(n_pairs, 2))
    smallest = math.inf
    for theta, eta in angles:
        norms = nonvanishing_norms(q, np.exp(1j * theta), np.exp(1j * eta), levels)
        smallest = min(smallest, min(norms.values()))
    return ResidualReport("ideal_nonvanishing", command, q, max(0.0, NONVANISHING_FLOOR - smallest), 0.0,
                          anchor="no representation in the list vanishes on D Delta_q(phi_q(b))",
                          params=dict(min_norm=smallest, pairs=n_pairs, levels=levels))


def extraction_rows(q, window, tol, command=None):
    """J extraction of phi_q(b) and S, and the rejection of T"""
    leg = window.leg()
    rows = []
    coeffs = extract_J_coeffs(gen_S(leg), tol)
    expected = {(WordIndex(0, 1, 0),): 1.0}
    dev = max(abs(coeffs.coefficients.get(k, 0) - expected.get(k, 0))
              for k in set(coeffs.coefficients) | set(expected))
    rows.append(ResidualReport("extract_j_s", command, q, dev, tol,
                               anchor="S = T^0 S^1 T*^0"))
    try:
        extract_J_coeffs(gen_T(leg), tol)
        rejected = 0.0
    except NotInIdealError:
        rejected = 1.0
    rows.append(ResidualReport("extract_j_rejects_t", command, q, 1.0 - rejected, 0.0,
                               anchor="T is not in J"))
    if q > 0:
        band_tol = max(tol, 2 * q ** (leg.k_max - 3))
        coeffs = extract_J_coeffs(phi_b(q, leg), band_tol)
        dev = max((abs(c - (q ** legs[0].m if legs[0].j == 1 and legs[0].m == legs[0].n else 0))
                   for legs, c in coeffs.items()), default=0.0)
        rows.append(ResidualReport("extract_j_phi_b", command, q, dev, band_tol,
                                   anchor="phi_q(b) = sum q^n T^n S T*^n"))
    return rows


def u_tilde_word_row(bundle, command=None):
    """
    The ideal part U~ - (I(x)I - TT*(x)TT*) read back as words of J (x) J,
    against the word series on every word the window can see.
    """
    q, tol, w = bundle.q, bundle.tol, bundle.window
    leading = u_tilde_leading()
    rest = bundle.u_tilde - word_sum_op(leading, w)
    coeffs = extract_tensor_coeffs(rest, (J_LEG, J_LEG), max(tol, 1e-10), tail_band=0)
    levels = set(interior_for(rest).levels.tolist())
    cutoff = coeffs.tol / 100.0
    expected = {}
    for c, legs in u_tilde_series_terms(q, w.k_max, tol) - leading:
        visible = all(word.n in levels and word.top_level < w.k_max and abs(word.j) <= w.m_max
                      for word in legs)
        if visible and abs(c) > cutoff:
            expected[legs] = c
    keys = set(expected) | set(coeffs.coefficients)
    dev = max((abs(coeffs[k] - expected.get(k, 0)) for k in keys), default=0.0)
    return ResidualReport("u_tilde_words", command, q, dev, coeffs.err + 10 * tol,
                          anchor="U~ - (I(x)I - TT*(x)TT*) lies in J(x)J with the lambda coefficients",
                          params=dict(nwords=len(coeffs), expected=len(expected)))
