"""
Comultiplications of A.

Delta_0 is computed symbolically on words. Delta_q is computed numerically on
the tensor square of the faithful representation: Delta_q(S) as
Delta_q(phi_q(b)) composed with the spectral projection of
Delta_q(phi_q(bb*)) at 1, and Delta_q(T) as the polar part of
Delta_q(phi_q(a*)).
"""

import functools
import itertools
import logging
from collections import namedtuple

import numpy as np

from suqtwist.models.common import DeformationParameter, WindowError
from suqtwist.models.report import ResidualReport
from suqtwist.models.words import (WordIndex, TensorWordSum, GENERATORS,
                                   IDENTITY, parse_generator_word)
from suqtwist.operators.core import (identity, compose, compose_all, tensor,
                                     scale, power_projection, inv_sqrt,
                                     locality_margin, interior_residual, apply)
from suqtwist.algebra.suq2 import (phi_a, phi_b, gen_S, gen_T, word_sum_op,
                                   Character, relation_row)
from suqtwist.utils import stopwatch

log = logging.getLogger(__name__)

LEFT = "left"
RIGHT = "right"

# largest ideal decay at the read-off level for which a quotient symbol is gated
SYMBOL_RESOLUTION = 0.05

# slack on the slope bound of continuity increments
CONTINUITY_SLACK = 8.0

DensityIdentityTerms = namedtuple("DensityIdentityTerms", "lhs rhs")

_T, _TS = GENERATORS["T"], GENERATORS["T*"]
_S, _SS = GENERATORS["S"], GENERATORS["S*"]

_DELTA0_GENERATORS = {
    "I": TensorWordSum.from_word(IDENTITY, IDENTITY),
    "T": TensorWordSum.from_word(_T, _T),
    "T*": TensorWordSum.from_word(_TS, _TS),
    "S": TensorWordSum([(1, (_S, _TS)), (1, (_T, _S))]),
    "S*": TensorWordSum([(1, (_SS, _T)), (1, (_TS, _SS))]),
}


def _tokens(word):
    """Generator tokens of T^m S^j T*^n (S^0 = S*S, S^-1 = S*) or T^a T*^b"""
    if isinstance(word, WordIndex):
        if word.j > 0:
            s_block = ["S"] * word.j
        elif word.j < 0:
            s_block = ["S*"] * (-word.j)
        else:
            s_block = ["S*", "S"]
        return ["T"] * word.m + s_block + ["T*"] * word.n
    return ["T"] * word.a + ["T*"] * word.b


@functools.lru_cache(maxsize=4096)
def delta0_word(word):
    """
    Delta_0(w) as a normal-ordered TensorWordSum, by multiplicativity from
    Delta_0(T) = T(x)T and Delta_0(S) = S(x)T* + T(x)S.
    """
    acc = _DELTA0_GENERATORS["I"]
    for token in _tokens(word):
        acc = acc * _DELTA0_GENERATORS[token]
    return acc


def delta0_generators(sx):
    """Delta_0 of a generator product such as "ST*" """
    acc = _DELTA0_GENERATORS["I"]
    for token in parse_generator_word(sx):
        acc = acc * _DELTA0_GENERATORS[token]
    return acc


def delta0_leg(wsum, leg):
    """Apply Delta_0 to tensor leg ``leg`` of a word sum, raising its order by one"""
    terms = [(coeff * c, legs[:leg] + pair + legs[leg + 1:])
             for coeff, legs in wsum for c, pair in delta0_word(legs[leg])]
    return TensorWordSum(terms, order=wsum.order + 1)


def density_identity_terms(n):
    """
    The two sides of Delta_0(S T*^n)(S(x)T) = delta_{n,0} S^2(x)I, as word sums.
    """
    lhs = delta0_word(WordIndex(0, 1, n)) * TensorWordSum.from_word(_S, _T)
    rhs = TensorWordSum.from_word(WordIndex(0, 2, 0), IDENTITY) if n == 0 else TensorWordSum.zero(2)
    return DensityIdentityTerms(lhs, rhs)


def _two_leg(window):
    if window.tensor_order == 2:
        return window
    if window.tensor_order == 1:
        return window.with_order(2)
    raise WindowError("Expected a two-leg window, got {w}".format(w=window))


def delta_q_generators(q, window):
    """
    (rho(x)rho)Delta_q(phi_q(a)) = a(x)a - q b*(x)b and
    (rho(x)rho)Delta_q(phi_q(b)) = b(x)a + a*(x)b, held entrywise.
    """
    q = DeformationParameter(q).q
    leg = _two_leg(window).leg()
    a, b = phi_a(q, leg), phi_b(q, leg)
    da = tensor(a, a) - scale(tensor(b.H, b), q)
    db = tensor(b, a) + tensor(a.H, b)
    return da.evolve(name="Delta(a)"), db.evolve(name="Delta(b)")


def delta_q_S(q, window, tol, power_budget=512, generators=None):
    """
    Delta_q(S) = Delta_q(phi_q(b)) E, E the spectral projection of
    Delta_q(phi_q(bb*)) at the isolated eigenvalue 1 (gap q^2).
    """
    q = DeformationParameter(q).q
    _, db = generators or delta_q_generators(q, window)
    x = compose(db, db.H)
    proj = power_projection(x, q * q, tol, power_budget=power_budget,
                            margin=locality_margin(q, tol))
    return compose(db, proj).evolve(name="Delta(S)"), proj.evolve(name="E")


def delta_q_T(q, window, tol, series_budget=2048, generators=None):
    """
    Delta_q(T) = Delta_q(phi_q(a*)) |Delta_q(phi_q(a*))|^-1, where
    Delta_q(phi_q(aa*)) = I - q^2 Delta_q(phi_q(b*b)) is inverted under the
    square root by the binomial series.
    """
    q = DeformationParameter(q).q
    da, db = generators or delta_q_generators(q, window)
    y = compose(da, da.H)
    z = scale(compose(db.H, db), q * q)
    r = inv_sqrt(y, 1 - q * q, tol, series_budget=series_budget, defect=z,
                 margin=locality_margin(q, tol))
    return compose(da.H, r).evolve(name="Delta(T)")


class ComultiplicationSet:
    """
    Delta_q images of phi_q(a), phi_q(b), S and T on a two-leg window, with
    the tolerances used to build them.
    """

    def __init__(self, q, window, tol, power_budget=512, series_budget=2048):
        self.q = DeformationParameter(q).q
        self.window = _two_leg(window)
        self.tol = tol
        self.power_budget = power_budget
        self.series_budget = series_budget
        self.da, self.db = delta_q_generators(self.q, self.window)
        self.S, self.projection = delta_q_S(self.q, self.window, tol, power_budget,
                                            generators=(self.da, self.db))
        self.T = delta_q_T(self.q, self.window, tol, series_budget,
                           generators=(self.da, self.db))
        self._identity = identity(self.window)
        log.debug("Built %s", self)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, q=self.q, w=self.window,
                  p=self.projection.meta.get("power"),
                  n=self.T.meta.get("series_terms"), t=self.tol)
        return "<{k} q:{q} {w} power:{p} series_terms:{n} tol:{t} >".format(**_d)

    @property
    def margin(self):
        return locality_margin(self.q, self.tol)

    def generator(self, token):
        return {"I": self._identity, "T": self.T, "T*": self.T.H,
                "S": self.S, "S*": self.S.H}[token]

    def image(self, sx):
        """Delta_q of a generator product, e.g. "TS*", as a lazy composition"""
        tokens = parse_generator_word(sx) if isinstance(sx, str) else list(sx)
        return compose_all(*[self.generator(t) for t in tokens])

    def to_dict(self):
        return dict(q=self.q, k_max=self.window.k_max, m_max=self.window.m_max,
                    tol=self.tol, power=self.projection.meta.get("power"),
                    series_terms=self.T.meta.get("series_terms"),
                    margin=self.margin)


def validate_gap(comult, command=None, samples=None):
    """
    The spectrum of Delta_q(phi_q(bb*)) below 1 must lie in [0, q^2]:
    ||x (I - E)|| <= q^2 + tol on the interior.
    """
    x = compose(comult.db, comult.db.H)
    op = x - compose(x, comult.projection)
    return relation_row("comult_gap", command, comult.q, op,
                        comult.q ** 2 + comult.tol,
                        "1 is isolated in the spectrum of Delta_q(phi_q(bb*))",
                        samples=samples)


def transported_relations(comult, command=None, samples=None):
    """
    Relations of A pushed through Delta_q within 5 tol, and the partial
    isometry Delta_q(S)*Delta_q(S) = E within 2 tol
    """
    T, S, I = comult.T, comult.S, comult._identity
    tol = comult.tol
    rels = [("comult_rel_isometry", compose(T.H, T) - I, "Delta_q(T)*Delta_q(T) = I", 5 * tol),
            ("comult_rel_normal", compose(S.H, S) - compose(S, S.H), "Delta_q(S) normal", 5 * tol),
            ("comult_rel_partition", compose(T, T.H) + compose(S.H, S) - I,
             "Delta_q(T)Delta_q(T)* + Delta_q(S)*Delta_q(S) = I", 5 * tol),
            ("comult_partial_isometry", compose(S.H, S) - comult.projection,
             "Delta_q(S)*Delta_q(S) = E", 2 * tol)]
    return [relation_row(check, command, comult.q, op, budget, anchor, samples=samples)
            for check, op, anchor, budget in rels]


def homomorphism_checks(comult, command=None, samples=None):
    """
    Delta_q(x)Delta_q(y) against Delta_q(xy) for generator pairs whose product
    normal-orders to 0 or I.
    """
    rows = []
    tokens = ["T", "T*", "S", "S*"]
    for x, y in itertools.product(tokens, tokens):
        nf = TensorWordSum.from_generators(x + y)
        if len(nf) == 0:
            target = None
        elif nf == TensorWordSum.from_word(IDENTITY):
            target = comult._identity
        else:
            continue
        prod = comult.image([x, y])
        op = prod if target is None else prod - target
        check = "comult_hom_{x}_{y}".format(x=x, y=y).replace("*", "_star").lower()
        rows.append(relation_row(check, command, comult.q, op, 5 * comult.tol,
                                 "Delta_q({x}{y}) = Delta_q({x})Delta_q({y})".format(x=x, y=y),
                                 samples=samples))
    return rows


def mixed_delta_q(q, leg, t, window, tol, power_budget=512, series_budget=2048):
    """
    (omega_t(x)rho)Delta_q or (rho(x)omega_t)Delta_q of S and T on a single
    leg. The omega leg is one dimensional, so the generator images are
    scalar multiples of phi_q(a), phi_q(b):

    - left: Delta(a) -> conj(t) a, Delta(b) -> t b
    - right: Delta(a) -> conj(t) a, Delta(b) -> conj(t) b

    and the projection and polar constructions are repeated on them.
    """
    q = DeformationParameter(q).q
    omega = Character(t)
    w = window.leg()
    a, b = phi_a(q, w), phi_b(q, w)
    oa, _ = omega.phi_images(q)
    if leg == LEFT:
        da = scale(a, oa)
        db = scale(b, omega.t)
    elif leg == RIGHT:
        da = scale(a, oa)
        db = scale(b, oa)
    else:
        raise ValueError("leg must be '{l}' or '{r}', got {x}".format(l=LEFT, r=RIGHT, x=leg))
    margin = locality_margin(q, tol)
    proj = power_projection(compose(db, db.H), q * q, tol,
                            power_budget=power_budget, margin=margin)
    s_img = compose(db, proj)
    r = inv_sqrt(compose(da, da.H), 1 - q * q, tol, series_budget=series_budget,
                 defect=scale(compose(db.H, db), q * q), margin=margin)
    t_img = compose(da.H, r)
    return s_img.evolve(name="S_" + leg), t_img.evolve(name="T_" + leg)


def counit_checks(q, window, tol, command=None, power_budget=512, series_budget=2048):
    """(epsilon(x)id)Delta_q = id = (id(x)epsilon)Delta_q on S and T, within 3 tol"""
    w = window.leg()
    rows = []
    for leg in (LEFT, RIGHT):
        s_img, t_img = mixed_delta_q(q, leg, 1.0, w, tol, power_budget, series_budget)
        for name, img, target in (("s", s_img, gen_S(w)), ("t", t_img, gen_T(w))):
            rows.append(relation_row("counit_{l}_{n}".format(l=leg, n=name), command, q,
                                     img - target, 3 * tol,
                                     "(epsilon(x)id)Delta_q = id = (id(x)epsilon)Delta_q"))
    return rows


class QuotientSymbol:
    """
    Laurent coefficients of the image of an operator in C(T)^(x)n, read from
    matrix entries at high levels where ideal components vanish.
    """

    def __init__(self, coefficients, spread, j_residual, probe_level, probe_radius):
        self.coefficients = dict(coefficients)
        self.spread = float(spread)
        self.j_residual = float(j_residual)
        self.probe_level = int(probe_level)
        self.probe_radius = int(probe_radius)

    def __repr__(self):
        big = {d: c for d, c in self.coefficients.items() if abs(c) > 1e-6}
        _d = dict(k=self.__class__.__name__, c=big, s=self.spread, j=self.j_residual)
        return "<{k} {c} spread:{s:.2e} j_residual:{j:.2e} >".format(**_d)

    def coefficient(self, *degree):
        return self.coefficients.get(tuple(degree), 0j)

    def max_deviation(self, expected=None):
        expected = expected or {}
        keys = set(self.coefficients) | set(expected)
        return max(abs(self.coefficients.get(k, 0j) - expected.get(k, 0)) for k in keys)

    def vanishes(self, budget):
        return self.max_deviation() <= budget

    def matches(self, expected, budget):
        return self.max_deviation(expected) <= budget


def symbol_decay(q, probe_level):
    """Ideal components decay like q^k, so readings at level k carry 2 q^k"""
    return 2 * q ** probe_level


def symbol_budget(q, tol, probe_level, tail=0.0):
    return tol + symbol_decay(q, probe_level) + tail


def quotient_symbol(x, probe_radius=2, windings=(-1, 0, 1), top=None):
    """
    Estimate (pi(x)...(x)pi)(x) as a Laurent polynomial.

    Input levels [top - 2r, top - r) in every leg, degrees in [-r, r] in
    every leg, winding shift 0, averaged over the probe windings. ``top``
    defaults to the highest level below the host levels of x.
    """
    w = x.window
    r = int(probe_radius)
    top = w.k_max - x.level_margin if top is None else int(top)
    if r < 1 or top < 3 * r or top > w.k_max:
        raise WindowError("Probe radius {r} below level {t} does not fit {w}".format(r=r, t=top, w=w))
    if max(abs(m) for m in windings) > w.m_max:
        raise WindowError("Probe windings {x} outside {w}".format(x=windings, w=w))
    n = w.tensor_order
    levels = range(top - 2 * r, top - r)
    degrees = list(itertools.product(range(-r, r + 1), repeat=n))
    readings = {d: [] for d in degrees}
    j_residual = 0.0
    inputs = list(itertools.product(itertools.product(levels, windings), repeat=n))
    columns = np.zeros((w.dim, len(inputs)), dtype=np.complex128)
    for i, labels in enumerate(inputs):
        columns[w.index(*labels), i] = 1.0
    out = apply(x, columns)
    for i, labels in enumerate(inputs):
        col = np.array(out[:, i]).ravel()
        stencil = [w.index(*[(k + dk, m) for (k, m), dk in zip(labels, d)]) for d in degrees]
        for d, idx in zip(degrees, stencil):
            readings[d].append(col[idx])
        # mass the shift-0 stencil does not see
        off = col.copy()
        off[stencil] = 0.0
        j_residual = max(j_residual, float(np.linalg.norm(off)))
    coefficients = {}
    spread = 0.0
    for d, values in readings.items():
        values = np.asarray(values)
        mean = values.mean()
        coefficients[d] = complex(mean)
        spread = max(spread, float(np.max(np.abs(values - mean))))
    return QuotientSymbol(coefficients, spread, j_residual, levels[0], r)


def symbol_row(check, command, q, tol, x, expected=None, probe_radius=2, anchor="",
               top=None, tail=0.0):
    """
    Row comparing a quotient symbol with the expected Laurent coefficients.

    When the ideal decay at the read-off level exceeds SYMBOL_RESOLUTION the
    window cannot separate the symbol from J, and the row is reported as a
    measurement.
    """
    sym = quotient_symbol(x, probe_radius=probe_radius, top=top)
    decay = symbol_decay(q, sym.probe_level)
    budget = symbol_budget(q, tol, sym.probe_level, tail=tail)
    residual = max(sym.max_deviation(expected), sym.spread)
    resolved = decay <= SYMBOL_RESOLUTION
    if not resolved:
        log.warning("%s at q=%.3g: decay %.2e at level %d exceeds %.2e, not gated",
                    check, q, decay, sym.probe_level, SYMBOL_RESOLUTION)
    return ResidualReport(check, command, q, residual, budget, anchor=anchor,
                          params=dict(probe_level=sym.probe_level,
                                      probe_radius=probe_radius,
                                      spread=sym.spread,
                                      j_residual=sym.j_residual,
                                      decay=decay,
                                      resolved=resolved),
                          measured=not resolved)


def d_membership_rows(comult, command=None, probe_radius=2):
    """Delta_q(x) - Delta_0(x) has vanishing quotient symbol for x in {S, T}"""
    rows = []
    for name, op in (("s", comult.S), ("t", comult.T)):
        d0 = word_sum_op(delta0_generators(name.upper()), comult.window)
        rows.append(symbol_row("symbol_delta_{n}".format(n=name), command, comult.q,
                               comult.tol, op - d0, probe_radius=probe_radius,
                               anchor="Delta_q(x) - Delta_0(x) lies in D"))
    rows.append(symbol_row("symbol_delta_b", command, comult.q, comult.tol, comult.db,
                           probe_radius=probe_radius,
                           anchor="(pi(x)pi)(Delta_q(phi_q(b))) = 0"))
    rows.append(symbol_row("symbol_delta_a", command, comult.q, comult.tol, comult.da,
                           expected={(-1, -1): 1.0}, probe_radius=probe_radius,
                           anchor="(pi(x)pi)(Delta_q(phi_q(a))) = (pi(x)pi)(T*(x)T*)"))
    return rows


def lipschitz_estimate(q, levels):
    """
    Slope bound for q -> op(q) on a window with ``levels`` levels: the
    diagonal amplitudes q^k move at rate k q^(k-1), and functional calculus
    across the spectral gap 1 - q^2 divides by the gap.
    """
    rate = max(k * q ** (k - 1) for k in range(1, max(int(levels), 1) + 1))
    return CONTINUITY_SLACK * rate / (1.0 - q * q)


def step_bound(q0, q1, levels, factors=1):
    """
    Bound on one increment ||op(q1) - op(q0)|| of a contraction built from
    ``factors`` q dependent pieces, never above 2.
    """
    return min(2.0, factors * lipschitz_estimate(q1, levels) * abs(q1 - q0))


def continuity_probe(builder, q_grid, interior, check, command=None, bound=None,
                     anchor="q -> Delta_q(x) is norm continuous", samples=None,
                     factors=1):
    """
    ||op(q_(i+1)) - op(q_i)|| on a fixed interior for a sorted q grid; one row
    per step, bounded by ``bound`` or else by the step-size bound.
    """
    grid = list(q_grid)
    if grid != sorted(grid):
        raise ValueError("q grid must be sorted, got {g}".format(g=grid))
    for q in grid:
        DeformationParameter(q)
    levels = interior.window.k_max
    rows = []
    previous = builder(grid[0])
    for q0, q1 in zip(grid[:-1], grid[1:]):
        with stopwatch() as ms:
            op = builder(q1)
            residual = interior_residual(op - previous, interior, samples=samples)
        limit = step_bound(q0, q1, levels, factors) if bound is None else bound
        rows.append(ResidualReport(check, command, q1, residual, limit,
                                   anchor=anchor,
                                   params=dict(step=round(q1 - q0, 12), factors=factors),
                                   ms=ms[0]))
        previous = op
    return rows


def refinement_row(check, command, coarse_rows, fine_rows,
                   anchor="increments shrink under grid refinement"):
    """Halving the grid spacing must not increase the maximal increment"""
    coarse = max((r.residual for r in coarse_rows), default=0.0)
    fine = max((r.residual for r in fine_rows), default=0.0)
    return ResidualReport(check, command, None, fine, coarse + 1e-12, anchor=anchor,
                          params=dict(coarse_max=coarse, fine_max=fine,
                                      coarse_steps=len(coarse_rows),
                                      fine_steps=len(fine_rows)))


def comultiplication_rows(comult, command=None, samples=None, probe_radius=2):
    rows = [validate_gap(comult, command, samples)]
    rows.extend(transported_relations(comult, command, samples))
    rows.extend(homomorphism_checks(comult, command, samples))
    rows.extend(d_membership_rows(comult, command, probe_radius))
    return rows
