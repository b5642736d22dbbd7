"""
Symbolic words of the dense subalgebra of A.

Two word families span it:

- ``WordIndex(m, j, n)`` is T^m S^j T*^n with S^0 = S*S and S^-1 = S*. In the
  faithful representation it sends xi(n, x) to xi(m, x + j) and kills every
  other level, so these words span the ideal J.
- ``QuotientWord(a, b)`` is T^a T*^b, sending xi(k, x) to xi(k + a - b, x)
  for k >= b.

Products of words are again (sums of) words. A sum is kept in canonical form,
where every QuotientWord has min(a, b) = 0, using
T^c T*^c = I - sum_{i<c} W(i, 0, i); in that form the words are linearly
independent, so two sums are equal iff their term dicts are equal.
"""

import itertools
import logging
import re
from collections import namedtuple

log = logging.getLogger(__name__)

_GENERATOR_RX = re.compile(r"(S\*|T\*|S|T|I)")


class WordIndex(namedtuple("WordIndex", "m j n")):

    def __new__(cls, m, j, n):
        m, j, n = int(m), int(j), int(n)
        if m < 0 or n < 0:
            raise ValueError(
                "Word T^{m} S^{j} T*^{n} needs m, n >= 0".format(m=m, j=j, n=n))
        return super().__new__(cls, m, j, n)

    def __str__(self):
        return _NAMES.get(self, "W({m},{j},{n})".format(m=self.m, j=self.j, n=self.n))

    @property
    def reach(self):
        return max(abs(self.m - self.n), abs(self.j))

    @property
    def top_level(self):
        return max(self.m, self.n)

    @property
    def counit(self):
        # every ideal word carries an S, S* or S*S factor
        return 0

    def adjoint(self):
        return WordIndex(self.n, -self.j, self.m)


class QuotientWord(namedtuple("QuotientWord", "a b")):

    def __new__(cls, a, b):
        a, b = int(a), int(b)
        if a < 0 or b < 0:
            raise ValueError(
                "Word T^{a} T*^{b} needs a, b >= 0".format(a=a, b=b))
        return super().__new__(cls, a, b)

    def __str__(self):
        return _NAMES.get(self, "Q({a},{b})".format(a=self.a, b=self.b))

    @property
    def reach(self):
        return abs(self.a - self.b)

    @property
    def top_level(self):
        return max(self.a, self.b)

    @property
    def counit(self):
        return 1

    @property
    def degree(self):
        """Winding of the image in C(T): pi(T^a T*^b) = z^(a - b)"""
        return self.a - self.b

    def adjoint(self):
        return QuotientWord(self.b, self.a)


IDENTITY = QuotientWord(0, 0)

GENERATORS = {"I": IDENTITY,
              "T": QuotientWord(1, 0),
              "T*": QuotientWord(0, 1),
              "S": WordIndex(0, 1, 0),
              "S*": WordIndex(0, -1, 0)}

_NAMES = {w: k for k, w in GENERATORS.items()}
_NAMES[WordIndex(0, 0, 0)] = "S*S"


def canonical_terms(word):
    """
    Expand a word into canonical (coefficient, word) terms.

    Only QuotientWords with both exponents positive are rewritten.
    """
    if isinstance(word, WordIndex):
        return [(1, word)]
    c = min(word.a, word.b)
    if c == 0:
        return [(1, word)]
    a, b = word.a - c, word.b - c
    terms = [(1, QuotientWord(a, b))]
    terms.extend((-1, WordIndex(a + i, 0, b + i)) for i in range(c))
    return terms


def word_product(left, right):
    """Normal-ordered product left * right as canonical (coefficient, word) terms"""
    if isinstance(left, WordIndex):
        if isinstance(right, WordIndex):
            if left.n != right.m:
                return []
            return [(1, WordIndex(left.m, left.j + right.j, right.n))]
        if left.n < right.a:
            return []
        return [(1, WordIndex(left.m, left.j, left.n - right.a + right.b))]
    if isinstance(right, WordIndex):
        if right.m < left.b:
            return []
        return [(1, WordIndex(right.m - left.b + left.a, right.j, right.n))]
    a = left.a + max(right.a - left.b, 0)
    b = right.b + max(left.b - right.a, 0)
    return canonical_terms(QuotientWord(a, b))


def parse_generator_word(sx):
    """
    Split a generator product such as "TS*" or "S*S" into tokens.

    >>> parse_generator_word("TS*")
    ['T', 'S*']
    """
    s = sx.replace(" ", "")
    tokens = _GENERATOR_RX.findall(s)
    if not s or "".join(tokens) != s:
        raise ValueError("Unable to parse generator word '{s}'".format(s=sx))
    return tokens


class TensorWordSum:
    """
    Finite linear combination of tensor products of words.

    Terms are stored as {(word_1, ..., word_order): coefficient} in canonical
    form. ``order`` is the number of tensor legs (1 for plain word sums).
    """

    def __init__(self, terms=None, order=None):
        self._terms = {}
        self._order = order
        if terms is not None:
            for coeff, legs in terms:
                self._accumulate(coeff, tuple(legs))

    def _accumulate(self, coeff, legs):
        if coeff == 0:
            return
        if self._order is None:
            self._order = len(legs)
        elif len(legs) != self._order:
            raise ValueError(
                "Tensor order mismatch {a} != {b}".format(a=len(legs), b=self._order))
        for expansion in itertools.product(*[canonical_terms(w) for w in legs]):
            c = coeff
            for sign, _ in expansion:
                c = c * sign
            key = tuple(w for _, w in expansion)
            value = self._terms.get(key, 0) + c
            if value == 0:
                self._terms.pop(key, None)
            else:
                self._terms[key] = value

    @staticmethod
    def from_word(*legs, coeff=1):
        return TensorWordSum([(coeff, legs)])

    @staticmethod
    def from_generators(sx):
        """Single-leg sum of a generator product, e.g. "ST*" """
        acc = TensorWordSum.from_word(IDENTITY)
        for token in parse_generator_word(sx):
            acc = acc * TensorWordSum.from_word(GENERATORS[token])
        return acc

    @staticmethod
    def zero(order):
        return TensorWordSum(order=order)

    @property
    def order(self):
        return self._order

    @property
    def terms(self):
        return dict(self._terms)

    def __iter__(self):
        for legs in sorted(self._terms):
            yield self._terms[legs], legs

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, TensorWordSum):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "<TensorWordSum 0 >"
        parts = []
        for coeff, legs in self:
            name = "(x)".join(str(w) for w in legs)
            parts.append(name if coeff == 1 else "{c}*{n}".format(c=coeff, n=name))
        return "<TensorWordSum {s} >".format(s=" + ".join(parts))

    def __add__(self, other):
        out = TensorWordSum(order=self._order or other.order)
        for c, legs in itertools.chain(self, other):
            out._accumulate(c, legs)
        return out

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return TensorWordSum([(c * x, legs) for x, legs in self], order=self._order)

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, other):
        if not isinstance(other, TensorWordSum):
            return self.scale(other)
        if self._order is not None and other.order is not None and self._order != other.order:
            raise ValueError("Cannot multiply tensor orders {a} and {b}".format(
                a=self._order, b=other.order))
        out = TensorWordSum(order=self._order or other.order)
        for (c1, l1), (c2, l2) in itertools.product(self, other):
            leg_terms = [word_product(u, v) for u, v in zip(l1, l2)]
            for expansion in itertools.product(*leg_terms):
                c = c1 * c2
                for sign, _ in expansion:
                    c = c * sign
                out._accumulate(c, tuple(w for _, w in expansion))
        return out

    def adjoint(self):
        return TensorWordSum(
            [(c.conjugate(), tuple(w.adjoint() for w in legs)) for c, legs in self],
            order=self._order)

    def tensor(self, other):
        out = TensorWordSum(order=self._order + other.order)
        for (c1, l1), (c2, l2) in itertools.product(self, other):
            out._accumulate(c1 * c2, l1 + l2)
        return out

    def apply_counit(self, leg):
        """Contract tensor leg ``leg`` with the counit (T -> 1, S -> 0)"""
        if self._order == 1:
            raise ValueError("Cannot contract the only leg of a word sum")
        out = TensorWordSum(order=self._order - 1)
        for c, legs in self:
            if legs[leg].counit:
                out._accumulate(c, legs[:leg] + legs[leg + 1:])
        return out

    def max_reach(self):
        return max((max(w.reach for w in legs) for _, legs in self), default=0)

    def top_level(self):
        return max((max(w.top_level for w in legs) for _, legs in self), default=0)

    def is_close(self, other, atol=1e-12):
        diff = self - other
        return all(abs(c) <= atol for c, _ in diff)
