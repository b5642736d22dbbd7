"""
Core models shared by the operator, algebra and cli layers: truncation
windows, basis labels, the deformation parameter, the run configuration and
the package exceptions.
"""

import logging
from collections import namedtuple

import numpy as np

log = logging.getLogger(__name__)

# smallest window that still leaves a nondegenerate interior
MIN_K_MAX = 4
MIN_M_MAX = 4


class SuqtwistError(Exception):
    """Base error of the package"""
    pass


class WindowError(SuqtwistError, ValueError):
    """A window, interior or label placement constraint is violated"""
    pass


class WindowMismatchError(WindowError):
    """Operators or vectors living on different windows were combined"""
    pass


class BudgetExceededError(SuqtwistError):
    """A power or series budget is too small for the requested tolerance"""
    pass


class NotInIdealError(SuqtwistError):
    """Word coefficient extraction failed its spread or synthesis tolerance"""

    def __init__(self, message, deviation=None, tol=None):
        super().__init__(message)
        self.deviation = deviation
        self.tol = tol


class BasisIndex(namedtuple("BasisIndex", "k m")):
    """Label (k, m) of the basis vector xi(k, m) of l2(N x Z)"""

    def __repr__(self):
        return "xi({k},{m})".format(k=self.k, m=self.m)


class TruncationWindow(namedtuple("TruncationWindow", "k_max m_max tensor_order")):
    """
    Finite sub-lattice of N x Z hosting all matrices.

    Levels 0..k_max-1 and windings -m_max..m_max are retained in each of the
    ``tensor_order`` legs. Leg indices are row-major in (k, m); tensor indices
    follow the C-order convention of ``scipy.sparse.kron`` (first leg slowest).
    """

    def __new__(cls, k_max, m_max, tensor_order=1):
        k_max, m_max, tensor_order = int(k_max), int(m_max), int(tensor_order)
        if k_max < MIN_K_MAX or m_max < MIN_M_MAX:
            raise WindowError(
                "Window ({k},{m}) is below the minimum ({a},{b})".format(
                    k=k_max, m=m_max, a=MIN_K_MAX, b=MIN_M_MAX))
        if tensor_order not in (1, 2, 3):
            raise WindowError(
                "Unsupported tensor order {n}".format(n=tensor_order))
        return super().__new__(cls, k_max, m_max, tensor_order)

    def __repr__(self):
        return "<Window ({k},{m}) order:{n} dim:{d} >".format(
            k=self.k_max, m=self.m_max, n=self.tensor_order, d=self.dim)

    @property
    def leg_width(self):
        return 2 * self.m_max + 1

    @property
    def leg_dim(self):
        return self.k_max * self.leg_width

    @property
    def dim(self):
        return self.leg_dim ** self.tensor_order

    @property
    def leg_shape(self):
        return (self.leg_dim,) * self.tensor_order

    def with_order(self, tensor_order):
        return TruncationWindow(self.k_max, self.m_max, tensor_order)

    def leg(self):
        return self.with_order(1)

    def is_compatible(self, other):
        return self.k_max == other.k_max and self.m_max == other.m_max

    def contains(self, k, m):
        return 0 <= k < self.k_max and -self.m_max <= m <= self.m_max

    def leg_index(self, k, m):
        """Flat single-leg index of xi(k, m); works elementwise on arrays"""
        return k * self.leg_width + (m + self.m_max)

    def leg_label(self, i):
        k, r = divmod(int(i), self.leg_width)
        return BasisIndex(k, r - self.m_max)

    def leg_grid(self):
        """(levels, windings) arrays over all single-leg indices in order"""
        ks, ms = np.divmod(np.arange(self.leg_dim), self.leg_width)
        return ks, ms - self.m_max

    def index(self, *labels):
        """Flat index of a tensor basis vector given one (k, m) per leg"""
        if len(labels) != self.tensor_order:
            raise WindowError(
                "Expected {n} legs, got {x}".format(n=self.tensor_order, x=len(labels)))
        idx = 0
        for k, m in labels:
            if not self.contains(k, m):
                raise WindowError(
                    "Basis label ({k},{m}) is outside {w}".format(k=k, m=m, w=self))
            idx = idx * self.leg_dim + self.leg_index(k, m)
        return idx

    def label(self, i):
        """Inverse of index: tuple of BasisIndex, one per leg"""
        legs = np.unravel_index(int(i), self.leg_shape)
        return tuple(self.leg_label(x) for x in legs)

    def basis_vector(self, *labels):
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(*labels)] = 1.0
        return v


class DeformationParameter(namedtuple("DeformationParameter", "q")):
    """The parameter q of C(SU_q(2)), restricted to [0, 1)"""

    def __new__(cls, q):
        q = float(q)
        if not 0.0 <= q < 1.0:
            raise ValueError(
                "q must lie in [0, 1), got {q}".format(q=q))
        return super().__new__(cls, q)


class RunConfig:
    """
    Immutable configuration of a single CLI command.
    """

    FORMATS = ("json", "csv")

    def __init__(self, command, q_values, k_max=10, m_max=10, tol=1e-8,
                 power_budget=512, series_budget=2048, samples=100,
                 output=None, output_format="json", dump_ops=None, seed=0,
                 triple_k_max=6, triple_m_max=6, nproc=1):
        self._command = command
        self._q_values = tuple(DeformationParameter(q).q for q in q_values)
        if not self._q_values:
            raise ValueError("At least one q value is required")
        # raises WindowError on undersized windows
        TruncationWindow(k_max, m_max, 2)
        TruncationWindow(triple_k_max, triple_m_max, 3)
        if not 0.0 < tol < 1.0:
            raise ValueError("tol must lie in (0, 1), got {t}".format(t=tol))
        for name, value in (("power_budget", power_budget),
                            ("series_budget", series_budget),
                            ("samples", samples), ("nproc", nproc)):
            if int(value) < 1:
                raise ValueError(
                    "{n} must be positive, got {v}".format(n=name, v=value))
        if output_format not in self.FORMATS:
            raise ValueError(
                "Unsupported format '{f}'".format(f=output_format))
        self._k_max = int(k_max)
        self._m_max = int(m_max)
        self._triple_k_max = int(triple_k_max)
        self._triple_m_max = int(triple_m_max)
        self._tol = float(tol)
        self._power_budget = int(power_budget)
        self._series_budget = int(series_budget)
        self._samples = int(samples)
        self._output = output
        self._output_format = output_format
        self._dump_ops = dump_ops
        self._seed = int(seed)
        self._nproc = int(nproc)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, c=self.command,
                  q=",".join(str(q) for q in self.q_values),
                  w=(self.k_max, self.m_max), t=self.tol)
        return "<{k} {c} q:{q} window:{w} tol:{t} >".format(**_d)

    @property
    def command(self):
        return self._command

    @property
    def q_values(self):
        return self._q_values

    @property
    def k_max(self):
        return self._k_max

    @property
    def m_max(self):
        return self._m_max

    @property
    def tol(self):
        return self._tol

    @property
    def power_budget(self):
        return self._power_budget

    @property
    def series_budget(self):
        return self._series_budget

    @property
    def samples(self):
        return self._samples

    @property
    def output(self):
        return self._output

    @property
    def output_format(self):
        return self._output_format

    @property
    def dump_ops(self):
        return self._dump_ops

    @property
    def seed(self):
        return self._seed

    @property
    def nproc(self):
        return self._nproc

    def window(self, tensor_order=2):
        return TruncationWindow(self.k_max, self.m_max, tensor_order)

    def triple_window(self):
        return TruncationWindow(self._triple_k_max, self._triple_m_max, 3)

    def with_q_values(self, q_values):
        d = self.to_dict()
        d.pop("command")
        d["q_values"] = q_values
        return RunConfig(self.command, **d)

    def to_dict(self):
        return dict(command=self.command,
                    q_values=list(self.q_values),
                    k_max=self.k_max,
                    m_max=self.m_max,
                    triple_k_max=self._triple_k_max,
                    triple_m_max=self._triple_m_max,
                    tol=self.tol,
                    power_budget=self.power_budget,
                    series_budget=self.series_budget,
                    samples=self.samples,
                    output=self.output,
                    output_format=self.output_format,
                    dump_ops=self.dump_ops,
                    seed=self.seed,
                    nproc=self.nproc)

    @staticmethod
    def from_args(args, command, default_q_values):
        q_values = args.q if args.q else default_q_values
        return RunConfig(command, q_values,
                         k_max=args.kmax,
                         m_max=args.mmax,
                         tol=args.tol,
                         power_budget=args.power_budget,
                         series_budget=args.series_budget,
                         samples=args.samples,
                         output=args.out,
                         output_format=args.format,
                         dump_ops=args.dump_ops,
                         seed=args.seed,
                         triple_k_max=args.triple_kmax,
                         triple_m_max=args.triple_mmax,
                         nproc=args.nproc)
