"""
Text dumps of operators.

One nonzero entry per line, "k1 m1 [k2 m2 ...] | k1' m1' [...] | re im" with
the row labels first, after a short '#' header naming the window.
"""

import logging
import re

import numpy as np

from suqtwist.models.common import TruncationWindow, WindowError
from suqtwist.operators.core import from_entries, apply

log = logging.getLogger(__name__)

__all__ = [
    "dump_operator",
    "load_operator_dump",
    "OperatorDump",
]

_HEADER_RX = re.compile(r"^#\s*(\w+)\s+(.*)$")
_WINDOW_RX = re.compile(r"k_max=(\d+)\s+m_max=(\d+)\s+tensor_order=(\d+)")

_BLOCK_WIDTH = 64


class OperatorDump:
    """Entries read back from a dump"""

    def __init__(self, window, entries, name=None, err=0.0):
        self.window = window
        self.entries = dict(entries)
        self.name = name
        self.err = float(err)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, n=self.name, w=self.window, x=len(self.entries))
        return "<{k} {n} {w} nentries:{x} >".format(**_d)

    def __len__(self):
        return len(self.entries)

    def to_operator(self, reach=0):
        return from_entries(self.window, self.entries, reach, name=self.name).evolve(err=self.err)


def _format_labels(labels):
    return " ".join("{k} {m}".format(k=k, m=m) for k, m in labels)


def _iter_entries(op, columns, cutoff):
    w = op.window
    if op.is_materialized and columns is None:
        coo = op.matrix.tocoo()
        for r, c, v in zip(coo.row, coo.col, coo.data):
            if abs(v) > cutoff:
                yield r, c, v
        return
    if columns is None:
        raise WindowError("A lazy operator on {w} is dumped on explicit columns only".format(w=w))
    columns = np.asarray(columns)
    for start in range(0, columns.size, _BLOCK_WIDTH):
        chunk = columns[start:start + _BLOCK_WIDTH]
        block = np.zeros((w.dim, chunk.size), dtype=np.complex128)
        block[chunk, np.arange(chunk.size)] = 1.0
        out = np.asarray(apply(op, block))
        rows, cols = np.nonzero(np.abs(out) > cutoff)
        for r, j in zip(rows, cols):
            yield r, chunk[j], out[r, j]


def dump_operator(op, path, columns=None, cutoff=0.0):
    """
    Write the entries of ``op`` to ``path``. Materialized operators dump all
    their entries; lazy ones are evaluated on the given column indices.
    Returns the number of entries written.
    """
    w = op.window
    n = 0
    with open(path, 'w') as f:
        f.write("# name {n}\n".format(n=op.name or "op"))
        f.write("# window k_max={k} m_max={m} tensor_order={t}\n".format(
            k=w.k_max, m=w.m_max, t=w.tensor_order))
        f.write("# err {e:.17g}\n".format(e=op.err))
        for r, c, v in _iter_entries(op, columns, cutoff):
            f.write("{r} | {c} | {re:.17g} {im:.17g}\n".format(
                r=_format_labels(w.label(r)), c=_format_labels(w.label(c)),
                re=v.real, im=v.imag))
            n += 1
    log.info("Dumped %d entries of %s to %s", n, op.name or "op", path)
    return n


def _parse_labels(s, order):
    xs = [int(x) for x in s.split()]
    if len(xs) != 2 * order:
        raise ValueError("Expected {n} basis labels, got '{s}'".format(n=order, s=s.strip()))
    return tuple((xs[2 * i], xs[2 * i + 1]) for i in range(order))


def _window_from(header, path):
    m = _WINDOW_RX.search(header.get("window", ""))
    if m is None:
        raise IOError("Missing window header in {p}".format(p=path))
    return TruncationWindow(*[int(x) for x in m.groups()])


def load_operator_dump(path):
    """Read a dump written by dump_operator"""
    header = {}
    entries = {}
    window = None
    with open(path, 'r') as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            m = _HEADER_RX.match(line)
            if m is not None:
                header[m.group(1)] = m.group(2).strip()
                continue
            if window is None:
                window = _window_from(header, path)
            parts = line.split("|")
            if len(parts) != 3:
                raise IOError("Malformed entry at {p}:{n}".format(p=path, n=lineno))
            row = _parse_labels(parts[0], window.tensor_order)
            col = _parse_labels(parts[1], window.tensor_order)
            re_, im = (float(x) for x in parts[2].split())
            entries[(row, col)] = complex(re_, im)
    if window is None:
        window = _window_from(header, path)
    return OperatorDump(window, entries, name=header.get("name"),
                        err=float(header.get("err", 0.0)))
