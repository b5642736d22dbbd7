"""
Matrix-free building blocks for lazy operator trees.

Each class is a ``scipy.sparse.linalg.LinearOperator`` evaluated purely by
action on vectors, so tensor windows of order >= 2 never materialize products.
Sums, products and scalings of these are left to scipy's own operator algebra.
"""

import logging

import numpy as np
import scipy.sparse.linalg

log = logging.getLogger(__name__)


def to_linear_operator(x):
    if isinstance(x, scipy.sparse.linalg.LinearOperator):
        return x
    return scipy.sparse.linalg.aslinearoperator(x)


class Kron(scipy.sparse.linalg.LinearOperator):
    """
    Kronecker product A (x) B of two square operators, in the C-order
    convention of ``scipy.sparse.kron`` (A acts on the slow index).
    """

    def __init__(self, A, B):
        self.A = to_linear_operator(A)
        self.B = to_linear_operator(B)
        n = self.A.shape[0] * self.B.shape[0]
        super().__init__(dtype=np.complex128, shape=(n, n))

    def _matvec(self, x):
        x = np.asarray(x, dtype=np.complex128)
        for M in (self.B, self.A):
            n = M.shape[0]
            x = x.reshape(-1, n).T
            x = M.matmat(x)
        return x.reshape(-1)

    def _matmat(self, X):
        return np.column_stack([self._matvec(X[:, i]) for i in range(X.shape[1])])

    def _adjoint(self):
        return Kron(self.A.H, self.B.H)


class Power(scipy.sparse.linalg.LinearOperator):
    """x^p applied as p successive actions of x"""

    def __init__(self, x, p):
        self.x = to_linear_operator(x)
        self.p = int(p)
        super().__init__(dtype=np.complex128, shape=self.x.shape)

    def _matvec(self, v):
        v = np.asarray(v, dtype=np.complex128)
        for _ in range(self.p):
            v = self.x.matvec(v)
        return v

    def _matmat(self, X):
        X = np.asarray(X, dtype=np.complex128)
        for _ in range(self.p):
            X = self.x.matmat(X)
        return X

    def _adjoint(self):
        return Power(self.x.H, self.p)


class PolynomialSeries(scipy.sparse.linalg.LinearOperator):
    """
    sum_k c_k Z^k evaluated by Horner's rule on each vector.
    """

    def __init__(self, Z, coefficients):
        self.Z = to_linear_operator(Z)
        self.coefficients = np.asarray(coefficients, dtype=np.complex128)
        super().__init__(dtype=np.complex128, shape=self.Z.shape)

    def _matvec(self, v):
        v = np.asarray(v, dtype=np.complex128)
        acc = self.coefficients[-1] * v
        for c in self.coefficients[-2::-1]:
            acc = c * v + self.Z.matvec(acc)
        return acc

    def _matmat(self, X):
        X = np.asarray(X, dtype=np.complex128)
        acc = self.coefficients[-1] * X
        for c in self.coefficients[-2::-1]:
            acc = c * X + self.Z.matmat(acc)
        return acc

    def _adjoint(self):
        return PolynomialSeries(self.Z.H, np.conj(self.coefficients))
