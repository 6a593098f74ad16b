"""Finite-dimensional Hermitian spectral calculus and Loewner-order predicates.

Dense matrices are plain complex ``numpy`` arrays. Self-adjoint matrices are
wrapped in :class:`HermitianMatrix`, which is Hermitian bit-for-bit: the upper
triangle is always the conjugate mirror of the lower one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from opseq._jacobi import jacobi_sweeps

__all__ = [
    "EighError",
    "NotPSDError",
    "OrderTolerance",
    "DEFAULT_TOL",
    "HermitianMatrix",
    "SpectralDecomposition",
    "as_hermitian",
    "hermitian_part",
    "eigh",
    "op_norm",
    "min_eigenvalue",
    "is_psd",
    "loewner_leq",
    "sqrt_psd",
    "abs_op",
    "sqrt_contraction_gap",
    "GapPair",
]


class EighError(RuntimeError):
    """Jacobi iteration did not reach the off-diagonal target."""

    def __init__(self, off_residual: float, rotations: int):
        super().__init__(
            f"Jacobi eigensolver did not converge after {rotations} rotations; "
            f"off-diagonal Frobenius residual {off_residual:.3e}"
        )
        self.off_residual = off_residual
        self.rotations = rotations


class NotPSDError(ValueError):
    def __init__(self, min_eigenvalue: float, slack: float):
        super().__init__(
            f"matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.6e} "
            f"< -{slack:.3e}"
        )
        self.min_eigenvalue = min_eigenvalue
        self.slack = slack


@dataclass(frozen=True)
class OrderTolerance:
    """Numerical meaning of ``A >= 0``: ``lambda_min(A) >= -(eps + rel * ||A||)``."""

    eps: float = 1e-10
    rel: float = 1e-12

    def __post_init__(self):
        if not (self.eps >= 0 and self.rel >= 0):
            raise ValueError(f"tolerances must be nonnegative, got eps={self.eps}, rel={self.rel}")

    def slack(self, norm: float) -> float:
        return self.eps + self.rel * norm


DEFAULT_TOL = OrderTolerance()


class HermitianMatrix:
    """Self-adjoint matrix built from the lower triangle of ``entries``.

    The strict upper triangle of ``entries`` is ignored and replaced by the
    conjugate of the lower one; diagonal imaginary parts are dropped. Use
    :func:`as_hermitian` to construct from a full matrix with a symmetry check.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        low = np.tril(a, -1)
        full = low + low.conj().T
        full[np.diag_indices_from(full)] = a.diagonal().real
        full.flags.writeable = False
        self._a = full

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "HermitianMatrix":
        # caller guarantees a is exactly Hermitian
        obj = cls.__new__(cls)
        a = np.array(a, dtype=np.complex128)
        a.flags.writeable = False
        obj._a = a
        return obj

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianMatrix":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        """Full read-only matrix."""
        return self._a

    def packed(self) -> np.ndarray:
        """Row-major packed lower triangle, diagonal included."""
        return self._a[np.tril_indices(self.dim)].copy()

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, HermitianMatrix):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other._a
        return NotImplemented

    def __add__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return HermitianMatrix._trusted(self._a + b)

    def __sub__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return NotImplemented
        return HermitianMatrix._trusted(self._a - b)

    def __neg__(self):
        return HermitianMatrix._trusted(-self._a)

    def __mul__(self, c):
        if isinstance(c, (int, float, np.integer, np.floating)):
            return HermitianMatrix._trusted(self._a * float(c))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __matmul__(self, other):
        return self._a @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self._a

    def __eq__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self._a, other._a))

    __hash__ = None

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"


Operator = Union[HermitianMatrix, np.ndarray]


def _dense(m) -> np.ndarray:
    if isinstance(m, HermitianMatrix):
        return m.array
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def as_hermitian(m, atol: float | None = None) -> HermitianMatrix:
    """Wrap ``m`` as a :class:`HermitianMatrix` after checking ``m == m*``.

    ``atol`` defaults to ``1e-12 * max(1, max|m_ij|)``.
    """
    if isinstance(m, HermitianMatrix):
        return m
    a = _dense(m)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    limit = 1e-12 * scale if atol is None else atol
    asym = float(np.abs(a - a.conj().T).max(initial=0.0))
    if asym > limit:
        raise ValueError(f"matrix is not Hermitian: max |m - m*| = {asym:.3e} > {limit:.3e}")
    return HermitianMatrix(a)


def hermitian_part(m) -> HermitianMatrix:
    a = _dense(m)
    return HermitianMatrix(0.5 * (a + a.conj().T))


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> HermitianMatrix:
        """Functional calculus ``Q f(Lambda) Q*`` for a real-valued ``f``."""
        fv = np.asarray(f(self.eigenvalues), dtype=float)
        q = self.eigenvectors
        return HermitianMatrix((q * fv) @ q.conj().T)

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T


def eigh(a: Operator) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm is at most
    ``1e-14 * ||A||_F``, with a cap of ``30 * dim**2`` rotations.
    Eigenvalues are returned ascending; ties keep their diagonal order.
    """
    h = a if isinstance(a, HermitianMatrix) else as_hermitian(a)
    work = np.array(h.array, dtype=np.complex128, order="C")
    n = h.dim
    v = np.eye(n, dtype=np.complex128)
    fro = float(np.linalg.norm(work))
    rotations, off = jacobi_sweeps(work, v, 1e-14 * fro, 30 * n * n)
    if rotations < 0:
        raise EighError(off, 30 * n * n)
    w = work.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    q = v[:, order]
    w.flags.writeable = False
    q.flags.writeable = False
    return SpectralDecomposition(w, q)


def _is_exactly_hermitian(a: np.ndarray) -> bool:
    return bool(np.array_equal(a, a.conj().T))


def op_norm(m: Operator) -> float:
    """Operator 2-norm: ``max |lambda|`` for Hermitian input, else ``sqrt(lambda_max(M*M))``."""
    if isinstance(m, HermitianMatrix):
        w = eigh(m).eigenvalues
        return float(max(abs(w[0]), abs(w[-1])))
    a = _dense(m)
    if _is_exactly_hermitian(a):
        return op_norm(HermitianMatrix._trusted(a))
    gram = HermitianMatrix(a.conj().T @ a)
    return float(np.sqrt(max(eigh(gram).eigenvalues[-1], 0.0)))


def min_eigenvalue(a: Operator) -> float:
    return float(eigh(a).eigenvalues[0])


def _psd_report(a: HermitianMatrix, tol: OrderTolerance) -> tuple[bool, float, float]:
    w = eigh(a).eigenvalues
    norm = float(max(abs(w[0]), abs(w[-1])))
    slack = tol.slack(norm)
    return bool(w[0] >= -slack), float(w[0]), slack


def is_psd(a: Operator, tol: OrderTolerance = DEFAULT_TOL) -> bool:
    h = a if isinstance(a, HermitianMatrix) else as_hermitian(a)
    return _psd_report(h, tol)[0]


def loewner_leq(a: Operator, b: Operator, tol: OrderTolerance = DEFAULT_TOL) -> bool:
    """``A <= B`` in the Loewner order, i.e. ``B - A`` is positive semidefinite."""
    ha = a if isinstance(a, HermitianMatrix) else as_hermitian(a)
    hb = b if isinstance(b, HermitianMatrix) else as_hermitian(b)
    if ha.dim != hb.dim:
        raise ValueError(f"dimension mismatch: {ha.dim} vs {hb.dim}")
    return is_psd(hb - ha, tol)


def sqrt_psd(a: Operator, tol: OrderTolerance = DEFAULT_TOL) -> HermitianMatrix:
    """The unique positive square root of a PSD matrix.

    Eigenvalues in ``[-slack, 0)`` are clamped to zero before the square root;
    anything more negative raises :class:`NotPSDError`.
    """
    h = a if isinstance(a, HermitianMatrix) else as_hermitian(a)
    dec = eigh(h)
    w = dec.eigenvalues
    norm = float(max(abs(w[0]), abs(w[-1])))
    slack = tol.slack(norm)
    if w[0] < -slack:
        raise NotPSDError(float(w[0]), slack)
    return dec.apply(lambda lam: np.sqrt(np.maximum(lam, 0.0)))


def abs_op(m: Operator) -> HermitianMatrix:
    """Modulus ``|M| = sqrt(M* M)``.

    For a :class:`HermitianMatrix` this is evaluated as ``Q |Lambda| Q*`` from a
    single decomposition of ``M``, which agrees with ``sqrt(M^2)`` but does not
    square the condition number of small eigenvalues.
    """
    if isinstance(m, HermitianMatrix):
        return eigh(m).apply(np.abs)
    a = _dense(m)
    gram = HermitianMatrix(a.conj().T @ a)
    # M*M is PSD by construction; only rounding can push eigenvalues below zero
    return eigh(gram).apply(lambda lam: np.sqrt(np.maximum(lam, 0.0)))


class GapPair(NamedTuple):
    lhs: float
    rhs: float

    def holds(self, rtol: float = 1e-8) -> bool:
        return self.lhs <= self.rhs + rtol * max(1.0, self.rhs)


def sqrt_contraction_gap(
    b: Operator, c: Operator, tol: OrderTolerance = DEFAULT_TOL
) -> GapPair:
    """Both sides of ``||sqrt(B) - sqrt(C)|| <= sqrt(||B - C||)`` for PSD ``B``, ``C``."""
    hb = b if isinstance(b, HermitianMatrix) else as_hermitian(b)
    hc = c if isinstance(c, HermitianMatrix) else as_hermitian(c)
    lhs = op_norm(sqrt_psd(hb, tol) - sqrt_psd(hc, tol))
    rhs = float(np.sqrt(op_norm(hb - hc)))
    return GapPair(lhs, rhs)
