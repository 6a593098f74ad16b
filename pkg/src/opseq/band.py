"""Exact algebra for banded operators on l2(N) with eventually-constant diagonals.

Indexing starts at 0. The diagonal at offset ``k`` holds the entries
``A[t + max(k, 0), t + max(-k, 0)]`` for ``t >= 0``, so ``k > 0`` is below
the main diagonal. The forward shift ``S e_j = e_{j+1}`` lives on offset +1.

Every operation is a finite computation on the diagonal heads plus one tail
constant per diagonal; nothing is truncated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from opseq.hermitian import HermitianMatrix

__all__ = [
    "EvSeq",
    "BandOperator",
    "FinSuppVector",
    "basis",
    "identity",
    "zero",
    "shift_power",
    "band_adjoint",
    "band_compose",
    "band_linear_comb",
    "band_apply",
    "pairing",
    "finite_section",
    "band_equals",
    "is_selfadjoint",
    "shift_sum",
    "band_modulus",
]


@dataclass(frozen=True)
class EvSeq:
    """Sequence equal to ``head[t]`` for ``t < len(head)`` and ``tail`` afterwards."""

    head: tuple = ()
    tail: complex = 0j

    def __post_init__(self):
        tail = complex(self.tail)
        head = [complex(h) for h in self.head]
        while head and head[-1] == tail:
            head.pop()
        object.__setattr__(self, "head", tuple(head))
        object.__setattr__(self, "tail", tail)

    @classmethod
    def const(cls, value) -> "EvSeq":
        return cls((), value)

    def __getitem__(self, t: int) -> complex:
        if t < 0:
            raise IndexError(t)
        return self.head[t] if t < len(self.head) else self.tail

    @property
    def is_zero(self) -> bool:
        return not self.head and self.tail == 0

    def _zip(self, other: "EvSeq"):
        n = max(len(self.head), len(other.head))
        return [(self[t], other[t]) for t in range(n)]

    def __add__(self, other: "EvSeq") -> "EvSeq":
        return EvSeq(tuple(a + b for a, b in self._zip(other)), self.tail + other.tail)

    def __mul__(self, other):
        if isinstance(other, EvSeq):
            return EvSeq(tuple(a * b for a, b in self._zip(other)), self.tail * other.tail)
        c = complex(other)
        return EvSeq(tuple(c * h for h in self.head), c * self.tail)

    __rmul__ = __mul__

    def conj(self) -> "EvSeq":
        return EvSeq(tuple(h.conjugate() for h in self.head), self.tail.conjugate())

    def shifted(self, c: int) -> "EvSeq":
        """``t -> self[t + c]``, reading as 0 where ``t + c < 0``."""
        if c >= 0:
            return EvSeq(self.head[c:], self.tail)
        return EvSeq((0j,) * (-c) + self.head, self.tail)


_ZERO_SEQ = EvSeq()


class BandOperator:
    """Banded operator on l2(N); diagonals keyed by offset, zero ones dropped."""

    __slots__ = ("_diags",)

    def __init__(self, diagonals: Mapping[int, EvSeq] | None = None):
        d = {}
        for k, seq in (diagonals or {}).items():
            if not isinstance(seq, EvSeq):
                seq = EvSeq(*seq) if isinstance(seq, tuple) else EvSeq.const(seq)
            if not seq.is_zero:
                d[int(k)] = seq
        self._diags = dict(sorted(d.items()))

    @property
    def diagonals(self) -> dict[int, EvSeq]:
        return dict(self._diags)

    @property
    def width(self) -> int:
        return max((abs(k) for k in self._diags), default=0)

    def diagonal(self, k: int) -> EvSeq:
        return self._diags.get(k, _ZERO_SEQ)

    def entry(self, i: int, j: int) -> complex:
        if i < 0 or j < 0:
            raise IndexError((i, j))
        seq = self._diags.get(i - j)
        return 0j if seq is None else seq[min(i, j)]

    def adjoint(self) -> "BandOperator":
        return BandOperator({-k: s.conj() for k, s in self._diags.items()})

    @property
    def H(self) -> "BandOperator":
        return self.adjoint()

    def __add__(self, other: "BandOperator") -> "BandOperator":
        if not isinstance(other, BandOperator):
            return NotImplemented
        return band_linear_comb([(1, self), (1, other)])

    def __sub__(self, other: "BandOperator") -> "BandOperator":
        if not isinstance(other, BandOperator):
            return NotImplemented
        return band_linear_comb([(1, self), (-1, other)])

    def __neg__(self) -> "BandOperator":
        return band_linear_comb([(-1, self)])

    def __mul__(self, c) -> "BandOperator":
        if isinstance(c, BandOperator):
            return NotImplemented
        return band_linear_comb([(c, self)])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, BandOperator):
            return band_compose(self, other)
        if isinstance(other, FinSuppVector):
            return band_apply(self, other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, BandOperator):
            return NotImplemented
        return band_equals(self, other)

    __hash__ = None

    def __repr__(self):
        parts = ", ".join(f"{k}: {s.head}|{s.tail}" for k, s in self._diags.items())
        return f"BandOperator({{{parts}}})"


@dataclass(frozen=True, init=False)
class FinSuppVector:
    """Finitely supported vector in l2(N); zero coefficients are never stored."""

    coeffs: tuple = ()

    def __init__(self, coeffs: Mapping[int, complex] | Iterable = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        clean = {}
        for i, c in items:
            i = int(i)
            if i < 0:
                raise ValueError(f"negative index {i}")
            c = complex(c)
            if c != 0:
                clean[i] = c
        object.__setattr__(self, "coeffs", tuple(sorted(clean.items())))

    @classmethod
    def from_dense(cls, values) -> "FinSuppVector":
        return cls(enumerate(np.asarray(values, dtype=complex)))

    def as_dict(self) -> dict[int, complex]:
        return dict(self.coeffs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.coeffs)

    @property
    def max_support(self) -> int:
        """Largest index carrying a nonzero coefficient; -1 for the zero vector."""
        return self.coeffs[-1][0] if self.coeffs else -1

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for _, c in self.coeffs)))

    def inner(self, other: "FinSuppVector") -> complex:
        """``<self, other>``, linear in ``self``."""
        o = other.as_dict()
        return sum((c * o[i].conjugate() for i, c in self.coeffs if i in o), 0j)

    def to_dense(self, n: int) -> np.ndarray:
        """Coordinates ``0..n-1``; coefficients beyond the window are dropped."""
        out = np.zeros(n, dtype=np.complex128)
        for i, c in self.coeffs:
            if i < n:
                out[i] = c
        return out

    def __add__(self, other: "FinSuppVector") -> "FinSuppVector":
        d = self.as_dict()
        for i, c in other.coeffs:
            d[i] = d.get(i, 0j) + c
        return FinSuppVector(d)

    def __mul__(self, c) -> "FinSuppVector":
        c = complex(c)
        return FinSuppVector({i: c * v for i, v in self.coeffs})

    __rmul__ = __mul__

    def __sub__(self, other: "FinSuppVector") -> "FinSuppVector":
        return self + (-1) * other


def basis(j: int) -> FinSuppVector:
    return FinSuppVector({j: 1.0})


def identity() -> BandOperator:
    return BandOperator({0: EvSeq.const(1.0)})


def zero() -> BandOperator:
    return BandOperator()


def shift_power(n: int) -> BandOperator:
    """``S**n`` for the forward unilateral shift ``e_j -> e_{j+1}``."""
    if n < 1:
        raise ValueError(f"shift power must be >= 1, got {n}")
    return BandOperator({n: EvSeq.const(1.0)})


def band_adjoint(a: BandOperator) -> BandOperator:
    return a.adjoint()


def band_compose(a: BandOperator, b: BandOperator) -> BandOperator:
    """Exact product ``A B``.

    For output offset ``k = p + q`` (``p`` from ``A``, ``q`` from ``B``) the
    summand at position ``t`` is ``A_p[t + max(k,0) - max(p,0)] *
    B_q[t + max(-k,0) + min(q,0)]``, absent when the intermediate index
    ``m = t + max(k,0) - p`` is negative; both shifted arguments equal
    ``min(i, m)`` and ``min(m, j)``, which go negative exactly when ``m`` does.
    """
    out: dict[int, EvSeq] = {}
    for p, sa in a._diags.items():
        for q, sb in b._diags.items():
            k = p + q
            left = sa.shifted(max(k, 0) - max(p, 0))
            right = sb.shifted(max(-k, 0) + min(q, 0))
            term = left * right
            out[k] = out[k] + term if k in out else term
    return BandOperator(out)


def band_linear_comb(terms: Iterable[tuple[complex, BandOperator]]) -> BandOperator:
    out: dict[int, EvSeq] = {}
    for c, op in terms:
        for k, s in op._diags.items():
            scaled = s * c
            out[k] = out[k] + scaled if k in out else scaled
    return BandOperator(out)


def band_apply(a: BandOperator, x: FinSuppVector) -> FinSuppVector:
    acc: dict[int, complex] = {}
    for j, xj in x.coeffs:
        for k, s in a._diags.items():
            i = j + k
            if i < 0:
                continue
            acc[i] = acc.get(i, 0j) + s[min(i, j)] * xj
    return FinSuppVector(acc)


def pairing(a: BandOperator, x: FinSuppVector, y: FinSuppVector) -> complex:
    """``<A x, y>``, linear in the first slot."""
    return band_apply(a, x).inner(y)


def band_equals(a: BandOperator, b: BandOperator) -> bool:
    """Operator equality on all of l2(N), decided on canonical diagonals."""
    return a._diags == b._diags


def is_selfadjoint(a: BandOperator) -> bool:
    return band_equals(a, a.adjoint())


def finite_section(a: BandOperator, n: int):
    """Upper-left ``n x n`` corner ``P_n A P_n``.

    Returns a :class:`HermitianMatrix` when ``A`` is self-adjoint, otherwise a
    dense complex array.
    """
    if n < 1:
        raise ValueError(f"section size must be >= 1, got {n}")
    m = np.zeros((n, n), dtype=np.complex128)
    for k, s in a._diags.items():
        r0, c0 = max(k, 0), max(-k, 0)
        for t in range(n - abs(k)):
            m[r0 + t, c0 + t] = s[t]
    if is_selfadjoint(a):
        return HermitianMatrix(m)
    return m


def shift_sum(n: int) -> BandOperator:
    """``S**n + (S**n)*``."""
    s = shift_power(n)
    return band_linear_comb([(1, s), (1, s.adjoint())])


def band_modulus(a: BandOperator) -> BandOperator:
    """``|A|`` when ``A* A`` is diagonal with nonnegative real entries.

    That covers isometries and their relatives (``|S**n| = I``). Other band
    operators have moduli outside this class; probe them through finite
    sections instead.
    """
    gram = a.adjoint() @ a
    if any(k != 0 for k in gram._diags):
        raise ValueError("A*A is not diagonal; modulus is not representable as a band operator")
    d = gram.diagonal(0)
    vals = d.head + (d.tail,)
    if any(v.imag != 0 or v.real < 0 for v in vals):
        raise ValueError("A*A diagonal has entries that are not nonnegative reals")
    root = EvSeq(tuple(np.sqrt(v.real) for v in d.head), np.sqrt(d.tail.real))
    return BandOperator({0: root})
