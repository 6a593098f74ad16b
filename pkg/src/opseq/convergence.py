"""Residual trajectories, convergence verdicts and the squeeze-rule harnesses.

Convergence of an operator sequence is judged on a finite horizon
``n = 1..n_max``: a trajectory of residuals is computed per topology and
classified by its last ``k`` values. Strong and weak topologies are probed on
finite test sets; every report records the probes it used.

Harness reports expose ``properties``, an ordered mapping from property name
to pass/fail, so callers can print or aggregate them uniformly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from opseq import band as bd
from opseq.band import BandOperator, FinSuppVector
from opseq.hermitian import (
    DEFAULT_TOL,
    HermitianMatrix,
    OrderTolerance,
    abs_op,
    eigh,
    hermitian_part,
    is_psd,
    loewner_leq,
    op_norm,
    sqrt_psd,
)

DEFAULT_RESIDUAL_TOL = 1e-6
DEFAULT_WINDOW = 5
STABILITY_DRIFT = 1e-3

Operator = Union[HermitianMatrix, np.ndarray, BandOperator]


class Mode(str, enum.Enum):
    NORM = "norm"
    STRONG = "strong"
    WEAK = "weak"


MODES = (Mode.NORM, Mode.STRONG, Mode.WEAK)


class Verdict(str, enum.Enum):
    CONVERGENT = "convergent"
    STALLED = "stalled"
    UNDETERMINED = "undetermined"


class PremiseViolation(ValueError):
    def __init__(self, index: int, premise: str):
        super().__init__(f"premise {premise!r} violated at n={index}")
        self.index = index
        self.premise = premise


# --------------------------------------------------------------------------
# sequences and probes


def _kind_of(op) -> str:
    return "band" if isinstance(op, BandOperator) else "dense"


def _dim_of(op) -> int:
    return op.dim if isinstance(op, HermitianMatrix) else np.asarray(op).shape[0]


@dataclass(frozen=True)
class OperatorSequence:
    """Operators ``element(1) .. element(horizon)``, all dense or all band."""

    element: Callable[[int], Operator]
    horizon: int
    kind: str = "dense"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.kind not in ("dense", "band"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")

    @classmethod
    def from_list(cls, items: Sequence[Operator]) -> "OperatorSequence":
        items = tuple(items)
        if not items:
            raise ValueError("empty sequence")
        kinds = {_kind_of(x) for x in items}
        if len(kinds) != 1:
            raise ValueError("mixed dense and band elements")
        kind = kinds.pop()
        if kind == "dense" and len({_dim_of(x) for x in items}) != 1:
            raise ValueError("dense elements must share one dimension")
        return cls(lambda n: items[n - 1], len(items), kind)

    @classmethod
    def from_function(cls, f: Callable[[int], Operator], horizon: int) -> "OperatorSequence":
        return cls(f, horizon, _kind_of(f(1)))

    def __getitem__(self, n: int) -> Operator:
        if not 1 <= n <= self.horizon:
            raise IndexError(f"index {n} outside 1..{self.horizon}")
        return self.element(n)

    def __iter__(self) -> Iterator[Operator]:
        for n in range(1, self.horizon + 1):
            yield self.element(n)

    def __len__(self) -> int:
        return self.horizon

    @property
    def dim(self) -> int:
        if self.kind != "dense":
            raise AttributeError("band sequences act on l2(N)")
        return _dim_of(self[1])

    def materialize(self) -> "OperatorSequence":
        return OperatorSequence.from_list(list(self))

    def map(self, f: Callable[[Operator], Operator]) -> "OperatorSequence":
        items = [f(x) for x in self]
        return OperatorSequence.from_list(items)

    def replace(self, n: int, op: Operator) -> "OperatorSequence":
        items = list(self)
        items[n - 1] = op
        return OperatorSequence.from_list(items)

    def non_selfadjoint_indices(self) -> list[int]:
        bad = []
        for n, x in enumerate(self, start=1):
            if isinstance(x, HermitianMatrix):
                continue
            if isinstance(x, BandOperator):
                ok = bd.is_selfadjoint(x)
            else:
                a = np.asarray(x)
                ok = bool(np.array_equal(a, a.conj().T))
            if not ok:
                bad.append(n)
        return bad


@dataclass(frozen=True)
class TestSet:
    """Finite surrogate for "every x in H".

    ``pairs`` indexes into ``vectors``; ``None`` means all ordered pairs.
    """

    __test__ = False

    vectors: tuple
    pairs: Optional[tuple] = None
    description: str = ""

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("test set needs at least one vector")
        vs = tuple(self.vectors)
        for v in vs:
            norm = v.norm() if isinstance(v, FinSuppVector) else float(np.linalg.norm(v))
            if norm == 0:
                raise ValueError("test vectors must be nonzero")
        object.__setattr__(self, "vectors", vs)
        if self.pairs is not None:
            object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    @property
    def kind(self) -> str:
        return "band" if isinstance(self.vectors[0], FinSuppVector) else "dense"

    def index_pairs(self) -> tuple:
        if self.pairs is not None:
            return self.pairs
        m = len(self.vectors)
        return tuple((i, j) for i in range(m) for j in range(m))

    def matrix(self) -> np.ndarray:
        return np.column_stack([np.asarray(v, dtype=np.complex128) for v in self.vectors])

    def max_norm(self) -> float:
        if self.kind == "band":
            return max(v.norm() for v in self.vectors)
        return float(np.linalg.norm(self.matrix(), axis=0).max())


def dense_test_set(dim: int, seed: int = 0, n_random: int = 8) -> TestSet:
    """Standard basis plus ``n_random`` seeded random complex unit vectors."""
    rng = np.random.default_rng([seed, dim, 0x7E])
    vecs = [np.eye(dim, dtype=np.complex128)[:, i] for i in range(dim)]
    for _ in range(n_random):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        vecs.append(v / np.linalg.norm(v))
    return TestSet(
        tuple(vecs), description=f"standard basis of C^{dim} + {n_random} random unit vectors (seed {seed})"
    )


def band_test_set(seed: int = 0, n_basis: int = 9, n_random: int = 2, max_index: int = 16) -> TestSet:
    """``e_0 .. e_{n_basis-1}`` plus random unit vectors supported in ``[0, max_index]``."""
    rng = np.random.default_rng([seed, 0x7B])
    vecs = [bd.basis(j) for j in range(n_basis)]
    for _ in range(n_random):
        v = rng.standard_normal(max_index + 1) + 1j * rng.standard_normal(max_index + 1)
        vecs.append(FinSuppVector.from_dense(v / np.linalg.norm(v)))
    return TestSet(
        tuple(vecs),
        description=f"e_0..e_{n_basis - 1} + {n_random} random unit vectors on [0,{max_index}] (seed {seed})",
    )


# --------------------------------------------------------------------------
# residuals and verdicts


@dataclass(frozen=True)
class ResidualTrajectory:
    mode: Mode
    values: np.ndarray
    unstable: Optional[np.ndarray] = None  # band Norm only: doubled-window drift flag

    def __len__(self) -> int:
        return len(self.values)


def _difference(op: Operator, limit: Operator) -> Operator:
    if isinstance(op, BandOperator):
        return op - limit
    if isinstance(op, HermitianMatrix) and isinstance(limit, HermitianMatrix):
        return op - limit
    return np.asarray(op, dtype=np.complex128) - np.asarray(limit, dtype=np.complex128)


def norm_window(width: int) -> int:
    return max(4 * width, 16)


def band_section_norm(a: BandOperator) -> tuple[float, bool]:
    """Section norm at ``max(4*width, 16)`` and whether doubling the window moved it by > 1e-3."""
    w = norm_window(a.width)
    v1 = op_norm(bd.finite_section(a, w))
    v2 = op_norm(bd.finite_section(a, 2 * w))
    return v1, abs(v2 - v1) > STABILITY_DRIFT


def _dense_strong_weak(diff: np.ndarray, x: np.ndarray, pairs) -> tuple[float, float]:
    image = diff @ x
    strong = float(np.linalg.norm(image, axis=0).max())
    gram = x.conj().T @ image  # gram[j, i] = <diff x_i, x_j>
    if pairs is None:
        weak = float(np.abs(gram).max())
    else:
        weak = max(abs(gram[j, i]) for i, j in pairs)
    return strong, weak


def residuals(seq: OperatorSequence, limit: Operator, tests: TestSet) -> dict[Mode, ResidualTrajectory]:
    """Norm, strong and weak residual trajectories of ``seq`` against ``limit``."""
    if tests.kind != seq.kind or _kind_of(limit) != seq.kind:
        raise ValueError(f"kind mismatch: sequence {seq.kind}, tests {tests.kind}, limit {_kind_of(limit)}")
    if seq.kind == "dense":
        d = seq.dim
        if _dim_of(limit) != d or tests.matrix().shape[0] != d:
            raise ValueError("dimension mismatch between sequence, limit and tests")
    h = seq.horizon
    norm_v = np.zeros(h)
    strong_v = np.zeros(h)
    weak_v = np.zeros(h)
    unstable = None
    if seq.kind == "dense":
        x = tests.matrix()
        for n, op in enumerate(seq, start=1):
            diff = _difference(op, limit)
            norm_v[n - 1] = op_norm(diff)
            strong_v[n - 1], weak_v[n - 1] = _dense_strong_weak(np.asarray(diff), x, tests.pairs)
    else:
        unstable = np.zeros(h, dtype=bool)
        pairs = tests.index_pairs()
        for n, op in enumerate(seq, start=1):
            diff = _difference(op, limit)
            norm_v[n - 1], unstable[n - 1] = band_section_norm(diff)
            images = [bd.band_apply(diff, v) for v in tests.vectors]
            strong_v[n - 1] = max(im.norm() for im in images)
            weak_v[n - 1] = max(abs(images[i].inner(tests.vectors[j])) for i, j in pairs)
    return {
        Mode.NORM: ResidualTrajectory(Mode.NORM, norm_v, unstable),
        Mode.STRONG: ResidualTrajectory(Mode.STRONG, strong_v),
        Mode.WEAK: ResidualTrajectory(Mode.WEAK, weak_v),
    }


def classify(traj, tol: float = DEFAULT_RESIDUAL_TOL, k: int = DEFAULT_WINDOW) -> Verdict:
    """Verdict from the last ``k`` residuals.

    convergent: all ``<= tol``. stalled: all ``>= 10 tol`` with max/min ``<= 2``.
    Anything else is undetermined.
    """
    values = np.asarray(traj.values if isinstance(traj, ResidualTrajectory) else traj, dtype=float)
    if not 1 <= k <= len(values):
        raise ValueError(f"window k={k} must lie in 1..{len(values)}")
    tail = values[-k:]
    if np.all(tail <= tol):
        return Verdict.CONVERGENT
    if np.all(tail >= 10 * tol) and tail.max() <= 2 * tail.min():
        return Verdict.STALLED
    return Verdict.UNDETERMINED


@dataclass(frozen=True)
class ConvergenceReport:
    trajectories: dict
    verdicts: dict
    tol: float
    k: int
    probes: str = ""

    def converges(self, mode: Mode) -> bool:
        return self.verdicts[mode] is Verdict.CONVERGENT


def convergence_report(
    seq: OperatorSequence,
    limit: Operator,
    tests: TestSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    k: int = DEFAULT_WINDOW,
) -> ConvergenceReport:
    trajs = residuals(seq, limit, tests)
    verdicts = {m: classify(t, tol, k) for m, t in trajs.items()}
    return ConvergenceReport(trajs, verdicts, tol, k, tests.description)


def zero_like(seq: OperatorSequence) -> Operator:
    if seq.kind == "band":
        return bd.zero()
    return HermitianMatrix.zeros(seq.dim)


# --------------------------------------------------------------------------
# harness reports


@dataclass
class CheckReport:
    properties: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.properties.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, ok in self.properties.items() if not ok]


# --------------------------------------------------------------------------
# sandwich rule


@dataclass(frozen=True)
class SandwichInstance:
    lower: OperatorSequence
    middle: OperatorSequence
    upper: OperatorSequence
    limit: Operator

    def __post_init__(self):
        seqs = (self.lower, self.middle, self.upper)
        if len({s.kind for s in seqs}) != 1 or _kind_of(self.limit) != self.lower.kind:
            raise ValueError("sandwich sequences and limit must share one kind")
        if len({s.horizon for s in seqs}) != 1:
            raise ValueError("sandwich sequences must share one horizon")
        if self.kind == "dense" and len({s.dim for s in seqs} | {_dim_of(self.limit)}) != 1:
            raise ValueError("sandwich sequences and limit must share one dimension")

    @property
    def kind(self) -> str:
        return self.lower.kind

    @property
    def horizon(self) -> int:
        return self.lower.horizon


@dataclass(frozen=True)
class PremiseCheck:
    n: int
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok


def _as_hermitian_op(op) -> HermitianMatrix:
    if isinstance(op, HermitianMatrix):
        return op
    if isinstance(op, BandOperator):
        raise TypeError("band operator needs a finite section first")
    return hermitian_part(op)


def _band_leq(a: BandOperator, b: BandOperator, tol: OrderTolerance) -> bool:
    diff = b - a
    return is_psd(bd.finite_section(diff, norm_window(diff.width)), tol)


def _leq(a, b, tol: OrderTolerance) -> bool:
    if isinstance(a, BandOperator):
        return _band_leq(a, b, tol)
    return loewner_leq(_as_hermitian_op(a), _as_hermitian_op(b), tol)


def check_sandwich_premises(inst: SandwichInstance, tol: OrderTolerance = DEFAULT_TOL) -> list[PremiseCheck]:
    """``C_n <= A_n`` and ``A_n <= B_n`` for every ``n``; band kinds are checked on finite sections."""
    out = []
    for n in range(1, inst.horizon + 1):
        c, a, b = inst.lower[n], inst.middle[n], inst.upper[n]
        out.append(PremiseCheck(n, _leq(c, a, tol), _leq(a, b, tol)))
    return out


@dataclass
class SandwichReport(CheckReport):
    premises: list = field(default_factory=list)
    lower: Optional[ConvergenceReport] = None
    middle: Optional[ConvergenceReport] = None
    upper: Optional[ConvergenceReport] = None
    bound_lhs: Optional[np.ndarray] = None
    bound_rhs: Optional[np.ndarray] = None

    @property
    def first_violation(self) -> Optional[int]:
        return next((p.n for p in self.premises if not p.ok), None)


def _quadratic_forms(seq: OperatorSequence, x: np.ndarray) -> np.ndarray:
    # rows: n, cols: test vectors; Re <A_n x, x>
    return np.array([np.real(np.einsum("ij,ij->j", x.conj(), np.asarray(op) @ x)) for op in seq])


def sandwich_verify(
    inst: SandwichInstance,
    tests: TestSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    k: int = DEFAULT_WINDOW,
    order_tol: OrderTolerance = DEFAULT_TOL,
    strict: bool = True,
) -> SandwichReport:
    """Check the squeeze rule on one instance.

    For every mode in which both ``B_n`` and ``C_n`` are classified convergent
    to ``L``, ``A_n`` must be too. On dense instances the per-index bound
    ``||A_n - L|| <= ||B_n - L|| + 2 ||C_n - L|| + 1e-8 * max(1, ||L||)`` and
    the quadratic-form chain ``<C_n x,x> <= <A_n x,x> <= <B_n x,x>`` are
    checked as well.

    With ``strict=True`` a failed order premise raises :class:`PremiseViolation`
    carrying the first bad index; otherwise it is recorded as a failed property.
    """
    premises = check_sandwich_premises(inst, order_tol)
    report = SandwichReport(premises=premises)
    bad = report.first_violation
    if bad is not None and strict:
        raise PremiseViolation(bad, "C_n <= A_n <= B_n")
    report.properties["order premises"] = bad is None
    if bad is not None:
        report.notes["first premise violation"] = bad

    lim = inst.limit
    report.lower = convergence_report(inst.lower, lim, tests, tol, k)
    report.middle = convergence_report(inst.middle, lim, tests, tol, k)
    report.upper = convergence_report(inst.upper, lim, tests, tol, k)

    if inst.kind == "dense":
        scale = max(1.0, op_norm(lim))
        lhs = report.middle.trajectories[Mode.NORM].values
        rhs = (
            report.upper.trajectories[Mode.NORM].values
            + 2 * report.lower.trajectories[Mode.NORM].values
            + 1e-8 * scale
        )
        report.bound_lhs, report.bound_rhs = lhs, rhs
        report.properties["sandwich bound"] = bool(np.all(lhs <= rhs))

        x = tests.matrix()
        qc, qa, qb = (_quadratic_forms(s, x) for s in (inst.lower, inst.middle, inst.upper))
        slack = 1e-9 * max(1.0, float(np.abs(qb).max()), float(np.abs(qc).max()))
        report.properties["quadratic-form squeeze"] = bool(
            np.all(qc <= qa + slack) and np.all(qa <= qb + slack)
        )

    for m in MODES:
        if report.lower.converges(m) and report.upper.converges(m):
            report.properties[f"squeeze implication ({m.value})"] = report.middle.converges(m)
    return report


def reduce_instance(inst: SandwichInstance) -> SandwichInstance:
    """Move a dense instance to limit 0 with a positive lower sequence.

    Subtracts ``L`` from every term, then adds ``|C_n - L|`` to all three, so
    ``0 <= C_n' <= A_n' <= B_n'`` and every sequence tends to 0 iff the
    original tends to ``L``.
    """
    if inst.kind != "dense":
        raise ValueError("reduction needs dense sequences")
    lim = _as_hermitian_op(inst.limit)
    lower, middle, upper = [], [], []
    for n in range(1, inst.horizon + 1):
        c = _as_hermitian_op(inst.lower[n]) - lim
        shift = abs_op(c)
        lower.append(c + shift)
        middle.append(_as_hermitian_op(inst.middle[n]) - lim + shift)
        upper.append(_as_hermitian_op(inst.upper[n]) - lim + shift)
    return SandwichInstance(
        OperatorSequence.from_list(lower),
        OperatorSequence.from_list(middle),
        OperatorSequence.from_list(upper),
        HermitianMatrix.zeros(lim.dim),
    )


def shifted_lower_positive(inst: SandwichInstance, tol: OrderTolerance = DEFAULT_TOL) -> list[bool]:
    """Per ``n``: is ``(C_n - L) + |C_n - L|`` positive semidefinite?"""
    lim = _as_hermitian_op(inst.limit)
    out = []
    for c in inst.lower:
        d = _as_hermitian_op(c) - lim
        out.append(is_psd(d + abs_op(d), tol))
    return out


@dataclass
class ProofStepReport(CheckReport):
    quadratic_chain: Optional[np.ndarray] = None  # (n, vector) -> bool
    norm_chain: Optional[np.ndarray] = None  # n -> bool


def proof_step_checks(
    inst: SandwichInstance, tests: TestSet, order_tol: OrderTolerance = DEFAULT_TOL
) -> ProofStepReport:
    """Positive-lower, zero-limit case of the squeeze rule, step by step.

    For every ``n`` and test vector ``x``:
    ``||sqrt(C_n) x||^2 <= ||sqrt(A_n) x||^2 <= ||sqrt(B_n) x||^2`` within
    ``1e-8 * max(1, ||B_n||) ||x||^2`` and ``||C_n|| <= ||A_n|| <= ||B_n||``
    within ``1e-9 * max(1, ||B_n||)``.
    """
    if inst.kind != "dense":
        raise ValueError("proof-step checks need dense sequences")
    lim = np.asarray(inst.limit)
    if np.any(lim != 0):
        raise ValueError("proof-step checks need limit 0; use reduce_instance first")
    x = tests.matrix()
    xnorm2 = np.linalg.norm(x, axis=0) ** 2
    quad = np.zeros((inst.horizon, x.shape[1]), dtype=bool)
    norms = np.zeros(inst.horizon, dtype=bool)
    for n in range(1, inst.horizon + 1):
        c = _as_hermitian_op(inst.lower[n])
        a = _as_hermitian_op(inst.middle[n])
        b = _as_hermitian_op(inst.upper[n])
        if not is_psd(c, order_tol):
            raise PremiseViolation(n, "C_n >= 0")
        nc, na, nb = op_norm(c), op_norm(a), op_norm(b)
        scale = max(1.0, nb)
        qc, qa, qb = (
            np.linalg.norm(sqrt_psd(m, order_tol) @ x, axis=0) ** 2 for m in (c, a, b)
        )
        slack = 1e-8 * scale * xnorm2
        quad[n - 1] = (qc <= qa + slack) & (qa <= qb + slack)
        norms[n - 1] = nc <= na + 1e-9 * scale and na <= nb + 1e-9 * scale
    report = ProofStepReport(quadratic_chain=quad, norm_chain=norms)
    report.properties["square-root quadratic chain"] = bool(quad.all())
    report.properties["norm chain"] = bool(norms.all())
    return report


# --------------------------------------------------------------------------
# modulus squeeze


def modulus_of(op: Operator) -> Operator:
    if isinstance(op, BandOperator):
        return bd.band_modulus(op)
    return abs_op(op)


@dataclass
class ModulusSqueezeReport(CheckReport):
    sequence: Optional[ConvergenceReport] = None
    modulus: Optional[ConvergenceReport] = None


def modulus_squeeze(
    seq: OperatorSequence,
    tests: TestSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    k: int = DEFAULT_WINDOW,
) -> ModulusSqueezeReport:
    """``|A_n| -> 0`` implies ``A_n -> 0``, per mode; the converse is only reported.

    Band sequences are accepted when each ``A_n* A_n`` is diagonal, so the
    modulus is exact (e.g. powers of the shift).
    """
    mods = seq.map(modulus_of)
    zero = zero_like(seq)
    rep_a = convergence_report(seq, zero, tests, tol, k)
    rep_m = convergence_report(mods, zero, tests, tol, k)
    report = ModulusSqueezeReport(sequence=rep_a, modulus=rep_m)
    for m in MODES:
        if rep_m.converges(m):
            report.properties[f"modulus implication ({m.value})"] = rep_a.converges(m)
        report.notes[f"converse ({m.value})"] = {
            "sequence": rep_a.verdicts[m].value,
            "modulus": rep_m.verdicts[m].value,
            "converse fails": rep_a.converges(m) and not rep_m.converges(m),
        }
    return report


# --------------------------------------------------------------------------
# dominated and positive products


def _commutator_norm(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return op_norm(a @ b - b @ a)


def _is_scalar_identity(m: np.ndarray) -> bool:
    return bool(np.array_equal(m, m[0, 0] * np.eye(m.shape[0])))


@dataclass
class ProductReport(CheckReport):
    violations: list = field(default_factory=list)  # (n, premise name)
    envelope: Optional[np.ndarray] = None
    product: Optional[ConvergenceReport] = None
    factor: Optional[ConvergenceReport] = None
    alpha: Optional[float] = None

    @property
    def violation_indices(self) -> list[int]:
        return sorted({n for n, _ in self.violations})


def dominated_product_check(
    a_seq: OperatorSequence,
    b_seq: OperatorSequence,
    m: HermitianMatrix,
    tests: TestSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    k: int = DEFAULT_WINDOW,
    order_tol: OrderTolerance = DEFAULT_TOL,
) -> ProductReport:
    """Dominated products: ``|A_n| <= M``, ``B_n >= 0``, commuting, ``B_n -> 0`` gives ``A_n B_n -> 0``.

    Per ``n`` the premises and the envelope ``-M B_n <= A_n B_n <= M B_n``
    (slack ``1e-9 * max(1, ||M|| ||B_n||)``) are checked; the product must
    converge in every mode in which ``B_n`` does. ``B_n M = M B_n`` is skipped
    when ``M`` is a multiple of the identity.
    """
    if a_seq.kind != "dense" or b_seq.kind != "dense":
        raise ValueError("dominated products need dense sequences")
    if a_seq.horizon != b_seq.horizon:
        raise ValueError("horizons differ")
    m_arr = np.asarray(m)
    scalar_m = _is_scalar_identity(m_arr)
    m_norm = op_norm(m)
    report = ProductReport()
    envelope = np.zeros(a_seq.horizon, dtype=bool)
    products = []
    for n in range(1, a_seq.horizon + 1):
        a = _as_hermitian_op(a_seq[n])
        b = _as_hermitian_op(b_seq[n])
        aa, ba = np.asarray(a), np.asarray(b)
        nb = op_norm(b)
        if not is_psd(b, order_tol):
            report.violations.append((n, "B_n >= 0"))
        if not loewner_leq(abs_op(a), m, order_tol):
            report.violations.append((n, "|A_n| <= M"))
        if _commutator_norm(aa, ba) > 1e-10 * max(1.0, op_norm(a) * nb):
            report.violations.append((n, "A_n B_n = B_n A_n"))
        if not scalar_m and _commutator_norm(ba, m_arr) > 1e-10 * max(1.0, nb * m_norm):
            report.violations.append((n, "B_n M = M B_n"))
        prod = aa @ ba
        products.append(prod)
        env = hermitian_part(m_arr @ ba)
        p_h = hermitian_part(prod)
        scale = max(1.0, m_norm * nb)
        etol = OrderTolerance(eps=1e-9 * scale, rel=0.0)
        envelope[n - 1] = (
            loewner_leq(-env, p_h, etol)
            and loewner_leq(p_h, env, etol)
            and op_norm(prod) <= op_norm(m_arr @ ba) + 1e-8 * scale
        )
    report.envelope = envelope
    zero = HermitianMatrix.zeros(a_seq.dim)
    report.product = convergence_report(OperatorSequence.from_list(products), zero, tests, tol, k)
    report.factor = convergence_report(b_seq, zero, tests, tol, k)
    report.properties["premises"] = not report.violations
    report.properties["envelope"] = bool(envelope.all())
    for mode in MODES:
        if report.factor.converges(mode):
            report.properties[f"product implication ({mode.value})"] = report.product.converges(mode)
    return report


def _section_psd(op: BandOperator, tol: OrderTolerance) -> bool:
    return is_psd(bd.finite_section(op, norm_window(op.width)), tol)


def weak_positive_product_check(
    a_seq: OperatorSequence,
    b_seq: OperatorSequence,
    tests: TestSet,
    tol: float = DEFAULT_RESIDUAL_TOL,
    k: int = DEFAULT_WINDOW,
    order_tol: OrderTolerance = DEFAULT_TOL,
) -> ProductReport:
    """Commuting positive ``A_n, B_n -> 0`` weakly gives ``A_n B_n -> 0`` weakly.

    ``alpha = max_n ||A_n||`` over the horizon stands in for the uniform bound
    ``0 <= A_n <= alpha I``. Band sequences are accepted: positivity is
    checked on finite sections (a negative section eigenvalue refutes
    positivity outright) and products are exact.
    """
    if a_seq.kind != b_seq.kind or a_seq.horizon != b_seq.horizon:
        raise ValueError("sequences must share kind and horizon")
    band = a_seq.kind == "band"
    report = ProductReport()
    products = []
    alpha = 0.0
    for n in range(1, a_seq.horizon + 1):
        a, b = a_seq[n], b_seq[n]
        if band:
            if not _section_psd(a, order_tol):
                report.violations.append((n, "A_n >= 0"))
            if not _section_psd(b, order_tol):
                report.violations.append((n, "B_n >= 0"))
            ab, ba = a @ b, b @ a
            if not bd.band_equals(ab, ba):
                report.violations.append((n, "A_n B_n = B_n A_n"))
            products.append(ab)
            alpha = max(alpha, band_section_norm(a)[0])
        else:
            a, b = _as_hermitian_op(a), _as_hermitian_op(b)
            if not is_psd(a, order_tol):
                report.violations.append((n, "A_n >= 0"))
            if not is_psd(b, order_tol):
                report.violations.append((n, "B_n >= 0"))
            na = op_norm(a)
            if _commutator_norm(a, b) > 1e-10 * max(1.0, na * op_norm(b)):
                report.violations.append((n, "A_n B_n = B_n A_n"))
            products.append(np.asarray(a) @ np.asarray(b))
            alpha = max(alpha, na)
    report.alpha = alpha
    prod_seq = OperatorSequence.from_list(products)
    zero = zero_like(a_seq)
    report.product = convergence_report(prod_seq, zero, tests, tol, k)
    rep_a = convergence_report(a_seq, zero, tests, tol, k)
    rep_b = convergence_report(b_seq, zero, tests, tol, k)
    report.factor = rep_b
    report.properties["premises"] = not report.violations
    if not report.violations and rep_a.converges(Mode.WEAK) and rep_b.converges(Mode.WEAK):
        report.properties["weak product implication"] = report.product.converges(Mode.WEAK)
    return report


# --------------------------------------------------------------------------
# quadratic forms and probes


def _pair(a: Operator, x, y) -> complex:
    if isinstance(a, BandOperator):
        return bd.pairing(a, x, y)
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    return complex(np.vdot(y, np.asarray(a) @ x))


def weak_quadratic_residual(a: Operator, x) -> float:
    """``|<A x, x>|``."""
    return abs(_pair(a, x, x))


def polarization_pairing(a: Operator, x, y) -> complex:
    """``<A x, y>`` rebuilt from the four quadratic forms ``<A z, z>``, ``z = x + i^k y``."""
    total = 0j
    for k in range(4):
        c = 1j**k
        z = x + c * y
        total += c * _pair(a, z, z)
    return total / 4


@dataclass(frozen=True)
class ProbeResult:
    value: float
    doubled_value: float
    window: int

    @property
    def drift(self) -> float:
        return abs(self.doubled_value - self.value)

    @property
    def unstable(self) -> bool:
        return self.drift > STABILITY_DRIFT


def _section_modulus_form(a: BandOperator, n: int, x: FinSuppVector) -> float:
    # <|T| v, v> = sum_k |lambda_k| |<v, q_k>|^2, without forming |T|
    dec = eigh(bd.finite_section(a, n))
    coords = dec.eigenvectors.conj().T @ x.to_dense(n)
    return float(np.sum(np.abs(dec.eigenvalues) * np.abs(coords) ** 2))


def section_modulus_probe(a: BandOperator, n: int, x: FinSuppVector) -> ProbeResult:
    """``<|P_N A P_N| x, x>`` on windows ``N`` and ``2N``."""
    if not bd.is_selfadjoint(a):
        raise ValueError("section modulus probe needs a self-adjoint band operator")
    if n < 4 * a.width or n < 1:
        raise ValueError(f"window {n} is smaller than 4 * band width = {4 * a.width}")
    return ProbeResult(_section_modulus_form(a, n, x), _section_modulus_form(a, 2 * n, x), n)


def shift_sum_sequence(horizon: int) -> OperatorSequence:
    """``n -> S**n + (S**n)*`` as a band sequence."""
    return OperatorSequence(bd.shift_sum, horizon, "band")


def shift_power_sequence(horizon: int, adjoint: bool = False) -> OperatorSequence:
    if adjoint:
        return OperatorSequence(lambda n: bd.shift_power(n).adjoint(), horizon, "band")
    return OperatorSequence(bd.shift_power, horizon, "band")
