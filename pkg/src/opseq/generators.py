"""Seeded generators: random Hermitian/PSD matrices, commuting families,
premise-valid sandwich instances, decay schedules, counterexample search.

All randomness comes from ``numpy.random.default_rng`` (PCG64) seeded with
integer tuples, so every output is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from opseq.hermitian import (
    DEFAULT_TOL,
    HermitianMatrix,
    abs_op,
    loewner_leq,
    op_norm,
)

PRNG_NAME = f"numpy {np.__version__} PCG64 (default_rng)"


def rng_for(*key: int) -> np.random.Generator:
    return np.random.default_rng([int(k) & 0xFFFFFFFFFFFFFFFF for k in key])


def _complex_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def _rescaled(h: HermitianMatrix, scale: float) -> HermitianMatrix:
    norm = op_norm(h)
    if norm == 0.0:
        return h
    return h * (scale / norm)


def rand_hermitian(dim: int, seed: int, scale: float = 1.0) -> HermitianMatrix:
    """``(G + G*)/2`` from a complex Gaussian ``G``, rescaled to operator norm ``scale``."""
    if dim < 1 or not scale > 0:
        raise ValueError(f"need dim >= 1 and scale > 0, got dim={dim}, scale={scale}")
    g = _complex_gaussian(rng_for(seed, 0x4E), dim)
    return _rescaled(HermitianMatrix(0.5 * (g + g.conj().T)), scale)


def rand_psd(dim: int, seed: int, scale: float = 1.0) -> HermitianMatrix:
    """Gram matrix ``G* G`` rescaled to operator norm ``scale``."""
    if dim < 1 or not scale > 0:
        raise ValueError(f"need dim >= 1 and scale > 0, got dim={dim}, scale={scale}")
    g = _complex_gaussian(rng_for(seed, 0x50), dim)
    return _rescaled(HermitianMatrix(g.conj().T @ g), scale)


def rand_unitary(dim: int, seed: int) -> np.ndarray:
    g = _complex_gaussian(rng_for(seed, 0x55), dim)
    q, r = np.linalg.qr(g)
    d = r.diagonal()
    # fix the column phases so Q is a deterministic function of G
    return q * (d / np.abs(d))


def rand_commuting_family(
    dim: int, count: int, seed: int, positive: bool = False
) -> list[HermitianMatrix]:
    """``count`` matrices ``U diag(lambda_i) U*`` sharing one random unitary ``U``.

    Spectra are standard normal, or uniform on (0, 1] with ``positive=True``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    u = rand_unitary(dim, seed)
    rng = rng_for(seed, 0x43)
    out = []
    for _ in range(count):
        if positive:
            lam = 1.0 - rng.random(dim)
        else:
            lam = rng.standard_normal(dim)
        out.append(HermitianMatrix((u * lam) @ u.conj().T))
    return out


@dataclass(frozen=True)
class DecaySchedule:
    """Positive nonincreasing rate ``n -> K/n``, ``K r**n``, or a table lookup.

    Table schedules hold their last entry past the end of the table.
    """

    form: str = "harmonic"
    K: float = 1.0
    r: float = 0.5
    table: tuple = field(default=())

    def __post_init__(self):
        if self.form not in ("harmonic", "geometric", "table"):
            raise ValueError(f"unknown schedule form {self.form!r}")
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.form == "geometric" and not 0 < self.r < 1:
            raise ValueError(f"geometric ratio must lie in (0, 1), got {self.r}")
        if self.form == "table":
            t = tuple(float(v) for v in self.table)
            if not t:
                raise ValueError("table schedule needs at least one value")
            if any(v <= 0 for v in t) or any(b > a for a, b in zip(t, t[1:])):
                raise ValueError("table values must be positive and nonincreasing")
            object.__setattr__(self, "table", t)

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"schedule index starts at 1, got {n}")
        if self.form == "harmonic":
            return self.K / n
        if self.form == "geometric":
            return self.K * self.r**n
        return self.K * self.table[min(n, len(self.table)) - 1]

    def describe(self) -> str:
        if self.form == "harmonic":
            return f"harmonic:{self.K!r}"
        if self.form == "geometric":
            return f"geometric:{self.K!r}:{self.r!r}"
        return "table:" + ",".join(repr(v) for v in self.table)

    @classmethod
    def parse(cls, text: str) -> "DecaySchedule":
        """Inverse of :meth:`describe`: ``harmonic[:K]``, ``geometric[:K[:r]]``, ``table:v1,v2,...``."""
        form, _, rest = text.strip().partition(":")
        form = form.strip()
        if form == "table":
            return cls("table", 1.0, table=tuple(float(v) for v in rest.split(",")))
        args = [float(v) for v in rest.split(":")] if rest else []
        if form == "harmonic" and len(args) <= 1:
            return cls("harmonic", *args)
        if form == "geometric" and len(args) <= 2:
            return cls("geometric", *args)
        raise ValueError(f"malformed schedule descriptor {text!r}")


def make_sandwich_instance(
    limit: HermitianMatrix,
    schedule: DecaySchedule,
    n_max: int,
    seed: int,
    t_values: Optional[np.ndarray] = None,
):
    """Instance with ``C_n = L - D_n``, ``B_n = L + E_n``, ``A_n = C_n + t_n (B_n - C_n)``.

    ``D_n`` and ``E_n`` are seeded PSD matrices of norm ``schedule(n)`` and
    ``t_n`` is uniform on [0, 1] unless ``t_values`` is given.
    """
    from opseq.convergence import OperatorSequence, SandwichInstance

    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    dim = limit.dim
    if t_values is None:
        t_values = rng_for(seed, 0x74).random(n_max)
    t_values = np.asarray(t_values, dtype=float)
    lower, middle, upper = [], [], []
    for n in range(1, n_max + 1):
        s = schedule(n)
        d = rand_psd(dim, derive_seed(seed, n, 1), s)
        e = rand_psd(dim, derive_seed(seed, n, 2), s)
        c = limit - d
        b = limit + e
        a = c + float(t_values[n - 1]) * (b - c)
        lower.append(c)
        middle.append(a)
        upper.append(b)
    return SandwichInstance(
        lower=OperatorSequence.from_list(lower),
        middle=OperatorSequence.from_list(middle),
        upper=OperatorSequence.from_list(upper),
        limit=limit,
    )


def commuting_product_sequences(dim: int, n_max: int, seed: int, rate):
    """``A_n = U diag(+-1) U*`` and ``B_n = rate(n) U diag(p) U* / max(p)`` with ``p > 0``."""
    from opseq.convergence import OperatorSequence

    u = rand_unitary(dim, seed)
    rng = rng_for(seed, 0x44, 0x50)
    a_items, b_items = [], []
    for n in range(1, n_max + 1):
        signs = rng.choice([-1.0, 1.0], size=dim)
        p = 1.0 - rng.random(dim)
        p = p / p.max()
        a_items.append(HermitianMatrix((u * signs) @ u.conj().T))
        b_items.append(HermitianMatrix((u * (rate(n) * p)) @ u.conj().T))
    return OperatorSequence.from_list(a_items), OperatorSequence.from_list(b_items)


def derive_seed(seed: int, *parts: int) -> int:
    """One 64-bit seed per ``(seed, *parts)`` tuple."""
    key = [int(v) & 0xFFFFFFFFFFFFFFFF for v in (seed, *parts)]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def search_interval_counterexample(
    dim: int, trials: int, seed: int
) -> Optional[tuple[HermitianMatrix, HermitianMatrix]]:
    """Look for Hermitian ``A, B`` with ``-B <= A <= B`` but not ``|A| <= B``.

    Trial ``i`` draws ``A`` = random diagonal +-1 pattern and
    ``B = (1 + eps) I + delta P`` with ``P`` a random symmetric off-diagonal
    pattern, from the seed ``(seed, i)``. The first success is returned after
    re-verification; scalars can never succeed.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if dim == 1:
        return None
    for trial in range(trials):
        a, b = _interval_candidate(dim, seed, trial)
        if _is_interval_witness(a, b):
            return a, b
    return None


def _interval_candidate(dim: int, seed: int, trial: int):
    rng = rng_for(seed, trial, 0x49)
    signs = rng.choice([-1.0, 1.0], size=dim)
    eps = 0.5 * rng.random()
    delta = rng.uniform(-1.0, 1.0)
    p = np.triu(rng.choice([-1.0, 0.0, 1.0], size=(dim, dim)), 1)
    p = p + p.T
    a = HermitianMatrix.diag(signs)
    b = HermitianMatrix((1.0 + eps) * np.eye(dim) + delta * p)
    return a, b


def _is_interval_witness(a: HermitianMatrix, b: HermitianMatrix) -> bool:
    return (
        loewner_leq(-b, a, DEFAULT_TOL)
        and loewner_leq(a, b, DEFAULT_TOL)
        and not loewner_leq(abs_op(a), b, DEFAULT_TOL)
    )


def interval_trial(dim: int, seed: int, trial: int):
    """Candidate of one search trial plus ``(lambda_min(B-A), lambda_min(B+A), lambda_min(B-|A|))``."""
    from opseq.hermitian import min_eigenvalue

    a, b = _interval_candidate(dim, seed, trial)
    mins = (min_eigenvalue(b - a), min_eigenvalue(b + a), min_eigenvalue(b - abs_op(a)))
    return a, b, mins, _is_interval_witness(a, b)


STORED_INTERVAL_WITNESS = (
    HermitianMatrix.diag([1.0, -1.0]),
    HermitianMatrix([[1.1, 0.4], [0.4, 1.1]]),
)
