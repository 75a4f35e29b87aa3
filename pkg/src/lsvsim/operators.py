"""Hermitian operators on the three-mode Fock space.

Builders for the number operators, the LSV generator N_1 + N_-1, the
spin-mixing Hamiltonian, the quadratic-Zeeman sweep Hamiltonian used to
drive through the quantum phase transition, and the collective rotation
generator L_x.  hbar = 1 throughout: couplings chi, c2, q and kappa carry
inverse-time units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

from .fock import FockBasis

# Dense conversion guard: eigendecompositions above this dimension are not
# worth doing densely.
DENSE_DIMENSION_LIMIT = 2000


class HermitianOperator:
    """Sparse Hermitian matrix tied to a FockBasis.

    Stored as coordinate triplets with symmetric insertion: every
    off-diagonal entry is recorded together with its conjugate transpose,
    so the triplet set equals that of the adjoint exactly.  Immutable after
    construction.
    """

    def __init__(self, basis: FockBasis, rows, cols, values):
        dim = len(basis)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.complex128)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("triplet arrays must have identical shapes")
        if rows.size and (rows.min() < 0 or rows.max() >= dim
                          or cols.min() < 0 or cols.max() >= dim):
            raise ValueError("triplet index outside the basis dimension")
        self.basis = basis
        self.rows = rows
        self.cols = cols
        self.values = values
        for arr in (self.rows, self.cols, self.values):
            arr.setflags(write=False)
        self._csr = sparse.csr_matrix(
            (values, (rows, cols)), shape=(dim, dim), dtype=np.complex128)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def to_dense(self) -> np.ndarray:
        if self.dimension > DENSE_DIMENSION_LIMIT:
            raise ValueError(
                f"dense conversion refused for dimension {self.dimension} "
                f"> {DENSE_DIMENSION_LIMIT}")
        return self._csr.toarray()

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Matrix-vector (or matrix-matrix) product."""
        return self._csr @ amplitudes

    def expectation(self, amplitudes: np.ndarray) -> float:
        return float(np.real(np.vdot(amplitudes, self.apply(amplitudes))))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


class _Builder:
    """Accumulates triplets, enforcing Hermitian symmetric insertion."""

    def __init__(self, basis: FockBasis):
        self.basis = basis
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.values: list[complex] = []

    def diagonal(self, index: int, value: float) -> None:
        self.rows.append(index)
        self.cols.append(index)
        self.values.append(complex(value))

    def pair(self, row: int, col: int, value: complex) -> None:
        if row == col:
            raise ValueError("pair() is for off-diagonal entries")
        self.rows.append(row)
        self.cols.append(col)
        self.values.append(complex(value))
        self.rows.append(col)
        self.cols.append(row)
        self.values.append(complex(np.conj(value)))

    def build(self) -> HermitianOperator:
        return HermitianOperator(self.basis, self.rows, self.cols, self.values)


def number_operator(basis: FockBasis, mode: int) -> HermitianOperator:
    """Diagonal particle-number operator of one Zeeman mode."""
    b = _Builder(basis)
    for i, n in enumerate(basis.occupation_of(mode)):
        if n:
            b.diagonal(i, float(n))
    return b.build()


def lsv_generator(basis: FockBasis) -> HermitianOperator:
    """Generator N_1 + N_-1 = N - N_0 of the LSV phase (kappa-free).

    The LSV Hamiltonian is kappa times this diagonal operator; a spin-1
    atom in m = +-1 contributes one unit.
    """
    values = basis.occupation_of(+1) + basis.occupation_of(-1)
    b = _Builder(basis)
    for i, v in enumerate(values):
        if v:
            b.diagonal(i, float(v))
    return b.build()


def _pair_creation_elements(basis: FockBasis, prefactor: float, builder: _Builder) -> None:
    """Spin-exchange terms a0 a0 a1^+ a-1^+ (+ h.c.) with a common prefactor.

    <n1+1, n0-2, n-1+1| . |n1, n0, n-1> = prefactor * sqrt((n1+1)(n-1+1) n0 (n0-1)).
    """
    for i, (n_plus, n_zero, n_minus) in enumerate(basis):
        if n_zero < 2:
            continue
        target = (n_plus + 1, n_zero - 2, n_minus + 1)
        j = basis.index_of(target)
        value = prefactor * np.sqrt(
            (n_plus + 1) * (n_minus + 1) * n_zero * (n_zero - 1))
        builder.pair(j, i, value)


def h_smd(basis: FockBasis, chi: float) -> HermitianOperator:
    """Spin-mixing Hamiltonian chi (a0+ a0+ a1 a-1 + a0 a0 a1+ a-1+).

    Purely off-diagonal; conserves both atom number and magnetization, and
    is real symmetric tridiagonal in pair-number ordering on any sector.
    """
    b = _Builder(basis)
    _pair_creation_elements(basis, chi, b)
    return b.build()


def h_qpt(basis: FockBasis, c2: float, q: float) -> HermitianOperator:
    """Spin-1 condensate Hamiltonian driven by the quadratic Zeeman shift q.

    (c2/2N) [2 (a0+ a0+ a1 a-1 + h.c.) + (2 N_0 - 1)(N - N_0)] - q N_0,
    defined on any sector of the N-atom space.
    """
    n_atoms = basis.n_atoms
    n_zero = basis.occupation_of(0)
    diag = (c2 / (2 * n_atoms)) * (2 * n_zero - 1) * (n_atoms - n_zero) - q * n_zero
    b = _Builder(basis)
    for i, d in enumerate(diag):
        if d:
            b.diagonal(i, float(d))
    _pair_creation_elements(basis, c2 / n_atoms, b)
    return b.build()


def l_x(basis: FockBasis) -> HermitianOperator:
    """Collective spin-x operator (a1+ a0 + a0+ a-1 + h.c.) / sqrt(2).

    Changes magnetization by +-1, so it only exists on the full basis.
    """
    if not basis.is_full:
        raise ValueError(
            "l_x leaves any fixed-magnetization sector; build it on the full "
            "basis (promote sector states first)")
    b = _Builder(basis)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i, (n_plus, n_zero, n_minus) in enumerate(basis):
        if n_zero >= 1:
            # a1+ a0: (n_plus+1, n_zero-1, n_minus) <- (n_plus, n_zero, n_minus)
            j = basis.index_of((n_plus + 1, n_zero - 1, n_minus))
            b.pair(j, i, inv_sqrt2 * np.sqrt((n_plus + 1) * n_zero))
        if n_minus >= 1:
            # a0+ a-1: (n_plus, n_zero+1, n_minus-1) <- (n_plus, n_zero, n_minus)
            j = basis.index_of((n_plus, n_zero + 1, n_minus - 1))
            b.pair(j, i, inv_sqrt2 * np.sqrt((n_zero + 1) * n_minus))
    return b.build()


@dataclass(frozen=True)
class RampSchedule:
    """Linear sweep of the quadratic Zeeman parameter q at rate beta > 0.

    q(t) = q_start - sign(q_start - q_end) * rate * t on [0, duration] with
    duration = |q_start - q_end| / rate.  An explicit duration is only
    accepted for constant schedules (q_start == q_end), where the default
    formula would give zero.
    """

    q_start: float
    q_end: float
    rate: float
    duration: float = field(default=-1.0)

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"ramp rate must be positive, got {self.rate}")
        if self.duration < 0:
            object.__setattr__(
                self, "duration", abs(self.q_start - self.q_end) / self.rate)
        elif self.q_start != self.q_end:
            raise ValueError(
                "explicit duration is only meaningful for constant schedules")

    def q_at(self, t: float) -> float:
        return self.q_start - np.sign(self.q_start - self.q_end) * self.rate * t

    def q_integral(self, t: float) -> float:
        """Integral of q over [0, t], used for exact diagonal phases."""
        return self.q_start * t - np.sign(self.q_start - self.q_end) * self.rate * t * t / 2.0
