"""Three-mode bosonic Fock space for N spin-1 atoms.

Basis states are occupation triples (n_plus, n_zero, n_minus) of the
m_F = +1, 0, -1 Zeeman modes.  A basis either spans the full N-atom space or
is restricted to a fixed magnetization sector m = n_plus - n_minus; the
m = 0 sector {(k, N-2k, k)} is the one preserved by spin-exchange collisions.
"""

from __future__ import annotations

from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

# Atom-number cap: keeps dense eigendecompositions of the full three-mode
# space affordable.  Override per call via enumerate_basis(max_atoms=...).
MAX_ATOMS = 120

# Norm guarantee after construction and unitary evolution.
NORM_TOL = 1e-9

MODES = (+1, 0, -1)


class OccupationTriple(NamedTuple):
    """Occupations (n_plus, n_zero, n_minus) of the m_F = +1, 0, -1 modes."""

    n_plus: int
    n_zero: int
    n_minus: int

    @property
    def total(self) -> int:
        return self.n_plus + self.n_zero + self.n_minus

    @property
    def magnetization(self) -> int:
        return self.n_plus - self.n_minus


class FockBasis:
    """Deterministically ordered occupation basis for N spin-1 atoms.

    ``magnetization=None`` selects the full (N+1)(N+2)/2-dimensional space;
    an integer m keeps only triples with n_plus - n_minus = m.  Ordering is
    lexicographic on (n_plus, n_zero), which on the m = 0 sector coincides
    with ascending pair number k for (k, N-2k, k).  Instances are immutable
    and safe to share between concurrent tasks.
    """

    def __init__(self, n_atoms: int, magnetization: int | None = None,
                 *, max_atoms: int = MAX_ATOMS):
        if n_atoms < 1:
            raise ValueError(f"need at least one atom, got N={n_atoms}")
        if n_atoms > max_atoms:
            raise ValueError(
                f"N={n_atoms} exceeds the configured cap of {max_atoms} atoms")
        if magnetization is not None and abs(magnetization) > n_atoms:
            raise ValueError(
                f"magnetization {magnetization} is unreachable with N={n_atoms}")
        self._n_atoms = n_atoms
        self._magnetization = magnetization
        triples = []
        for n_plus in range(n_atoms + 1):
            for n_zero in range(n_atoms - n_plus + 1):
                n_minus = n_atoms - n_plus - n_zero
                if magnetization is not None and n_plus - n_minus != magnetization:
                    continue
                triples.append(OccupationTriple(n_plus, n_zero, n_minus))
        self._triples = tuple(triples)
        self._index = {t: i for i, t in enumerate(self._triples)}
        occ = np.array(self._triples, dtype=np.int64).reshape(len(triples), 3)
        occ.setflags(write=False)
        self._occ = occ

    @property
    def n_atoms(self) -> int:
        return self._n_atoms

    @property
    def magnetization(self) -> int | None:
        """Sector label; None means the full space."""
        return self._magnetization

    @property
    def is_full(self) -> bool:
        return self._magnetization is None

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[OccupationTriple]:
        return iter(self._triples)

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self._index

    def __repr__(self) -> str:
        sector = "full" if self.is_full else f"m={self._magnetization}"
        return f"FockBasis(N={self._n_atoms}, {sector}, dim={len(self)})"

    def triple_at(self, index: int) -> OccupationTriple:
        return self._triples[index]

    def index_of(self, triple) -> int:
        try:
            return self._index[tuple(triple)]
        except KeyError:
            raise ValueError(f"occupation triple {tuple(triple)} is not in {self!r}") from None

    def occupation_of(self, mode: int) -> np.ndarray:
        """Occupation of one Zeeman mode (+1, 0 or -1) for every basis state."""
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode}")
        return self._occ[:, MODES.index(mode)]


def enumerate_basis(n_atoms: int, magnetization: int | None = None,
                    *, max_atoms: int = MAX_ATOMS) -> FockBasis:
    """Enumerate the complete basis of a sector (or the full space)."""
    return FockBasis(n_atoms, magnetization, max_atoms=max_atoms)


class StateVector:
    """Pure state over a FockBasis: one complex amplitude per basis element.

    Value-semantic: the amplitude array is copied on construction and frozen,
    so instances can be shared freely.  The squared norm must be 1 within
    ``norm_tol`` (ODE-evolved states pass a looser tolerance explicitly).
    """

    def __init__(self, basis: FockBasis, amplitudes: Sequence[complex] | np.ndarray,
                 *, norm_tol: float = NORM_TOL):
        amps = np.array(amplitudes, dtype=np.complex128)
        if amps.shape != (len(basis),):
            raise ValueError(
                f"amplitude vector of length {amps.shape} does not match {basis!r}")
        drift = abs(float(np.sum(np.abs(amps) ** 2)) - 1.0)
        if drift > norm_tol:
            raise ValueError(f"state is not normalized: |norm^2 - 1| = {drift:.3e}")
        amps.setflags(write=False)
        self.basis = basis
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        if other.basis is not self.basis:
            raise ValueError("overlap requires states on the same basis")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def amplitude_of(self, triple) -> complex:
        return complex(self.amplitudes[self.basis.index_of(triple)])


def fock_state(basis: FockBasis, triple) -> StateVector:
    """Unit amplitude on a single occupation triple."""
    amps = np.zeros(len(basis), dtype=np.complex128)
    amps[basis.index_of(triple)] = 1.0
    return StateVector(basis, amps)


def superpose(basis: FockBasis,
              terms: Iterable[tuple[complex, Sequence[int]]]) -> StateVector:
    """Normalized superposition of occupation triples.

    Input coefficients need not be normalized; they are rescaled to unit
    norm.  All-zero coefficients are rejected.
    """
    amps = np.zeros(len(basis), dtype=np.complex128)
    for coeff, triple in terms:
        amps[basis.index_of(triple)] += coeff
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError("superposition has no nonzero coefficient")
    return StateVector(basis, amps / norm)


def population_distribution(state: StateVector, mode: int) -> np.ndarray:
    """Probability P(n) of finding n atoms in one mode, for n = 0..N."""
    occ = state.basis.occupation_of(mode)
    return np.bincount(occ, weights=state.probabilities(),
                       minlength=state.basis.n_atoms + 1)


def distribution_moments(probabilities: np.ndarray) -> tuple[float, float]:
    """Mean and standard deviation of a distribution over counts 0..N."""
    n = np.arange(len(probabilities), dtype=float)
    mean = float(n @ probabilities)
    var = float((n ** 2) @ probabilities) - mean ** 2
    return mean, float(np.sqrt(max(var, 0.0)))


def mean_and_std_n0(state: StateVector) -> tuple[float, float]:
    """Mean and standard deviation of the m_F = 0 population measurement."""
    return distribution_moments(population_distribution(state, 0))
