"""Unitary propagation on the three-mode Fock space.

Spectral evolution under fixed Hamiltonians, diagonal LSV phase
accumulation, collective rotations, and adaptive integration of the
time-dependent quadratic-Zeeman sweep.  All operations are pure: they
return new StateVector values and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .fock import NORM_TOL, FockBasis, StateVector, enumerate_basis
from .operators import HermitianOperator, RampSchedule, l_x

# Default local tolerance of the adaptive sweep integrator, and the norm
# drift above which a ramp result is rejected.
RAMP_TOLERANCE = 1e-10
RAMP_NORM_LIMIT = 1e-6


def _carried_norm_tol(amplitudes: np.ndarray) -> float:
    """Norm tolerance for the output of a norm-preserving operation.

    States that already carry a (permitted) drift, e.g. from a ramp
    integration, must not be rejected by the exact unitaries applied after.
    """
    drift = abs(float(np.sum(np.abs(amplitudes) ** 2)) - 1.0)
    return max(NORM_TOL, 2.0 * drift + 1e-12)


@dataclass(frozen=True)
class SpectralCache:
    """Eigendecomposition of a Hermitian operator, reused across evolutions."""

    operator: HermitianOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def build(cls, operator: HermitianOperator) -> "SpectralCache":
        dense = operator.to_dense()
        eigenvalues, eigenvectors = np.linalg.eigh(dense)
        recon = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        scale = max(operator.max_abs(), np.finfo(float).tiny)
        err = float(np.max(np.abs(recon - dense)))
        if err > 1e-9 * scale:
            raise RuntimeError(
                f"eigendecomposition failed to reconstruct the operator "
                f"(max error {err:.3e} vs bound {1e-9 * scale:.3e})")
        eigenvalues.setflags(write=False)
        eigenvectors.setflags(write=False)
        return cls(operator, eigenvalues, eigenvectors)

    @property
    def basis(self) -> FockBasis:
        return self.operator.basis


def evolve_static(state: StateVector,
                  hamiltonian: HermitianOperator | SpectralCache,
                  duration: float) -> StateVector:
    """Evolve exp(-i H t) |psi> via the spectral decomposition of H.

    Negative duration gives the inverse evolution.  Pass a SpectralCache to
    amortize the eigendecomposition over repeated calls.
    """
    cache = (hamiltonian if isinstance(hamiltonian, SpectralCache)
             else SpectralCache.build(hamiltonian))
    if cache.basis is not state.basis:
        raise ValueError("state and hamiltonian live on different bases")
    phases = np.exp(-1j * cache.eigenvalues * duration)
    out = cache.eigenvectors @ (phases * (cache.eigenvectors.conj().T @ state.amplitudes))
    return StateVector(state.basis, out, norm_tol=_carried_norm_tol(state.amplitudes))


def apply_lsv_phase(state: StateVector, kappa: float, big_t: float) -> StateVector:
    """Accumulate the LSV phase exp(-i kappa (N_1 + N_-1) T).

    Diagonal in the occupation basis, so every mode population is left
    untouched; only relative phases between sectors of different
    N_1 + N_-1 change.
    """
    generator = state.basis.occupation_of(+1) + state.basis.occupation_of(-1)
    return StateVector(state.basis,
                       np.exp(-1j * kappa * big_t * generator) * state.amplitudes,
                       norm_tol=_carried_norm_tol(state.amplitudes))


@lru_cache(maxsize=8)
def _lx_spectral(basis: FockBasis) -> SpectralCache:
    return SpectralCache.build(l_x(basis))


def rotate(state: StateVector, angle: float) -> StateVector:
    """Collective rotation exp(-i angle L_x) on a full-basis state."""
    if not state.basis.is_full:
        raise ValueError(
            "rotation leaves any fixed-magnetization sector; "
            "promote_to_full the state first")
    return evolve_static(state, _lx_spectral(state.basis), angle)


def rotation_matrix(basis: FockBasis, angle: float) -> np.ndarray:
    """Dense matrix of exp(-i angle L_x); building block for scan pipelines."""
    cache = _lx_spectral(basis)
    v = cache.eigenvectors
    return (v * np.exp(-1j * angle * cache.eigenvalues)) @ v.conj().T


def promote_to_full(state: StateVector,
                    full_basis: FockBasis | None = None) -> StateVector:
    """Embed a sector-restricted state into the full N-atom basis."""
    src = state.basis
    if src.is_full:
        raise ValueError("state already lives on the full basis")
    if full_basis is None:
        full_basis = enumerate_basis(src.n_atoms)
    elif not full_basis.is_full or full_basis.n_atoms != src.n_atoms:
        raise ValueError(f"{full_basis!r} is not the full basis for N={src.n_atoms}")
    amps = np.zeros(len(full_basis), dtype=np.complex128)
    for i, triple in enumerate(src):
        amps[full_basis.index_of(triple)] = state.amplitudes[i]
    return StateVector(full_basis, amps, norm_tol=_carried_norm_tol(state.amplitudes))


def restrict_to_sector(state: StateVector, magnetization: int,
                       sector_basis: FockBasis | None = None,
                       atol: float = 1e-9) -> StateVector:
    """Project a full-basis state onto one magnetization sector.

    Rejects the projection when more than ``atol`` probability lives
    outside the sector.
    """
    src = state.basis
    if not src.is_full:
        raise ValueError("restriction starts from a full-basis state")
    if sector_basis is None:
        sector_basis = enumerate_basis(src.n_atoms, magnetization)
    amps = np.array([state.amplitudes[src.index_of(t)] for t in sector_basis])
    dropped = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if dropped > atol:
        raise ValueError(
            f"state has probability {dropped:.3e} outside sector m={magnetization}")
    return StateVector(sector_basis, amps, norm_tol=max(atol, 1e-9))


# -- quadratic-Zeeman sweep integration -------------------------------------
#
# The sweep Hamiltonian conserves magnetization, so a full-basis evolution
# decomposes into independent tridiagonal blocks (one per sector, states
# ordered by pair number k).  The blocks are padded to a common size and
# integrated as one stacked system, which is observationally equivalent to
# integrating the whole space at once.
#
# The diagonal part diag0 - q(t) n0 commutes with itself at all times, so it
# is absorbed exactly into analytic phases (an interaction picture on the
# coupled amplitude equations).  The stepper then only resolves the
# spin-exchange coupling, whose norm is an order of magnitude below the bare
# diagonal during a q >> |c2| sweep.


class _RampTables:
    """Per-sector tridiagonal data for H(q) = diag0 - q * n0 + couplings."""

    def __init__(self, basis: FockBasis, c2: float):
        mags = basis.occupation_of(+1) - basis.occupation_of(-1)
        n_zero_all = basis.occupation_of(0)
        c2_half = c2 / (2 * basis.n_atoms)
        # Within a sector, basis (lexicographic) order is ascending pair
        # number k, which makes the pair-exchange coupling tridiagonal.
        self.groups = [np.flatnonzero(mags == m) for m in np.unique(mags)]
        width = max(len(g) for g in self.groups)
        shape = (len(self.groups), width)
        self.diag0 = np.zeros(shape)
        self.n0 = np.zeros(shape)
        self.coup = np.zeros((shape[0], max(width - 1, 1)))
        for s, g in enumerate(self.groups):
            n0 = n_zero_all[g].astype(float)
            self.n0[s, :len(g)] = n0
            self.diag0[s, :len(g)] = c2_half * (2 * n0 - 1) * (basis.n_atoms - n0)
            for a in range(len(g) - 1):
                n_plus, n_zero, n_minus = basis.triple_at(g[a])
                self.coup[s, a] = (c2 / basis.n_atoms) * np.sqrt(
                    (n_plus + 1) * (n_minus + 1) * n_zero * (n_zero - 1))
        # Bond quantities for the interaction picture: adjacent states within
        # a sector differ by one pair, i.e. by -2 in n0.
        self.delta_diag0 = self.diag0[:, 1:] - self.diag0[:, :-1]

    def pack(self, amplitudes: np.ndarray) -> np.ndarray:
        out = np.zeros(self.diag0.shape, dtype=np.complex128)
        for s, g in enumerate(self.groups):
            out[s, :len(g)] = amplitudes[g]
        return out

    def unpack(self, stacked: np.ndarray, dim: int) -> np.ndarray:
        out = np.zeros(dim, dtype=np.complex128)
        for s, g in enumerate(self.groups):
            out[g] = stacked[s, :len(g)]
        return out


def _integrate_ramp(tables: _RampTables, y0: np.ndarray,
                    schedule: RampSchedule, tolerance: float) -> np.ndarray:
    """Integrate i dy/dt = H(q(t)) y for stacked sector blocks.

    ``y0`` has shape (sectors, width) for a state or (sectors, width, width)
    for a propagator; the Hamiltonian always acts on axis 1.  Internally the
    diagonal is removed by the exact substitution
    y_j(t) = exp(-i Theta_j(t)) z_j(t), Theta_j = diag0_j t - n0_j Int(q),
    leaving only phase-dressed couplings for the adaptive stepper.
    """
    shape = y0.shape
    matrix = y0.ndim == 3
    coup = tables.coup[:, :, None] if matrix else tables.coup
    delta = tables.delta_diag0[:, :, None] if matrix else tables.delta_diag0

    def rhs(t: float, z_flat: np.ndarray) -> np.ndarray:
        z = z_flat.reshape(shape)
        # bond phase Theta_{a+1} - Theta_a = delta_diag0 * t + 2 Int(q)
        dressed = coup * np.exp(1j * (delta * t + 2.0 * schedule.q_integral(t)))
        hz = np.empty_like(z)
        np.multiply(dressed, z[:, :-1], out=hz[:, 1:])
        hz[:, 0] = 0.0
        hz[:, :-1] += dressed.conj() * z[:, 1:]
        hz *= -1j
        return hz.ravel()

    sol = solve_ivp(rhs, (0.0, schedule.duration), y0.ravel(),
                    method="DOP853", rtol=tolerance, atol=tolerance,
                    t_eval=(schedule.duration,))
    if not sol.success:
        raise RuntimeError(f"sweep integration failed: {sol.message}")
    z_final = sol.y[:, -1].reshape(shape)
    end = schedule.duration
    theta = tables.diag0 * end - tables.n0 * schedule.q_integral(end)
    phases = np.exp(-1j * theta)
    return (phases[:, :, None] if matrix else phases) * z_final


def evolve_ramp(state: StateVector, c2: float, schedule: RampSchedule,
                tolerance: float = RAMP_TOLERANCE) -> StateVector:
    """Integrate the Schroedinger equation through a linear sweep of q.

    Norm drift is checked, not silently renormalized: drift beyond 1e-6
    raises with a hint to tighten the tolerance.
    """
    if schedule.duration == 0.0:
        return StateVector(state.basis, state.amplitudes)
    tables = _RampTables(state.basis, c2)
    final = _integrate_ramp(tables, tables.pack(state.amplitudes),
                            schedule, tolerance)
    amps = tables.unpack(final, len(state.basis))
    drift = abs(float(np.sum(np.abs(amps) ** 2)) - 1.0)
    if drift > RAMP_NORM_LIMIT:
        raise RuntimeError(
            f"sweep integration drifted off norm by {drift:.3e}; "
            f"tighten the tolerance (currently {tolerance:g})")
    return StateVector(state.basis, amps, norm_tol=RAMP_NORM_LIMIT)


def ramp_propagator(basis: FockBasis, c2: float, schedule: RampSchedule,
                    tolerance: float = RAMP_TOLERANCE) -> np.ndarray:
    """Dense unitary of a full sweep, integrated once per sector block.

    Lets precision scans amortize one sweep integration over many phase
    values instead of re-integrating per grid point.
    """
    dim = len(basis)
    if dim > 2000:
        raise ValueError(f"dense propagator refused for dimension {dim}")
    if schedule.duration == 0.0:
        return np.eye(dim, dtype=np.complex128)
    tables = _RampTables(basis, c2)
    width = tables.diag0.shape[1]
    y0 = np.zeros((len(tables.groups), width, width), dtype=np.complex128)
    y0[:] = np.eye(width)
    blocks = _integrate_ramp(tables, y0, schedule, tolerance)
    out = np.zeros((dim, dim), dtype=np.complex128)
    drift = 0.0
    for s, g in enumerate(tables.groups):
        block = blocks[s, :len(g), :len(g)]
        drift = max(drift, float(np.max(np.abs(
            block.conj().T @ block - np.eye(len(g))))))
        out[np.ix_(g, g)] = block
    if drift > RAMP_NORM_LIMIT:
        raise RuntimeError(
            f"sweep propagator lost unitarity by {drift:.3e}; "
            f"tighten the tolerance (currently {tolerance:g})")
    return out
