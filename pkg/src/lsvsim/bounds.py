"""Quantum Cramer-Rao bounds for the LSV coupling kappa.

Closed-form bounds for product, uniform and GHZ-type spin-F inputs, QFI
evaluation on explicit Fock-space states, a certified optimal-distribution
search, the rank-2 tensor shift coefficient from the Wigner-Eckart theorem,
and the conversion between kappa and the frame-dependent SME coefficient
C0^(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .fock import StateVector
from .operators import HermitianOperator

# Energy-shift-to-coefficient ratio Delta_E / (h C0^(2)) for 87Rb, in Hz,
# together with Delta(j_z^2) = 1 for the m = 1 / m = 0 clock states.
DELTA_E_OVER_H_C02_RB87 = 8.6e15
DELTA_JZ2_RB87 = 1.0


@dataclass(frozen=True)
class SpinDistribution:
    """Single-atom amplitudes over the 2F+1 Zeeman sublevels m = -F..F."""

    spin_f: float
    amplitudes: np.ndarray

    def __post_init__(self):
        levels = round(2 * self.spin_f + 1)
        if self.spin_f <= 0 or abs(2 * self.spin_f - (levels - 1)) > 1e-12:
            raise ValueError(f"spin length must be a positive (half-)integer, got {self.spin_f}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (levels,):
            raise ValueError(f"expected {levels} amplitudes for F={self.spin_f}")
        if abs(np.sum(np.abs(amps) ** 2) - 1.0) > 1e-12:
            raise ValueError("sublevel amplitudes must be normalized to 1e-12")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.spin_f, self.spin_f + 0.5)

    @classmethod
    def from_weights(cls, spin_f: float, weights: np.ndarray) -> "SpinDistribution":
        weights = np.asarray(weights, dtype=float)
        return cls(spin_f, np.sqrt(weights / weights.sum()))

    @classmethod
    def uniform(cls, spin_f: float) -> "SpinDistribution":
        levels = round(2 * spin_f + 1)
        return cls(spin_f, np.full(levels, 1.0 / np.sqrt(levels)))

    @classmethod
    def optimal_product(cls, spin_f: float) -> "SpinDistribution":
        """Equal weight on m = 0 and m = F: the best unentangled input."""
        levels = round(2 * spin_f + 1)
        amps = np.zeros(levels)
        amps[round(spin_f)] = 1.0 / np.sqrt(2.0)   # m = 0
        amps[-1] = 1.0 / np.sqrt(2.0)              # m = +F
        return cls(spin_f, amps)

    @classmethod
    def optimal_ghz(cls, spin_f: float) -> "SpinDistribution":
        """Weights (1/4, 1/2, 1/4) on m = -F, 0, +F: the best GHZ branching."""
        levels = round(2 * spin_f + 1)
        amps = np.zeros(levels)
        amps[0] = 0.5
        amps[round(spin_f)] = 1.0 / np.sqrt(2.0)
        amps[-1] = 0.5
        return cls(spin_f, amps)


@dataclass(frozen=True)
class MomentPair:
    """Second and fourth moments of m_F under a sublevel distribution."""

    m2: float
    m4: float

    @property
    def variance_of_m2(self) -> float:
        return self.m4 - self.m2 ** 2


def moments(dist: SpinDistribution) -> MomentPair:
    """M1 = sum |alpha_m|^2 m^2 and M2 = sum |alpha_m|^2 m^4."""
    weights = np.abs(dist.amplitudes) ** 2
    msq = dist.m_values ** 2
    return MomentPair(float(weights @ msq), float(weights @ msq ** 2))


def qcrb_product(dist: SpinDistribution, n_atoms: int,
                 big_t: float = 1.0, eta: float = 1.0) -> float:
    """QCRB on kappa for N unentangled atoms sharing one sublevel state.

    The QFI scales linearly with N: Delta kappa = 1/(T sqrt(4 eta N (M2 - M1^2))).
    """
    var = moments(dist).variance_of_m2
    if var <= 0.0:
        raise ValueError("zero QFI state: m^2 has no variance under this distribution")
    return 1.0 / (big_t * np.sqrt(4.0 * eta * n_atoms * var))


def qcrb_uniform(spin_f: float, n_atoms: int,
                 big_t: float = 1.0, eta: float = 1.0) -> float:
    """QCRB for the flat sublevel distribution, in closed form."""
    if spin_f < 1:
        raise ValueError(f"uniform-distribution bound needs F >= 1, got {spin_f}")
    f = spin_f
    inner = 45.0 / (4.0 * n_atoms * f * (1 + f) * (4 * f * f + 4 * f - 3))
    return np.sqrt(inner) / (big_t * np.sqrt(eta))


def qcrb_ghz(dist: SpinDistribution, n_atoms: int,
             big_t: float = 1.0, eta: float = 1.0) -> float:
    """QCRB for the GHZ superposition of all-atom sublevel branches.

    N^2 replaces N relative to the product bound (Heisenberg scaling).
    """
    var = moments(dist).variance_of_m2
    if var <= 0.0:
        raise ValueError("zero QFI state: m^2 has no variance under this distribution")
    return 1.0 / (big_t * np.sqrt(4.0 * eta * n_atoms ** 2 * var))


def qfi_from_state(state: StateVector, generator: HermitianOperator,
                   big_t: float = 1.0) -> float:
    """QFI of a pure state under exp(-i kappa G T): 4 T^2 Var(G)."""
    if generator.basis is not state.basis:
        raise ValueError("state and generator live on different bases")
    g_psi = generator.apply(state.amplitudes)
    mean = float(np.real(np.vdot(state.amplitudes, g_psi)))
    second = float(np.real(np.vdot(g_psi, g_psi)))
    return 4.0 * big_t ** 2 * (second - mean ** 2)


def qcrb_from_qfi(qfi: float, eta: float = 1.0) -> float:
    """Delta kappa >= 1/sqrt(eta F_Q)."""
    if qfi <= 0.0:
        raise ValueError(f"QFI must be positive, got {qfi}")
    return 1.0 / np.sqrt(eta * qfi)


def _variance_of_m2(weights_by_abs_m: np.ndarray, values: np.ndarray) -> float:
    m1 = weights_by_abs_m @ values
    return float(weights_by_abs_m @ values ** 2 - m1 ** 2)


def optimize_distribution(spin_f: float, family: Literal["product", "ghz"],
                          n_atoms: int = 1, big_t: float = 1.0, eta: float = 1.0,
                          grid_step: float = 0.01) -> tuple[SpinDistribution, float]:
    """Search the sublevel simplex for the distribution minimizing the QCRB.

    Only |alpha_m|^2 enters the moments and m^2 is even in m, so the search
    runs over weights on |m| = 0..F (dense simplex grid, then coordinate
    transfers with a shrinking step).  The weight of each |m| > 0 is split
    evenly between +-m.  Returns the distribution and its bound for the
    requested family.
    """
    if family not in ("product", "ghz"):
        raise ValueError(f"unknown family {family!r}")
    if spin_f < 1 or spin_f != int(spin_f):
        raise ValueError(f"search supports integer F >= 1, got {spin_f}")
    if spin_f > 4:
        raise ValueError("search supports F <= 4")
    f = int(spin_f)
    values = np.arange(f + 1, dtype=float) ** 2  # m^2 for |m| = 0..F

    # Dense grid over the reduced simplex.
    resolution = max(1, round(1.0 / grid_step))
    best_w, best_var = None, -1.0

    def sweep(prefix: list[int], remaining: int, depth: int):
        nonlocal best_w, best_var
        if depth == f - 1:
            # vectorize the last two coordinates
            last = np.arange(remaining + 1)
            w = np.zeros((remaining + 1, f + 1))
            w[:, :depth] = np.array(prefix, dtype=float)
            w[:, depth] = remaining - last
            w[:, depth + 1] = last
            w /= resolution
            m1 = w @ values
            var = w @ values ** 2 - m1 ** 2
            i = int(np.argmax(var))
            if var[i] > best_var:
                best_var, best_w = float(var[i]), w[i].copy()
            return
        for units in range(remaining + 1):
            sweep(prefix + [units], remaining - units, depth + 1)

    sweep([], resolution, 0)

    # Coordinate-transfer refinement with shrinking step.
    w = best_w.copy()
    step = grid_step
    while step > 1e-9:
        improved = False
        for i in range(f + 1):
            if w[i] < step:
                continue
            for j in range(f + 1):
                if i == j:
                    continue
                trial = w.copy()
                trial[i] -= step
                trial[j] += step
                var = _variance_of_m2(trial, values)
                if var > best_var + 1e-18:
                    best_var, w = var, trial
                    improved = True
        if not improved:
            step /= 2.0
    # Symmetric split over +-m keeps the moments and matches the known optima.
    weights = np.zeros(2 * f + 1)
    weights[f] = w[0]
    for j in range(1, f + 1):
        weights[f + j] = w[j] / 2.0
        weights[f - j] = w[j] / 2.0
    dist = SpinDistribution.from_weights(spin_f, weights)
    bound = (qcrb_product if family == "product" else qcrb_ghz)(
        dist, n_atoms, big_t, eta)
    return dist, bound


def wigner_eckart_coefficient(spin_f: float, m_f: float) -> float:
    """Coefficient of the reduced matrix element in the m_F-level shift.

    [-F(F+1) + 3 m^2] / sqrt((2F+3)(F+1)(2F+1)(2F-1)); the reduced matrix
    element itself is a physical input, not computed here.  Summed over m
    the coefficient vanishes (traceless rank-2 tensor).
    """
    if spin_f < 1:
        raise ValueError(f"rank-2 tensor shift needs F >= 1, got {spin_f}")
    if abs(m_f) > spin_f:
        raise ValueError(f"|m_F| = {abs(m_f)} exceeds F = {spin_f}")
    f = spin_f
    return (-f * (f + 1) + 3.0 * m_f ** 2) / np.sqrt(
        (2 * f + 3) * (f + 1) * (2 * f + 1) * (2 * f - 1))


def kappa_to_c02(kappa: float,
                 delta_e_over_h_c02: float = DELTA_E_OVER_H_C02_RB87,
                 delta_jz2: float = DELTA_JZ2_RB87) -> float:
    """Convert the LSV coupling kappa (rad/s) to the SME coefficient C0^(2).

    kappa / (2 pi) = [Delta_E / (h C0^(2))] / Delta(j_z^2) * C0^(2).
    """
    if delta_e_over_h_c02 == 0.0:
        raise ValueError("energy-shift ratio must be nonzero")
    return (kappa / (2.0 * np.pi)) * delta_jz2 / delta_e_over_h_c02
