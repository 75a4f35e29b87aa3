"""End-to-end three-mode interferometry protocols and precision scans.

Three pipelines estimate the LSV coupling kappa from the m_F = 0 population
of a final state:

* spin-mixing echo: evolve |0,N,0> under the mixing Hamiltonian, accumulate
  the LSV phase, undo the mixing evolution;
* superposition input: start from (|0,N,0> + |N/2,0,N/2>)/sqrt(2), accumulate
  the phase, apply the same mixing recombination;
* sweep interferometer: adiabatic quadratic-Zeeman sweep to the balanced
  Dicke state, pi/2 rotation, phase accumulation, inverse rotation, reverse
  sweep.

Precision follows the error-propagation formula
Delta kappa = Std(N_0) / |d<N_0>/d kappa| with a central finite difference,
optionally after blurring the population distribution with a Gaussian
detector kernel.  Scans evaluate the precision over (t, kappa) grids and a
least-squares log-log fit extracts the scaling with atom number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fock import (StateVector, distribution_moments, enumerate_basis,
                   fock_state, population_distribution, superpose)
from .operators import RampSchedule, h_smd
from .dynamics import (SpectralCache, apply_lsv_phase, evolve_ramp, evolve_static,
                       promote_to_full, ramp_propagator, rotate, rotation_matrix)

# Derivatives below this magnitude flag a flat response (precision = inf).
DERIVATIVE_FLOOR = 1e-12


def _derivative_resolution(upper, lower, dkappa: float):
    """Smallest central-difference slope distinguishable from roundoff.

    At symmetric extrema the true slope vanishes; the finite difference then
    returns pure floating-point noise of order eps * |mean| / dkappa, which
    must be flagged non-finite rather than divided by.
    """
    scale = np.maximum(1.0, np.maximum(np.abs(upper), np.abs(lower)))
    return np.maximum(DERIVATIVE_FLOOR,
                      4.0 * np.finfo(float).eps * scale / dkappa)


@dataclass(frozen=True)
class SmdConfig:
    """Spin-mixing protocol parameters (echo and superposition variants)."""

    n_atoms: int
    t: float                  # preparation/recombination time
    chi: float = 1.0          # spin-exchange strength
    kappa: float = 0.0        # LSV coupling to estimate
    big_t: float = 1.0        # interrogation time

    def __post_init__(self):
        if self.n_atoms < 2 or self.n_atoms % 2:
            raise ValueError(f"atom number must be even and positive, got {self.n_atoms}")
        if not 0.0 < self.t <= 2.0 * np.pi:
            raise ValueError(f"mixing time must lie in (0, 2 pi], got {self.t}")
        if self.big_t <= 0.0:
            raise ValueError(f"interrogation time must be positive, got {self.big_t}")


@dataclass(frozen=True)
class QptConfig:
    """Sweep-interferometer parameters."""

    n_atoms: int
    c2: float = -1.0          # spin-mixing rate (antiferro sign convention)
    q0: float = 3.0           # sweep start, ramped q0 -> 0
    qf: float = 3.0           # recombination sweep target, 0 -> qf
    beta: float = 0.01        # sweep rate
    kappa: float = 0.0
    big_t: float = 1.0
    ode_tolerance: float = 1e-10

    def __post_init__(self):
        if self.n_atoms < 2 or self.n_atoms % 2:
            raise ValueError(f"atom number must be even and positive, got {self.n_atoms}")
        if self.c2 >= 0.0:
            raise ValueError(f"spin-mixing rate c2 must be negative, got {self.c2}")
        if self.beta <= 0.0:
            raise ValueError(f"sweep rate must be positive, got {self.beta}")
        if self.q0 < 0.0 or self.qf < 0.0:
            raise ValueError("sweep endpoints q0, qf must be nonnegative")
        if self.big_t <= 0.0:
            raise ValueError(f"interrogation time must be positive, got {self.big_t}")


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian detection blur of width sigma atoms; sigma = 0 is noiseless."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError(f"detection width must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class ScanResult:
    """Precision landscape over (t, kappa) grids and its finite minimum."""

    t_values: np.ndarray | None
    kappa_values: np.ndarray
    surface: np.ndarray
    min_precision: float
    t_opt: float | None
    kappa_opt: float


@dataclass(frozen=True)
class FitResult:
    """Ordinary least squares of ln(dk_min * T) on ln N."""

    slope: float
    intercept: float
    residual: float


# -- single-shot protocol runs ----------------------------------------------

def run_smd_echo(cfg: SmdConfig) -> StateVector:
    """exp(+i H_mix t) exp(-i kappa G T) exp(-i H_mix t) |0,N,0>.

    Stays inside the zero-magnetization sector, which doubles as a
    decoherence-free subspace for uniform magnetic noise.
    """
    basis = enumerate_basis(cfg.n_atoms, 0)
    cache = SpectralCache.build(h_smd(basis, cfg.chi))
    state = fock_state(basis, (0, cfg.n_atoms, 0))
    state = evolve_static(state, cache, cfg.t)
    state = apply_lsv_phase(state, cfg.kappa, cfg.big_t)
    return evolve_static(state, cache, -cfg.t)


def run_superposition(cfg: SmdConfig) -> StateVector:
    """Phase accumulation on (|0,N,0> + |N/2,0,N/2>)/sqrt(2), mixing recombination."""
    n = cfg.n_atoms
    basis = enumerate_basis(n, 0)
    cache = SpectralCache.build(h_smd(basis, cfg.chi))
    state = superpose(basis, [(1.0, (0, n, 0)), (1.0, (n // 2, 0, n // 2))])
    state = apply_lsv_phase(state, cfg.kappa, cfg.big_t)
    return evolve_static(state, cache, -cfg.t)


def run_qpt(cfg: QptConfig) -> StateVector:
    """Sweep to the balanced Dicke state, rotate, accumulate, rotate back, sweep out."""
    n = cfg.n_atoms
    sector = enumerate_basis(n, 0)
    state = fock_state(sector, (0, n, 0))
    state = evolve_ramp(state, cfg.c2, RampSchedule(cfg.q0, 0.0, cfg.beta),
                        cfg.ode_tolerance)
    state = promote_to_full(state)
    state = rotate(state, np.pi / 2)
    state = apply_lsv_phase(state, cfg.kappa, cfg.big_t)
    state = rotate(state, -np.pi / 2)
    return evolve_ramp(state, cfg.c2, RampSchedule(0.0, cfg.qf, cfg.beta),
                       cfg.ode_tolerance)


# -- precision from population statistics ------------------------------------

def noisy_distribution(probabilities: np.ndarray, sigma: float) -> np.ndarray:
    """Blur a population distribution with a Gaussian detector of width sigma.

    Convolves with exp(-(n - m)^2 / 2 sigma^2) on the support 0..N and
    renormalizes; sigma = 0 returns the input unchanged.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    if sigma < 0.0:
        raise ValueError(f"detection width must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return probabilities.copy()
    blurred = _noise_kernel(len(probabilities) - 1, sigma) @ probabilities
    return blurred / blurred.sum()


def _noise_kernel(n_atoms: int, sigma: float) -> np.ndarray:
    n = np.arange(n_atoms + 1, dtype=float)
    return np.exp(-((n[:, None] - n[None, :]) ** 2) / (2.0 * sigma ** 2))


def _moments_with_noise(state: StateVector, sigma: float) -> tuple[float, float]:
    dist = population_distribution(state, 0)
    return distribution_moments(noisy_distribution(dist, sigma))


def precision(final_state_fn: Callable[[float], StateVector], kappa: float,
              dkappa: float = 1e-6) -> float:
    """Error-propagation precision Std(N_0)/|d<N_0>/d kappa| at one kappa.

    Central finite difference with step dkappa; a derivative below 1e-12
    yields inf (a value, not an error), marking a flat response point.
    """
    return precision_noisy(final_state_fn, kappa, dkappa, NoiseModel(0.0))


def precision_noisy(final_state_fn: Callable[[float], StateVector], kappa: float,
                    dkappa: float = 1e-6, noise: NoiseModel = NoiseModel(0.0)) -> float:
    """Like precision(), with the population distribution blurred first."""
    if dkappa <= 0.0:
        raise ValueError(f"finite-difference step must be positive, got {dkappa}")
    _, std = _moments_with_noise(final_state_fn(kappa), noise.sigma)
    upper, _ = _moments_with_noise(final_state_fn(kappa + dkappa), noise.sigma)
    lower, _ = _moments_with_noise(final_state_fn(kappa - dkappa), noise.sigma)
    derivative = (upper - lower) / (2.0 * dkappa)
    if abs(derivative) < _derivative_resolution(upper, lower, dkappa):
        return np.inf
    return std / abs(derivative)


# -- vectorized scans ---------------------------------------------------------

def default_t_grid(points: int = 200) -> np.ndarray:
    """Uniform mixing-time grid over (0, 2 pi]."""
    return np.linspace(2.0 * np.pi / points, 2.0 * np.pi, points)


def default_kappa_grid(big_t: float = 1.0, points: int = 101) -> np.ndarray:
    """Uniform kappa grid with kappa * T spanning [-0.1 pi, 0.1 pi]."""
    return np.linspace(-0.1 * np.pi, 0.1 * np.pi, points) / big_t


def _aggregation_matrix(n0_values: np.ndarray, n_atoms: int) -> np.ndarray:
    agg = np.zeros((n_atoms + 1, len(n0_values)))
    agg[n0_values, np.arange(len(n0_values))] = 1.0
    return agg


def _precision_batch(psi_in: np.ndarray, recombination: np.ndarray,
                     generator: np.ndarray, agg: np.ndarray,
                     kappas: np.ndarray, big_t: float, dkappa: float,
                     sigma: float) -> np.ndarray:
    """Precision at every kappa for one prepared state and recombination map.

    Evaluates the population moments at kappa and kappa +- dkappa in a
    single batch: the LSV phase is diagonal, so the final amplitudes are
    recombination @ (phase * psi_in).
    """
    n_kappa = len(kappas)
    evals = np.concatenate([kappas, kappas + dkappa, kappas - dkappa])
    phases = np.exp(-1j * big_t * np.outer(generator, evals))
    final = recombination @ (phases * psi_in[:, None])
    dist = agg @ (np.abs(final) ** 2)
    if sigma > 0.0:
        dist = _noise_kernel(agg.shape[0] - 1, sigma) @ dist
        dist = dist / dist.sum(axis=0)
    counts = np.arange(agg.shape[0], dtype=float)
    means = counts @ dist
    variances = (counts ** 2) @ dist - means ** 2
    stds = np.sqrt(np.clip(variances[:n_kappa], 0.0, None))
    upper, lower = means[n_kappa:2 * n_kappa], means[2 * n_kappa:]
    derivatives = (upper - lower) / (2.0 * dkappa)
    flat = np.abs(derivatives) < _derivative_resolution(upper, lower, dkappa)
    with np.errstate(divide="ignore", invalid="ignore"):
        row = stds / np.abs(derivatives)
    row[flat] = np.inf
    return row


def scan_optimal_precision(protocol: str, n_atoms: int,
                           t_grid: np.ndarray | None = None,
                           kappa_grid: np.ndarray | None = None,
                           noise: NoiseModel | None = None, *,
                           chi: float = 1.0, big_t: float = 1.0,
                           c2: float = -1.0, q0: float = 3.0, qf: float = 3.0,
                           beta: float = 0.01, ode_tolerance: float = 1e-10,
                           dkappa: float | None = None) -> ScanResult:
    """Evaluate the precision on a (t, kappa) grid and take the finite minimum.

    ``protocol`` is one of "smd_echo", "superposition" or "qpt"; the sweep
    protocol has no mixing-time axis and scans kappa only.  Non-finite
    entries (flat response, e.g. at symmetric extrema) are excluded from
    the minimum; ties break on the lowest (t index, kappa index).
    """
    if protocol not in ("smd_echo", "superposition", "qpt"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if kappa_grid is None:
        kappa_grid = default_kappa_grid(big_t)
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    if kappa_grid.size == 0:
        raise ValueError("kappa grid is empty")
    sigma = noise.sigma if noise is not None else 0.0
    if dkappa is None:
        dkappa = 1e-6 / big_t

    if protocol == "qpt":
        cfg = QptConfig(n_atoms, c2=c2, q0=q0, qf=qf, beta=beta, big_t=big_t,
                        ode_tolerance=ode_tolerance)
        surface = _qpt_surface(cfg, kappa_grid, sigma, dkappa)
        t_values = None
    else:
        if t_grid is None:
            t_grid = default_t_grid()
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.size == 0:
            raise ValueError("t grid is empty")
        if (t_grid <= 0).any():
            raise ValueError("mixing-time grid must be positive")
        SmdConfig(n_atoms, t=np.pi, chi=chi, big_t=big_t)  # shared validation
        surface = _smd_surface(protocol, n_atoms, chi, big_t, t_grid,
                               kappa_grid, sigma, dkappa)
        t_values = t_grid

    return _result_from_surface(t_values, kappa_grid, surface)


def _smd_surface(protocol: str, n_atoms: int, chi: float, big_t: float,
                 t_grid: np.ndarray, kappas: np.ndarray, sigma: float,
                 dkappa: float) -> np.ndarray:
    basis = enumerate_basis(n_atoms, 0)
    cache = SpectralCache.build(h_smd(basis, chi))
    v, lam = cache.eigenvectors, cache.eigenvalues
    generator = (basis.occupation_of(+1) + basis.occupation_of(-1)).astype(float)
    agg = _aggregation_matrix(basis.occupation_of(0), n_atoms)
    psi0 = fock_state(basis, (0, n_atoms, 0)).amplitudes
    if protocol == "superposition":
        psi_in = superpose(basis, [(1.0, (0, n_atoms, 0)),
                                   (1.0, (n_atoms // 2, 0, n_atoms // 2))]).amplitudes
        psi0_eig = None
    else:
        psi0_eig = v.conj().T @ psi0
    surface = np.empty((len(t_grid), len(kappas)))
    for i, t in enumerate(t_grid):
        recombination = (v * np.exp(1j * lam * t)) @ v.conj().T
        prepared = psi_in if psi0_eig is None else v @ (np.exp(-1j * lam * t) * psi0_eig)
        surface[i] = _precision_batch(prepared, recombination, generator, agg,
                                      kappas, big_t, dkappa, sigma)
    return surface


def _qpt_pipeline(cfg: QptConfig):
    """Kappa-independent parts of the sweep protocol, built once per config."""
    sector = enumerate_basis(cfg.n_atoms, 0)
    state = fock_state(sector, (0, cfg.n_atoms, 0))
    state = evolve_ramp(state, cfg.c2, RampSchedule(cfg.q0, 0.0, cfg.beta),
                        cfg.ode_tolerance)
    full = enumerate_basis(cfg.n_atoms)
    state = promote_to_full(state, full)
    psi_in = rotation_matrix(full, np.pi / 2) @ state.amplitudes
    reverse = ramp_propagator(full, cfg.c2, RampSchedule(0.0, cfg.qf, cfg.beta),
                              cfg.ode_tolerance)
    recombination = reverse @ rotation_matrix(full, -np.pi / 2)
    generator = (full.occupation_of(+1) + full.occupation_of(-1)).astype(float)
    agg = _aggregation_matrix(full.occupation_of(0), cfg.n_atoms)
    return psi_in, recombination, generator, agg


def _qpt_surface(cfg: QptConfig, kappas: np.ndarray, sigma: float,
                 dkappa: float) -> np.ndarray:
    psi_in, recombination, generator, agg = _qpt_pipeline(cfg)
    return _precision_batch(psi_in, recombination, generator, agg,
                            kappas, cfg.big_t, dkappa, sigma)


def qpt_noise_sweep(n_atoms: int, sigmas, kappa_grid: np.ndarray | None = None,
                    *, c2: float = -1.0, q0: float = 3.0, qf: float = 3.0,
                    beta: float = 0.01, big_t: float = 1.0,
                    ode_tolerance: float = 1e-10,
                    dkappa: float | None = None) -> list[ScanResult]:
    """Sweep-protocol scans for several detection widths at one atom number.

    The sweep integrations do not depend on sigma, so the pipeline is built
    once and only the population blur is repeated.  Returns one ScanResult
    per sigma, in order.
    """
    if kappa_grid is None:
        kappa_grid = default_kappa_grid(big_t)
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    if dkappa is None:
        dkappa = 1e-6 / big_t
    cfg = QptConfig(n_atoms, c2=c2, q0=q0, qf=qf, beta=beta, big_t=big_t,
                    ode_tolerance=ode_tolerance)
    pipeline = _qpt_pipeline(cfg)
    results = []
    for sigma in sigmas:
        sigma = NoiseModel(float(sigma)).sigma  # validates nonnegativity
        surface = _precision_batch(*pipeline, kappa_grid, big_t, dkappa, sigma)
        results.append(_result_from_surface(None, kappa_grid, surface))
    return results


def _result_from_surface(t_values: np.ndarray | None, kappa_grid: np.ndarray,
                         surface: np.ndarray) -> ScanResult:
    finite = np.isfinite(surface)
    if not finite.any():
        raise RuntimeError("flat response: no grid point has a usable derivative")
    masked = np.where(finite, surface, np.inf)
    flat_index = int(np.argmin(masked))
    if t_values is None:
        t_opt = None
        kappa_opt = float(kappa_grid[flat_index])
    else:
        it, ik = np.unravel_index(flat_index, surface.shape)
        t_opt = float(t_values[it])
        kappa_opt = float(kappa_grid[ik])
    return ScanResult(t_values, kappa_grid, surface,
                      float(masked.flat[flat_index]), t_opt, kappa_opt)


def fit_scaling(points, big_t: float = 1.0) -> FitResult:
    """OLS fit of ln(dk_min * T) against ln N over (N, dk_min) pairs."""
    points = list(points)
    if len(points) < 3:
        raise ValueError(f"need at least 3 points for a scaling fit, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=float)
    dk = np.array([p[1] for p in points], dtype=float)
    if (n <= 0).any() or (dk <= 0).any() or big_t <= 0:
        raise ValueError("scaling fit needs positive atom numbers and precisions")
    x = np.log(n)
    y = np.log(dk * big_t)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    return FitResult(float(slope), float(intercept), residual)
