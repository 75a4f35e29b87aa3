"""Desk-scale simulations of entanglement-enhanced LSV-coupling estimation
with spin-1 condensates: Fock-space dynamics, quantum Cramer-Rao bounds,
and population-measurement interferometry protocols."""

from .fock import (FockBasis, OccupationTriple, StateVector, enumerate_basis,
                   fock_state, mean_and_std_n0, population_distribution,
                   superpose)
from .operators import (HermitianOperator, RampSchedule, h_qpt, h_smd, l_x,
                        lsv_generator, number_operator)
from .dynamics import (SpectralCache, apply_lsv_phase, evolve_ramp,
                       evolve_static, promote_to_full, ramp_propagator,
                       restrict_to_sector, rotate)
from .bounds import (DELTA_E_OVER_H_C02_RB87, MomentPair, SpinDistribution,
                     kappa_to_c02, moments, optimize_distribution, qcrb_from_qfi,
                     qcrb_ghz, qcrb_product, qcrb_uniform, qfi_from_state,
                     wigner_eckart_coefficient)
from .protocols import (FitResult, NoiseModel, QptConfig, ScanResult, SmdConfig,
                        default_kappa_grid, default_t_grid, fit_scaling,
                        noisy_distribution, precision, precision_noisy,
                        qpt_noise_sweep, run_qpt, run_smd_echo,
                        run_superposition, scan_optimal_precision)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
