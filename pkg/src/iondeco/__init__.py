"""Two-level ion-channel decoherence: Spin-Boson master equation versus
classical white-noise dephasing."""

from .analysis import (ComparisonRun, DecoherenceEstimate, DeltaRSeries, SweepConfig, TauConfig,
                       compare_models, decoherence_time, delta_r, sweep_hopping, tau_grid,
                       thermal_de_broglie)
from .core import (CoefficientSet, DensityMatrix2, EnvironmentParams, NoiseParams, SystemParams,
                   Trajectory, initial_superposition, kelvin_to_thermal_freq, purity)
from .dynamics import (IntegrationError, IntegratorSpec, SpinBosonMode, classical_noise_rhs,
                       integrate, rhs_classical_noise, rhs_spin_boson, spin_boson_rhs)
from .spectral import (QuadratureError, QuadratureSpec, closed_coefficients, coeff_D_closed,
                       coeff_f_highT, coeff_gamma_closed, coeff_numeric, dissipation_kernel,
                       noise_kernel, spectral_density)
from .stochastic import (EnsembleResult, EnsembleSpec, compare_to_master, ensemble_average,
                         sample_realization)

__version__ = "0.1.0"
