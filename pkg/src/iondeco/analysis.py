"""Model comparison (Delta R), hopping-rate sweeps and decoherence-time estimates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .core import (CoefficientSet, EnvironmentParams, NoiseParams, SystemParams,
                   Trajectory, initial_superposition, kelvin_to_thermal_freq)
from .dynamics import IntegratorSpec, SpinBosonMode, classical_noise_rhs, integrate, spin_boson_rhs
from .spectral import closed_coefficients

#: benchmark window for Delta R summaries, s
DEFAULT_WINDOW = (0.0, 4e-7)
DEFAULT_RATES = (1e6, 5e6, 1e7, 5e7, 1e8)
POTASSIUM_MASS = 6.49e-26  # kg


@dataclass(frozen=True, eq=False)
class DeltaRSeries:
    times: np.ndarray
    values: np.ndarray
    window: tuple[float, float]
    max_abs: float
    time_mean_abs: float


def _summarize(times, values, window):
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    t, v = times[mask], np.abs(values[mask])
    if len(t) == 0:
        raise ValueError(f"window {window} contains no samples")
    if len(t) == 1:
        return float(v[0]), float(v[0])
    return float(v.max()), float(np.trapezoid(v, t) / (t[-1] - t[0]))


def delta_r(traj_sb: Trajectory, traj_noise: Trajectory,
            window: tuple[float, float] | None = None) -> DeltaRSeries:
    """Re rho01 (Spin-Boson) minus Re rho01 (noise) on a shared grid.

    ``time_mean_abs`` is the trapezoidal time average of |Delta R| over the
    window (the full grid when no window is given).
    """
    if len(traj_sb) != len(traj_noise) or not np.array_equal(traj_sb.times, traj_noise.times):
        raise ValueError("trajectories are on different time grids")
    values = traj_sb.rho01.real - traj_noise.rho01.real
    times = traj_sb.times
    window = window or (float(times[0]), float(times[-1]))
    max_abs, mean_abs = _summarize(times, values, window)
    return DeltaRSeries(times, values, tuple(window), max_abs, mean_abs)


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep point shares except the hopping rate.

    Either ``coefficients`` are held fixed across rates, or ``environment``
    is given and the closed forms are re-evaluated at each rate
    (``derive_coeffs``).
    """

    omega0: float
    noise: NoiseParams
    integrator: IntegratorSpec
    coefficients: CoefficientSet | None = None
    environment: EnvironmentParams | None = None
    derive_coeffs: bool = False
    mode: SpinBosonMode = SpinBosonMode.HERMITIAN
    window: tuple[float, float] = DEFAULT_WINDOW

    def coefficients_for(self, delta0: float) -> CoefficientSet:
        if self.derive_coeffs:
            if self.environment is None:
                raise ValueError("derive_coeffs needs an environment")
            return closed_coefficients(self.environment, delta0)
        if self.coefficients is None:
            raise ValueError("sweep needs explicit coefficients or derive_coeffs")
        return self.coefficients


@dataclass(frozen=True, eq=False)
class ComparisonRun:
    rate: float
    spin_boson: Trajectory
    noise: Trajectory
    delta_r: DeltaRSeries

    @property
    def max_abs(self) -> float:
        return self.delta_r.max_abs

    @property
    def time_mean_abs(self) -> float:
        return self.delta_r.time_mean_abs


def compare_models(sys: SystemParams, co: CoefficientSet, noise: NoiseParams,
                   integrator: IntegratorSpec, mode=SpinBosonMode.HERMITIAN,
                   window=DEFAULT_WINDOW) -> ComparisonRun:
    rho0 = initial_superposition()
    sb = integrate(spin_boson_rhs(sys, co, mode), rho0, integrator)
    nz = integrate(classical_noise_rhs(sys, noise), rho0, integrator)
    return ComparisonRun(sys.delta0, sb, nz, delta_r(sb, nz, window))


def sweep_hopping(rates, config: SweepConfig, workers: int = 1) -> list[ComparisonRun]:
    """Run both models at each hopping rate; rows come back in input order."""
    rates = [float(r) for r in rates]
    if not rates:
        raise ValueError("no hopping rates given")
    if any(not r > 0 for r in rates):
        raise ValueError("hopping rates must be positive")

    def point(rate):
        sys = SystemParams(config.omega0, rate)
        return compare_models(sys, config.coefficients_for(rate), config.noise,
                              config.integrator, config.mode, config.window)

    if workers <= 1:
        return [point(r) for r in rates]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, rates))


# --- decoherence-time estimate ----------------------------------------------


def thermal_de_broglie(m: float, kBT_joule: float) -> float:
    """hbar / sqrt(2 m k_B T), in metres."""
    if not (m > 0 and kBT_joule > 0):
        raise ValueError("mass and thermal energy must be positive")
    return constants.hbar / math.sqrt(2.0 * m * kBT_joule)


def mean_occupation(x: float) -> float:
    """Bose factor 1 / (e^x - 1) for x = omega / kBT."""
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class DecoherenceEstimate:
    mass: float
    kBT: float
    delta_x: float
    cutoff: float
    omega: float
    gamma0: float
    lambda_dB: float
    r: float
    n_bar: float
    gamma_rate: float
    tau_D: float


def decoherence_time(mass: float, kBT: float, delta_x: float, cutoff: float,
                     omega: float, gamma0: float) -> DecoherenceEstimate:
    """tau_D = dX^2 / (gamma lambda_dB^2) with gamma = gamma0 w n r^2/(1+r^2).

    ``kBT`` is a frequency (k_B T / hbar); the de Broglie wavelength uses
    hbar * kBT as the thermal energy.
    """
    for name, v in (("mass", mass), ("kBT", kBT), ("delta_x", delta_x),
                    ("cutoff", cutoff), ("omega", omega), ("gamma0", gamma0)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    lam = thermal_de_broglie(mass, constants.hbar * kBT)
    r = cutoff / omega
    n_bar = mean_occupation(omega / kBT)
    gamma_rate = gamma0 * omega * n_bar * r * r / (1.0 + r * r)
    tau = (delta_x / lam) ** 2 / gamma_rate
    return DecoherenceEstimate(mass, kBT, delta_x, cutoff, omega, gamma0,
                               lam, r, n_bar, gamma_rate, tau)


@dataclass(frozen=True)
class TauConfig:
    """Inputs of the (diffusion rate, frequency) grid.

    ``rates`` are target diffusion rates, i.e. the gamma of tau_D. At each
    frequency the coupling gamma0 that yields that rate is backed out, so
    every row is a full ``DecoherenceEstimate``. ``delta_x`` defaults to
    the thermal de Broglie wavelength.
    """

    mass: float
    temperature: float  # K
    cutoff: float = 1e13
    delta_x: float | None = None
    rates: tuple[float, ...] = (1e6, 1e7, 1e8)
    frequencies: tuple[float, ...] = (1e8, 1e9, 1e10, 1e11, 1e12)


    def __post_init__(self):
        if not (self.mass > 0 and self.temperature > 0):
            raise ValueError("mass and temperature must be positive")
        if not (self.rates and self.frequencies):
            raise ValueError("need at least one rate and one frequency")

    def row_rates(self) -> list[float]:
        """The target rate of each ``tau_grid`` row."""
        return [r for r in self.rates for _ in self.frequencies]


def tau_grid(cfg: TauConfig) -> list[DecoherenceEstimate]:
    kBT = kelvin_to_thermal_freq(cfg.temperature)
    lam = thermal_de_broglie(cfg.mass, constants.hbar * kBT)
    delta_x = cfg.delta_x if cfg.delta_x is not None else lam
    rows = []
    for rate in cfg.rates:
        for omega in cfg.frequencies:
            r = cfg.cutoff / omega
            per_coupling = omega * mean_occupation(omega / kBT) * r * r / (1.0 + r * r)
            rows.append(decoherence_time(cfg.mass, kBT, delta_x, cfg.cutoff, omega,
                                         rate / per_coupling))
    return rows


def within_factor(value: float, target: float, factor: float, rtol: float = 1e-9) -> bool:
    """target/factor <= value <= target*factor, with ``rtol`` slack at both edges
    so that values sitting on a boundary up to rounding count as inside."""
    lo, hi = target / factor, target * factor
    return lo * (1 - rtol) <= value <= hi * (1 + rtol)
