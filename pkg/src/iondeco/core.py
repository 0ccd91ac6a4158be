"""Domain types and two-level density-matrix algebra.

Units: hbar = 1 throughout, so every energy is an angular frequency in s^-1.
Basis: |0> = K+ ions at sites 1 and 3, |1> = K+ ions at sites 2 and 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import constants

#: k_B / hbar in s^-1 K^-1
KB_OVER_HBAR = constants.k / constants.hbar

#: index of each matrix element in the flat ``(rho00, rho01, rho10, rho11)`` layout
ELEMENTS = ("rho00", "rho01", "rho10", "rho11")


@dataclass(frozen=True)
class DensityMatrix2:
    """2x2 density operator stored as four independent complex entries.

    The coherences are not tied together: some of the master equations
    evolve ``rho01`` and ``rho10`` by non-conjugate rules, so Hermiticity is
    something to measure, not something the storage guarantees.
    """

    rho00: complex
    rho01: complex
    rho10: complex
    rho11: complex

    @classmethod
    def from_pure(cls, psi0: complex, psi1: complex) -> "DensityMatrix2":
        norm = math.sqrt(abs(psi0) ** 2 + abs(psi1) ** 2)
        if norm == 0.0:
            raise ValueError("zero state vector")
        a, b = complex(psi0) / norm, complex(psi1) / norm
        off = a * b.conjugate()
        return cls(complex(abs(a) ** 2), off, off.conjugate(), complex(abs(b) ** 2))

    @classmethod
    def from_array(cls, values) -> "DensityMatrix2":
        """Build from a flat length-4 sequence or a 2x2 array."""
        v = np.asarray(values, dtype=complex).reshape(4)
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))

    def to_array(self) -> np.ndarray:
        return np.array([self.rho00, self.rho01, self.rho10, self.rho11], dtype=complex)

    def as_matrix(self) -> np.ndarray:
        return self.to_array().reshape(2, 2)

    @property
    def trace(self) -> complex:
        return self.rho00 + self.rho11

    @property
    def trace_defect(self) -> float:
        return abs(self.rho00 + self.rho11 - 1.0)

    @property
    def hermiticity_defect(self) -> float:
        return abs(self.rho10 - self.rho01.conjugate())

    @property
    def purity(self) -> float:
        return purity(self)


@dataclass(frozen=True)
class SystemParams:
    """Asymmetry energy ``omega0`` and hopping rate ``delta0`` (s^-1)."""

    omega0: float
    delta0: float

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and math.isfinite(self.delta0)):
            raise ValueError("system parameters must be finite")
        if self.delta0 < 0:
            raise ValueError(f"delta0 must be >= 0, got {self.delta0}")


@dataclass(frozen=True)
class EnvironmentParams:
    """Lorentz-Drude Ohmic bath.

    ``mass_scale`` is dimensionless, ``gamma0``, ``omega_c`` and ``kBT`` are
    in s^-1 (``kBT`` is k_B T / hbar).
    """

    mass_scale: float
    gamma0: float
    omega_c: float
    kBT: float

    def __post_init__(self):
        if self.mass_scale <= 0:
            raise ValueError("mass_scale must be > 0")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be >= 0")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be > 0")
        if self.kBT <= 0:
            raise ValueError("kBT must be > 0")


@dataclass(frozen=True)
class CoefficientSet:
    """Master-equation coefficients D, f, gamma and zeta = f - i*gamma.

    ``zeta`` is always derived, never passed in. ``errors`` carries quadrature
    error estimates when the set came out of a numerical evaluation.
    """

    D: float
    f: float
    gamma: float
    zeta: complex = field(init=False)
    errors: Mapping[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "zeta", complex(self.f, -self.gamma))

    def scaled(self, factor: float) -> "CoefficientSet":
        return CoefficientSet(self.D * factor, self.f * factor, self.gamma * factor)


@dataclass(frozen=True)
class NoiseParams:
    """White-noise strength ``alpha`` (s^-1), C(t) = alpha * delta(t)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


def elements_purity(elements: np.ndarray) -> np.ndarray:
    """Vectorised tr(rho^2) for an ``(..., 4)`` array of flat matrices."""
    e = np.asarray(elements)
    return (
        np.abs(e[..., 0]) ** 2
        + np.abs(e[..., 3]) ** 2
        + 2.0 * (e[..., 1] * e[..., 2]).real
    )


def elements_diagnostics(elements: np.ndarray) -> dict[str, np.ndarray]:
    e = np.asarray(elements)
    return {
        "trace_defect": np.abs(e[..., 0] + e[..., 3] - 1.0),
        "herm_defect": np.abs(e[..., 2] - np.conj(e[..., 1])),
        "purity": elements_purity(e),
    }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time grid plus the density matrix at every stored step.

    ``elements`` has shape ``(n, 4)`` in the ``ELEMENTS`` order. Diagnostics
    are computed once at construction.
    """

    times: np.ndarray
    elements: np.ndarray
    trace_defect: np.ndarray = field(init=False, repr=False)
    herm_defect: np.ndarray = field(init=False, repr=False)
    purity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        elements = np.asarray(self.elements, dtype=complex)
        if elements.ndim != 2 or elements.shape[1] != 4:
            raise ValueError("elements must have shape (n, 4)")
        if len(times) != len(elements):
            raise ValueError("times and states differ in length")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "elements", elements)
        for name, values in elements_diagnostics(elements).items():
            object.__setattr__(self, name, values)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> DensityMatrix2:
        return DensityMatrix2.from_array(self.elements[i])

    @property
    def states(self) -> list[DensityMatrix2]:
        return [self.state(i) for i in range(len(self))]

    @property
    def rho00(self) -> np.ndarray:
        return self.elements[:, 0]

    @property
    def rho01(self) -> np.ndarray:
        return self.elements[:, 1]

    @property
    def rho10(self) -> np.ndarray:
        return self.elements[:, 2]

    @property
    def rho11(self) -> np.ndarray:
        return self.elements[:, 3]


def initial_superposition() -> DensityMatrix2:
    """(|0> + |1>)/sqrt(2) as a density matrix: every entry is exactly 1/2."""
    return DensityMatrix2(0.5 + 0j, 0.5 + 0j, 0.5 + 0j, 0.5 + 0j)


def purity(rho: DensityMatrix2) -> float:
    return (
        abs(rho.rho00) ** 2
        + abs(rho.rho11) ** 2
        + 2.0 * (rho.rho01 * rho.rho10).real
    )


def kelvin_to_thermal_freq(T: float) -> float:
    """k_B T / hbar in s^-1 for a temperature in kelvin."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T} K")
    return T * KB_OVER_HBAR
