import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from iondeco.core import (KB_OVER_HBAR, CoefficientSet, DensityMatrix2, EnvironmentParams,
                          NoiseParams, SystemParams, Trajectory, initial_superposition,
                          kelvin_to_thermal_freq, purity)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_initial_superposition_entries():
    rho = initial_superposition()
    assert rho.to_array().tolist() == [0.5 + 0j] * 4
    assert rho.trace == 1.0
    assert purity(rho) == 1.0


@pytest.mark.parametrize("rho, expected", [
    (DensityMatrix2(1, 0, 0, 0), 1.0),
    (DensityMatrix2(0.5, 0, 0, 0.5), 0.5),
    (initial_superposition(), 1.0),
])
def test_purity_examples(rho, expected):
    assert purity(rho) == pytest.approx(expected, abs=1e-15)


@given(finite, finite, finite, finite)
def test_pure_state_is_normalised(a, b, c, d):
    psi0, psi1 = complex(a, b), complex(c, d)
    if abs(psi0) + abs(psi1) < 1e-6:
        return
    rho = DensityMatrix2.from_pure(psi0, psi1)
    assert rho.hermiticity_defect == 0.0
    assert rho.trace_defect <= 1e-12
    assert abs(rho.purity - 1.0) <= 1e-12


def test_from_pure_rejects_zero():
    with pytest.raises(ValueError):
        DensityMatrix2.from_pure(0, 0)


def test_array_round_trip():
    rho = DensityMatrix2(0.3, 0.1 + 0.2j, 0.1 - 0.2j, 0.7)
    assert DensityMatrix2.from_array(rho.to_array()) == rho
    assert DensityMatrix2.from_array(rho.as_matrix()) == rho


def test_diagnostics_on_non_physical_state():
    rho = DensityMatrix2(0.6, 0.2j, 0.1, 0.6)
    assert rho.trace_defect == pytest.approx(0.2)
    assert rho.hermiticity_defect == pytest.approx(abs(0.1 - (-0.2j)))


def test_thermal_frequency():
    assert kelvin_to_thermal_freq(310.0) == pytest.approx(4.0585e13, rel=1e-4)
    assert kelvin_to_thermal_freq(1 / KB_OVER_HBAR) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        kelvin_to_thermal_freq(0.0)


@given(st.floats(1e-3, 1e6))
def test_thermal_frequency_linear(T):
    assert kelvin_to_thermal_freq(2 * T) == 2 * kelvin_to_thermal_freq(T)


@given(st.floats(-1e9, 1e9), st.floats(0, 1e9))
def test_zeta_is_f_minus_i_gamma(f, g):
    co = CoefficientSet(1.0, f, g)
    assert co.zeta == complex(f, -g)
    assert co.scaled(2.0).zeta == complex(2 * f, -2 * g)


@pytest.mark.parametrize("make", [
    lambda: SystemParams(1.0, -1.0),
    lambda: SystemParams(math.inf, 1.0),
    lambda: EnvironmentParams(0.0, 1, 1, 1),
    lambda: EnvironmentParams(1, -1, 1, 1),
    lambda: EnvironmentParams(1, 1, 0, 1),
    lambda: EnvironmentParams(1, 1, 1, 0),
    lambda: NoiseParams(-1.0),
])
def test_parameter_validation(make):
    with pytest.raises(ValueError):
        make()


def test_trajectory_diagnostics_and_validation():
    e = np.array([[0.5, 0.5, 0.5, 0.5], [0.6, 0.1j, -0.1j, 0.4]], dtype=complex)
    tr = Trajectory([0.0, 1.0], e)
    assert len(tr) == 2
    np.testing.assert_allclose(tr.trace_defect, [0, 0], atol=1e-16)
    np.testing.assert_allclose(tr.herm_defect, [0, 0])
    assert tr.purity[0] == 1.0
    assert tr.state(1) == DensityMatrix2(0.6, 0.1j, -0.1j, 0.4)
    with pytest.raises(ValueError):
        Trajectory([1.0, 1.0], e)
    with pytest.raises(ValueError):
        Trajectory([0.0], e)
