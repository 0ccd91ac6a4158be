import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iondeco.core import NoiseParams, SystemParams, initial_superposition
from iondeco.dynamics import IntegratorSpec, classical_noise_rhs, integrate
from iondeco.stochastic import (EnsembleSpec, compare_to_master, ensemble_average, realization_rng,
                                sample_realization)

SYS = SystemParams(2e6, 1e7)
NOISE = NoiseParams(0.5e7)


def small(n=64, **kw):
    return EnsembleSpec(n, dt=1e-9, t_end=2e-7, store_stride=5, **kw)


def test_single_realization_stays_pure():
    tr = sample_realization(SYS, NOISE, small(), 3)
    assert tr.state(0) == initial_superposition()
    assert np.max(np.abs(tr.purity - 1.0)) < 1e-13
    assert np.max(tr.trace_defect) < 1e-13
    assert np.max(tr.herm_defect) < 1e-15


def test_noiseless_realization_is_unitary_evolution():
    spec = EnsembleSpec(1, dt=1e-9, t_end=2e-7, store_stride=5)
    tr = sample_realization(SYS, NoiseParams(0.0), spec, 0)
    ref = integrate(classical_noise_rhs(SYS, NoiseParams(0.0)), initial_superposition(),
                    IntegratorSpec(2e-7, dt=1e-9, store_stride=5))
    np.testing.assert_allclose(tr.elements, ref.elements, atol=1e-9)


def test_realizations_are_reproducible_and_distinct():
    a = sample_realization(SYS, NOISE, small(), 5).elements
    b = sample_realization(SYS, NOISE, small(), 5).elements
    c = sample_realization(SYS, NOISE, small(), 6).elements
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(IndexError):
        sample_realization(SYS, NOISE, small(), 64)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**40))
@settings(max_examples=20)
def test_streams_depend_on_seed_and_index(seed, index):
    x = realization_rng(seed, index).standard_normal(4)
    assert np.array_equal(x, realization_rng(seed, index).standard_normal(4))
    assert not np.array_equal(x, realization_rng(seed, index + 1).standard_normal(4))


def test_ensemble_mean_is_mean_of_realizations():
    spec = small(8)
    res = ensemble_average(SYS, NOISE, spec)
    manual = np.mean([sample_realization(SYS, NOISE, spec, i).elements for i in range(8)], axis=0)
    np.testing.assert_allclose(res.mean_trajectory.elements, manual, atol=1e-15)
    sd = np.std([sample_realization(SYS, NOISE, spec, i).rho01.real for i in range(8)], axis=0, ddof=1)
    np.testing.assert_allclose(res.stderr_re_rho01, sd / np.sqrt(8), atol=1e-12)


def test_worker_count_does_not_change_bits():
    spec = EnsembleSpec(3000, dt=1e-9, t_end=1e-7, store_stride=4, master_seed=11)
    a = ensemble_average(SYS, NOISE, spec, workers=1)
    b = ensemble_average(SYS, NOISE, spec, workers=3)
    assert np.array_equal(a.mean_trajectory.elements, b.mean_trajectory.elements)
    assert np.array_equal(a.stderr_re_rho01, b.stderr_re_rho01)


def test_seed_changes_result():
    a = ensemble_average(SYS, NOISE, small(16, master_seed=1))
    b = ensemble_average(SYS, NOISE, small(16, master_seed=2))
    assert not np.array_equal(a.mean_trajectory.elements, b.mean_trajectory.elements)


def test_single_member_has_undefined_stderr():
    res = ensemble_average(SYS, NOISE, small(1))
    assert not res.stderr_defined
    assert np.all(np.isnan(res.stderr_re_rho01))


@pytest.mark.parametrize("splitting", ["lie", "strang"])
def test_converges_to_master_equation(splitting):
    spec = EnsembleSpec(2000, dt=1e-10, t_end=2e-7, store_stride=20, splitting=splitting)
    res = ensemble_average(SYS, NOISE, spec)
    ref = integrate(classical_noise_rhs(SYS, NOISE), initial_superposition(),
                    IntegratorSpec(2e-7, dt=1e-10, store_stride=20))
    rep = compare_to_master(res, ref)
    assert rep.sup_re_rho01 < 0.05
    assert rep.fraction_outside <= 0.05


def test_compare_rejects_mismatched_grids():
    res = ensemble_average(SYS, NOISE, small(4))
    ref = integrate(classical_noise_rhs(SYS, NOISE), initial_superposition(),
                    IntegratorSpec(2e-7, dt=1e-9, store_stride=7))
    with pytest.raises(ValueError):
        compare_to_master(res, ref)


@pytest.mark.parametrize("kw", [dict(n_realizations=0), dict(dt=0.0), dict(store_stride=0),
                                dict(master_seed=-1), dict(splitting="yoshida")])
def test_spec_validation(kw):
    base = dict(n_realizations=4, dt=1e-9, t_end=1e-7)
    with pytest.raises(ValueError):
        EnsembleSpec(**{**base, **kw})
