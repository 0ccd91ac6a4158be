"""Monte Carlo ensembles of unitary evolutions under H0 + z(t) sigma_z.

Every realization propagates a pure state, so it stays exactly unitary;
coherence loss only shows up in the ensemble mean. The white noise is a
train of independent Gaussian phase kicks W_k ~ Normal(0, alpha dt), whose
average exp(-2 i W_k) is exp(-2 alpha dt), matching the 2 alpha damping of
the noise master equation.

Random streams: realization ``i`` draws from a Philox generator keyed by
``master_seed * 2**64 + i``. The ensemble mean is accumulated in ascending
realization order, and realizations are propagated in blocks whose size
depends only on the stored grid length, so the worker count never changes
a single bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import NoiseParams, SystemParams, Trajectory
from .dynamics import stored_indices, time_grid

SPLITTINGS = ("lie", "strang")


@dataclass(frozen=True)
class EnsembleSpec:
    n_realizations: int
    dt: float
    t_end: float
    master_seed: int = 0
    store_stride: int = 1
    splitting: str = "lie"

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"unknown splitting {self.splitting!r}")


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    mean_trajectory: Trajectory
    stderr_re_rho01: np.ndarray
    stderr_im_rho01: np.ndarray
    n_realizations: int

    @property
    def times(self) -> np.ndarray:
        return self.mean_trajectory.times

    @property
    def stderr_defined(self) -> bool:
        return self.n_realizations > 1


@dataclass(frozen=True, eq=False)
class DeviationReport:
    """Ensemble mean minus reference, per time and element."""

    times: np.ndarray
    deviation: np.ndarray  # (n, 4) complex
    sup_norm: dict[str, float]
    sup_re_rho01: float
    sup_im_rho01: float
    fraction_outside: float  # share of times with |dev| > 5 stderr in Re or Im rho01


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(master_seed) << 64) | int(index)))


def _h0_propagator(sys: SystemParams, tau: float) -> np.ndarray:
    """exp(-i H0 tau) for H0 = (w0/2) sz - (d0/2) sx, in closed form."""
    a, b = 0.5 * sys.omega0, -0.5 * sys.delta0
    w = math.hypot(a, b)
    c, s = math.cos(w * tau), math.sin(w * tau)
    sinc = s / w if w else tau
    # exp(-i tau (a sz + b sx)) = cos(w tau) I - i sin(w tau)/w (a sz + b sx)
    return np.array([[c - 1j * sinc * a, -1j * sinc * b],
                     [-1j * sinc * b, c + 1j * sinc * a]])


def _block_size(n_stored: int) -> int:
    # bounded memory per block; depends only on the stored grid length
    return int(min(1024, max(16, 2**22 // max(n_stored, 1))))


def _propagate_block(sys: SystemParams, noise: NoiseParams, spec: EnsembleSpec,
                     indices: range) -> np.ndarray:
    """Density-matrix elements ``(len(indices), n_stored, 4)`` for a block."""
    n, h = time_grid(spec.t_end, spec.dt)
    keep = stored_indices(n, spec.store_stride)
    B = len(indices)
    sigma = math.sqrt(noise.alpha * h)
    kicks = np.empty((B, n))
    for row, i in enumerate(indices):
        kicks[row] = realization_rng(spec.master_seed, i).standard_normal(n)
    kicks *= sigma
    if spec.splitting == "strang":
        U = _h0_propagator(sys, 0.5 * h)
    else:
        U = _h0_propagator(sys, h)
    u00, u01, u10, u11 = U[0, 0], U[0, 1], U[1, 0], U[1, 1]

    p0 = np.full(B, 1 / math.sqrt(2), dtype=complex)
    p1 = p0.copy()
    out = np.empty((B, len(keep), 4), dtype=complex)

    def record(j):
        nonlocal p0, p1
        # strips the O(n eps) norm drift of U; the map is linear, so this is
        # the same as normalising every step
        norm = np.sqrt(np.abs(p0) ** 2 + np.abs(p1) ** 2)
        p0, p1 = p0 / norm, p1 / norm
        out[:, j, 0] = (p0 * p0.conj()).real
        out[:, j, 1] = p0 * p1.conj()
        out[:, j, 2] = p1 * p0.conj()
        out[:, j, 3] = (p1 * p1.conj()).real

    record(0)
    out[:, 0] = 0.5  # exact initial matrix; 1/sqrt(2)**2 rounds up
    j = 1
    for k in range(n):
        if spec.splitting == "strang":
            p0, p1 = u00 * p0 + u01 * p1, u10 * p0 + u11 * p1
        phase = np.exp(-1j * kicks[:, k])
        p0 = p0 * phase
        p1 = p1 * phase.conj()
        p0, p1 = u00 * p0 + u01 * p1, u10 * p0 + u11 * p1
        if j < len(keep) and keep[j] == k + 1:
            record(j)
            j += 1
    return out


def sample_realization(sys: SystemParams, noise: NoiseParams, spec: EnsembleSpec,
                       index: int) -> Trajectory:
    """One noise realization, starting from (|0> + |1>)/sqrt(2)."""
    if not 0 <= index < spec.n_realizations:
        raise IndexError(f"realization {index} outside [0, {spec.n_realizations})")
    n, h = time_grid(spec.t_end, spec.dt)
    keep = stored_indices(n, spec.store_stride)
    elements = _propagate_block(sys, noise, spec, range(index, index + 1))[0]
    return Trajectory(keep * h, elements)


def ensemble_average(sys: SystemParams, noise: NoiseParams, spec: EnsembleSpec,
                     workers: int = 1) -> EnsembleResult:
    n, h = time_grid(spec.t_end, spec.dt)
    keep = stored_indices(n, spec.store_stride)
    N = spec.n_realizations
    size = _block_size(len(keep))
    blocks = [range(s, min(s + size, N)) for s in range(0, N, size)]

    total = np.zeros((len(keep), 4), dtype=complex)
    sq_re = np.zeros(len(keep))
    sq_im = np.zeros(len(keep))

    def reduce(block_elements):
        nonlocal total, sq_re, sq_im
        for rho in block_elements:  # ascending realization index
            total += rho
            sq_re += rho[:, 1].real ** 2
            sq_im += rho[:, 1].imag ** 2

    if workers <= 1:
        for b in blocks:
            reduce(_propagate_block(sys, noise, spec, b))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order, so the reduction stays ascending
            for block_elements in pool.map(lambda b: _propagate_block(sys, noise, spec, b), blocks):
                reduce(block_elements)

    mean = total / N
    if N > 1:
        var_re = np.maximum(sq_re - N * mean[:, 1].real ** 2, 0.0) / (N - 1)
        var_im = np.maximum(sq_im - N * mean[:, 1].imag ** 2, 0.0) / (N - 1)
        se_re, se_im = np.sqrt(var_re / N), np.sqrt(var_im / N)
    else:
        se_re = np.full(len(keep), np.nan)
        se_im = np.full(len(keep), np.nan)
    return EnsembleResult(Trajectory(keep * h, mean), se_re, se_im, N)


def compare_to_master(result: EnsembleResult, reference: Trajectory) -> DeviationReport:
    """Deviation of an ensemble mean from a master-equation trajectory."""
    if len(result.times) != len(reference.times) or not np.array_equal(result.times, reference.times):
        raise ValueError("ensemble and reference time grids differ")
    dev = result.mean_trajectory.elements - reference.elements
    sup = {name: float(np.max(np.abs(dev[:, k]))) for k, name in
           enumerate(("rho00", "rho01", "rho10", "rho11"))}
    re, im = np.abs(dev[:, 1].real), np.abs(dev[:, 1].imag)
    if result.stderr_defined:
        outside = (re > 5 * result.stderr_re_rho01) | (im > 5 * result.stderr_im_rho01)
        fraction = float(np.mean(outside))
    else:
        fraction = math.nan
    return DeviationReport(result.times, dev, sup, float(re.max()), float(im.max()), fraction)
