"""Master-equation right-hand sides and a deterministic integrator.

Both models are written element by element in the sigma_z eigenbasis.
They are linear over the reals (the hermitian Spin-Boson reading slaves
rho10 to the conjugate of rho01, which is not complex-linear), so
``LinearRHS`` probes them once into an 8x8 real generator and the
integrator steps that matrix.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CoefficientSet, DensityMatrix2, NoiseParams, SystemParams, Trajectory

RHS = Callable[[DensityMatrix2], DensityMatrix2]


class SpinBosonMode(str, enum.Enum):
    VERBATIM = "verbatim"
    HERMITIAN = "hermitian"


class IntegrationError(ArithmeticError):
    """Integration aborted; ``last_time`` is the last time with a finite state."""

    def __init__(self, message: str, last_time: float, partial: Trajectory | None = None):
        super().__init__(message)
        self.last_time = last_time
        self.partial = partial


METHODS = ("rk4", "dp45")


@dataclass(frozen=True)
class IntegratorSpec:
    """``rk4``: fixed step ``dt``. ``dp45``: Dormand-Prince with ``rtol``/``atol``.

    ``renormalize`` divides the state by its trace after every step; neither
    Spin-Boson reading conserves trace, so it is off unless asked for.
    """

    t_end: float
    dt: float = 1e-10
    method: str = "rk4"
    store_stride: int = 1
    rtol: float = 1e-8
    atol: float = 1e-12
    renormalize: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if self.store_stride < 1:
            raise ValueError("store_stride must be >= 1")

    def check_resolution(self, rate: float) -> None:
        """Fixed steps must resolve the fastest rate: dt <= 0.05 / max(rate, 1)."""
        if self.method == "rk4" and self.dt > 0.05 / max(rate, 1.0):
            raise ValueError(
                f"dt={self.dt:g} does not resolve rate {rate:g} s^-1 "
                f"(need dt <= {0.05 / max(rate, 1.0):g})"
            )


def fastest_rate(sys: SystemParams, co: CoefficientSet | None = None,
                 noise: NoiseParams | None = None) -> float:
    rates = [abs(sys.omega0), sys.delta0, 1.0]
    if co is not None:
        rates.append(4 * abs(co.D))
    if noise is not None:
        rates.append(2 * noise.alpha)
    return max(rates)


# --- right-hand sides -------------------------------------------------------


def rhs_spin_boson(rho: DensityMatrix2, sys: SystemParams, co: CoefficientSet,
                   mode: SpinBosonMode = SpinBosonMode.HERMITIAN) -> DensityMatrix2:
    """Born-Markov Spin-Boson equation in the sigma_z basis.

    ``verbatim`` is the literal four-row system, in which rho01 carries
    ``-(i w0 - 4D)`` (it grows) while rho10 carries ``+(i w0 - 4D)``.
    ``hermitian`` damps rho01 at 4D and sets d rho10 = conj(d rho01).
    """
    d0, w0, D, f, g = sys.delta0, sys.omega0, co.D, co.f, co.gamma
    zeta_c = co.zeta.conjugate()
    r00, r01, r10, r11 = rho.rho00, rho.rho01, rho.rho10, rho.rho11
    h = 0.5j * d0

    d00 = h * (r10 - r01) + 2 * g * r01
    d11 = h * (r01 - r10) + 2 * g * r10
    if SpinBosonMode(mode) is SpinBosonMode.VERBATIM:
        d01 = h * (r11 - r00) + 2j * zeta_c * r11 - 2j * f * r00 - (1j * w0 - 4 * D) * r01
        d10 = h * (r00 - r11) + 2j * zeta_c * r00 - 2j * f * r11 + (1j * w0 - 4 * D) * r10
    else:
        d01 = h * (r11 - r00) + 2j * zeta_c * r11 - 2j * f * r00 - (1j * w0 + 4 * D) * r01
        d10 = d01.conjugate()
    return DensityMatrix2(d00, d01, d10, d11)


def rhs_classical_noise(rho: DensityMatrix2, sys: SystemParams, noise: NoiseParams) -> DensityMatrix2:
    """Gaussian white-noise master equation, dephasing at 2 alpha."""
    d0, w0, a = sys.delta0, sys.omega0, noise.alpha
    r00, r01, r10, r11 = rho.rho00, rho.rho01, rho.rho10, rho.rho11
    h = 0.5j * d0
    return DensityMatrix2(
        h * (r10 - r01),
        h * (r11 - r00) - 1j * w0 * r01 - 2 * a * r01,
        h * (r00 - r11) + 1j * w0 * r10 - 2 * a * r10,
        h * (r01 - r10),
    )


# --- real coordinates -------------------------------------------------------
# u = (Re tr, Im tr, Re r01, Im r01, Re r10, Im r10, Re(r00-r11), Im(r00-r11)).
# In these coordinates a trace-preserving generator has an exactly zero
# first row, so the trace is conserved bit for bit by the stepper.


def _to_u(elements: np.ndarray) -> np.ndarray:
    e = np.asarray(elements, dtype=complex)
    tr = e[..., 0] + e[..., 3]
    dif = e[..., 0] - e[..., 3]
    return np.stack([tr.real, tr.imag, e[..., 1].real, e[..., 1].imag,
                     e[..., 2].real, e[..., 2].imag, dif.real, dif.imag], axis=-1)


def _from_u(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    tr = u[..., 0] + 1j * u[..., 1]
    dif = u[..., 6] + 1j * u[..., 7]
    return np.stack([0.5 * (tr + dif), u[..., 2] + 1j * u[..., 3],
                     u[..., 4] + 1j * u[..., 5], 0.5 * (tr - dif)], axis=-1)


class LinearRHS:
    """A real-linear right-hand side, callable on ``DensityMatrix2``.

    ``matrix`` is the 8x8 generator in the real coordinates above.
    ``conjugate_slaved`` tells the integrator that rho10 must equal
    conj(rho01) exactly; it re-imposes that after each step.
    """

    def __init__(self, fn: RHS, *, rate: float = 1.0, conjugate_slaved: bool = False,
                 label: str = ""):
        self.fn = fn
        self.rate = rate
        self.conjugate_slaved = conjugate_slaved
        self.label = label
        columns = []
        for k in range(8):
            e = np.zeros(8)
            e[k] = 1.0
            d = fn(DensityMatrix2.from_array(_from_u(e)))
            columns.append(_to_u(d.to_array()))
        self.matrix = np.column_stack(columns)

    def __call__(self, rho: DensityMatrix2) -> DensityMatrix2:
        return self.fn(rho)

    def __repr__(self):
        return f"LinearRHS({self.label or self.fn!r})"


def spin_boson_rhs(sys: SystemParams, co: CoefficientSet,
                   mode: SpinBosonMode = SpinBosonMode.HERMITIAN) -> LinearRHS:
    mode = SpinBosonMode(mode)
    return LinearRHS(
        lambda rho: rhs_spin_boson(rho, sys, co, mode),
        rate=fastest_rate(sys, co),
        conjugate_slaved=mode is SpinBosonMode.HERMITIAN,
        label=f"spin-boson/{mode.value}",
    )


def classical_noise_rhs(sys: SystemParams, noise: NoiseParams) -> LinearRHS:
    return LinearRHS(
        lambda rho: rhs_classical_noise(rho, sys, noise),
        rate=fastest_rate(sys, noise=noise),
        label="noise",
    )


# --- integration ------------------------------------------------------------


def time_grid(t_end: float, dt: float) -> tuple[int, float]:
    """Number of fixed steps and the step actually used (t_end / n <= dt)."""
    if t_end == 0:
        return 0, dt
    n = max(1, math.ceil(t_end / dt * (1 - 1e-12)))
    return n, t_end / n


def stored_indices(n_steps: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _slave(u: np.ndarray) -> np.ndarray:
    u[4] = u[2]
    u[5] = -u[3]
    return u


def _renormalize(u: np.ndarray) -> np.ndarray:
    e = _from_u(u)
    tr = e[0] + e[3]
    if tr != 0:
        u = _to_u(e / tr)
    return u


def _vector_rhs(rhs) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(rhs, LinearRHS):
        A = rhs.matrix
        return lambda u: A @ u

    def F(u):
        try:
            return _to_u(rhs(DensityMatrix2.from_array(_from_u(u))).to_array())
        except (OverflowError, FloatingPointError, ZeroDivisionError):
            # reported by the steppers' non-finite check
            return np.full(8, np.nan)

    return F


def _trajectory(times, rows, rho0: DensityMatrix2) -> Trajectory:
    elements = _from_u(np.asarray(rows))
    # first row is the caller's state verbatim, not a round trip through u
    elements[0] = rho0.to_array()
    return Trajectory(np.asarray(times), elements)


def integrate(rhs: RHS, rho0: DensityMatrix2, spec: IntegratorSpec) -> Trajectory:
    """Integrate ``d rho/dt = rhs(rho)`` from t = 0 to ``spec.t_end``.

    Fixed-step RK4 on a ``LinearRHS`` applies the RK4 stability polynomial
    of the generator as a single propagator matrix, which is the same map
    as four stage evaluations. States are stored every ``store_stride``
    steps, plus t = 0 and t_end.
    """
    u0 = _to_u(rho0.to_array())
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial state is not finite")
    slaved = getattr(rhs, "conjugate_slaved", False)
    if isinstance(rhs, LinearRHS):
        spec.check_resolution(rhs.rate)

    def post(u):
        if slaved:
            u = _slave(u)
        if spec.renormalize:
            u = _renormalize(u)
        return u

    # overflow turns into inf/nan, which the steppers report as IntegrationError
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.method == "rk4":
            return _integrate_rk4(rhs, rho0, u0, spec, post)
        return _integrate_dp45(rhs, rho0, u0, spec, post)


def _integrate_rk4(rhs, rho0, u0, spec, post):
    n, h = time_grid(spec.t_end, spec.dt)
    keep = stored_indices(n, spec.store_stride)
    rows = np.empty((len(keep), 8))
    rows[0] = u0
    times = keep * h

    if isinstance(rhs, LinearRHS):
        hA = h * rhs.matrix
        P = np.eye(8)
        term = np.eye(8)
        for k in range(1, 5):
            term = term @ hA / k
            P = P + term
        step = lambda u: P @ u
    else:
        F = _vector_rhs(rhs)

        def step(u):
            k1 = F(u)
            k2 = F(u + 0.5 * h * k1)
            k3 = F(u + 0.5 * h * k2)
            k4 = F(u + h * k3)
            return u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    u = u0.copy()
    j = 1
    check_every = 1024
    for k in range(1, n + 1):
        u = post(step(u))
        if k % check_every == 0 or k == n or (j < len(keep) and keep[j] == k):
            if not np.all(np.isfinite(u)):
                partial = _trajectory(times[:j], rows[:j], rho0) if j else None
                raise IntegrationError(
                    f"state became non-finite before t={k * h:g}",
                    last_time=float(times[j - 1]), partial=partial)
            if j < len(keep) and keep[j] == k:
                rows[j] = u
                j += 1
    return _trajectory(times, rows, rho0)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _integrate_dp45(rhs, rho0, u0, spec, post):
    """Adaptive embedded 4(5) pair with max-norm control.

    A step is accepted when max|err| <= rtol * max|u| + atol.
    """
    F = _vector_rhs(rhs)
    t, u = 0.0, u0.copy()
    times, rows = [0.0], [u0]
    if spec.t_end == 0:
        return _trajectory(times, rows, rho0)
    h = min(spec.dt, spec.t_end)
    h_min = spec.t_end * 1e-14
    accepted = 0
    k1 = F(u)
    while t < spec.t_end:
        h = min(h, spec.t_end - t)
        ks = [k1]
        for i in range(1, 7):
            ui = u + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(F(ui))
        K = np.array(ks)
        u5 = u + h * (_DP_B5 @ K)
        err = h * ((_DP_B5 - _DP_B4) @ K)
        tol = spec.rtol * max(np.max(np.abs(u)), np.max(np.abs(u5))) + spec.atol
        err_norm = np.max(np.abs(err)) / tol if tol > 0 else np.inf
        if not np.isfinite(err_norm):
            raise IntegrationError(f"non-finite state near t={t:g}", last_time=t,
                                   partial=_trajectory(times, rows, rho0))
        if err_norm <= 1.0:
            t = spec.t_end if spec.t_end - (t + h) <= h_min else t + h
            u = post(u5)
            k1 = F(u) if (spec.renormalize or getattr(rhs, "conjugate_slaved", False)) else K[6]
            accepted += 1
            if accepted % spec.store_stride == 0 or t == spec.t_end:
                times.append(t)
                rows.append(u.copy())
        factor = 0.9 * err_norm ** (-0.2) if err_norm > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < h_min and t < spec.t_end:
            raise IntegrationError(f"step size underflow at t={t:g}", last_time=t,
                                   partial=_trajectory(times, rows, rho0))
    return _trajectory(times, rows, rho0)
