"""Lorentz-Drude spectral density, bath kernels and master-equation coefficients.

Closed forms (``coeff_gamma_closed``, ``coeff_D_closed``, ``coeff_f_highT``)
are the production path. ``coeff_numeric`` evaluates the defining double
integrals directly and exists to check them, or to stand in where the
high-temperature shortcut for f does not hold.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .core import CoefficientSet, EnvironmentParams

SCHEMES = ("fixed-panel", "adaptive")


class QuadratureError(ArithmeticError):
    """A quadrature's error estimate exceeded its tolerance."""

    def __init__(self, message: str, estimates: dict[str, float]):
        super().__init__(message)
        self.estimates = estimates


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation and resolution of the omega- and tau-integrals.

    ``tail_correction`` adds the analytic integral of the c/omega asymptote
    beyond ``max_frequency`` so the kernels lose the ringing a hard cutoff
    produces. It is off by default, in which case the omega-integrals stop
    at ``max_frequency`` exactly.
    """

    max_frequency: float
    max_lag: float
    panel_count: int = 4096
    scheme: str = "fixed-panel"
    rtol: float = 1e-5
    outer_order: int = 16
    coeff_rtol: float = 1e-2
    tail_correction: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.panel_count < 64:
            raise ValueError("panel_count must be >= 64")
        if not (self.max_frequency > 0 and self.max_lag > 0):
            raise ValueError("max_frequency and max_lag must be positive")
        if self.outer_order < 2 or self.outer_order % 2:
            raise ValueError("outer_order must be an even integer >= 2")

    @classmethod
    def default(cls, env: EnvironmentParams, delta0: float, **kw) -> "QuadratureSpec":
        scale = max(env.omega_c, delta0, env.kBT)
        slow = min(env.omega_c, delta0) if delta0 > 0 else env.omega_c
        return cls(max_frequency=200.0 * scale, max_lag=200.0 / slow, **kw)

    def check(self, env: EnvironmentParams) -> None:
        if self.max_frequency < 10.0 * env.omega_c:
            raise ValueError(
                f"max_frequency {self.max_frequency:g} is below 10 x omega_c "
                f"({10.0 * env.omega_c:g})"
            )


# --- spectral density and thermal factors -----------------------------------


def spectral_density(omega, env: EnvironmentParams):
    """J(w) = (2 M gamma0 / pi) w wc^2 / (wc^2 + w^2). Odd in w."""
    w = np.asarray(omega, dtype=float)
    wc2 = env.omega_c**2
    out = (2.0 * env.mass_scale * env.gamma0 / math.pi) * w * wc2 / (wc2 + w * w)
    return out if out.ndim else float(out)


def coth(x):
    """coth via expm1 so that arguments near 1e-7 keep full precision."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.sign(x) * (1.0 + 2.0 / np.expm1(2.0 * ax))
    return out if out.ndim else float(out)


def _x_coth_x(x):
    # x coth x, equal to 1 at x = 0
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = x[nz] * coth(x[nz])
    return out


def _noise_weight(omega, env: EnvironmentParams):
    """J(w) coth(w / 2kBT), finite at w = 0."""
    w = np.asarray(omega, dtype=float)
    wc2 = env.omega_c**2
    pref = 2.0 * env.mass_scale * env.gamma0 / math.pi
    return pref * wc2 / (wc2 + w * w) * 2.0 * env.kBT * _x_coth_x(w / (2.0 * env.kBT))


# --- Filon panels over omega ------------------------------------------------


def _p(x):
    # (sin x - x cos x) / x^2, series below 1e-3 to dodge cancellation
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = xs / 3.0 - xs**3 / 30.0
    xl = x[~small]
    out[~small] = (np.sin(xl) - xl * np.cos(xl)) / (xl * xl)
    return out


def _omega_edges(env: EnvironmentParams, max_frequency: float, panel_count: int):
    lo = 1e-3 * min(env.omega_c, env.kBT)
    lo = min(lo, max_frequency / panel_count)
    return np.concatenate([[0.0], np.geomspace(lo, max_frequency, panel_count)])


def _filon(weight, edges, tau, kind, chunk=256):
    """Integral of weight(w) * cos|sin(w tau) over the panels, weight linear per panel."""
    g = weight(edges)
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    g_mean = 0.5 * (g[:-1] + g[1:])
    g_slope = (g[1:] - g[:-1]) / (b - a)
    out = np.empty(len(tau))
    for start in range(0, len(tau), chunk):
        t = tau[start:start + chunk, None]
        x = half * t
        sinc = np.sinc(x / math.pi)
        p = _p(x)
        if kind == "cos":
            terms = g_mean * 2 * half * np.cos(mid * t) * sinc - 2 * half**2 * g_slope * np.sin(mid * t) * p
        else:
            terms = g_mean * 2 * half * np.sin(mid * t) * sinc + 2 * half**2 * g_slope * np.cos(mid * t) * p
        out[start:start + chunk] = terms.sum(axis=1)
    return out


def _tail(weight, max_frequency, tau, kind):
    # integral over [W, inf) of c/w cos|sin(w tau), c matched to weight at W
    c = max_frequency * float(weight(np.array([max_frequency]))[0])
    out = np.zeros_like(tau)
    pos = tau > 0
    si, ci = special.sici(max_frequency * tau[pos])
    if kind == "cos":
        out[pos] = -c * ci
        out[~pos] = np.inf
    else:
        out[pos] = c * (0.5 * math.pi - si)
    return out


def _kernel(weight, env, tau, quad: QuadratureSpec, kind, name):
    """Return (values, error estimates) of a cos/sin transform of ``weight``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError(f"{name}: tau must be >= 0")
    quad.check(env)
    edges = _omega_edges(env, quad.max_frequency, quad.panel_count)
    # |kernel| <= integral of |weight|, used as the error scale
    g = np.abs(weight(edges))
    scale = float(np.sum(0.5 * (g[:-1] + g[1:]) * np.diff(edges)))

    if quad.scheme == "fixed-panel":
        values = _filon(weight, edges, tau, kind)
        coarse = _filon(weight, edges[::2] if len(edges) % 2 else np.append(edges[:-1:2], edges[-1]), tau, kind)
        errors = np.abs(values - coarse) / 3.0
    else:
        values = np.empty_like(tau)
        errors = np.empty_like(tau)
        fn = lambda w: float(weight(np.array([w]))[0])
        for i, t in enumerate(tau):
            if t == 0.0:
                if kind == "sin":
                    values[i], errors[i] = 0.0, 0.0
                    continue
                pts = [p for p in (env.omega_c, env.kBT) if p < quad.max_frequency]
                v, e = integrate.quad(fn, 0.0, quad.max_frequency, limit=2000, points=pts)
            else:
                v, e = integrate.quad(fn, 0.0, quad.max_frequency, weight=kind,
                                      wvar=t, limit=2000)
            values[i], errors[i] = v, e

    bad = errors > quad.rtol * scale
    if np.any(bad):
        worst = int(np.argmax(errors))
        raise QuadratureError(
            f"{name} did not converge at tau={tau[worst]:g}: error estimate "
            f"{errors[worst]:.3g} exceeds {quad.rtol:g} x {scale:.3g}",
            {name: float(errors[worst])},
        )
    if quad.tail_correction:
        values = values + _tail(weight, quad.max_frequency, tau, kind)
    return values, errors


def noise_kernel(tau, env: EnvironmentParams, quad: QuadratureSpec):
    """nu(tau) = int_0^W dw J(w) coth(w / 2kBT) cos(w tau)."""
    values, _ = _kernel(lambda w: _noise_weight(w, env), env, tau, quad, "cos", "noise_kernel")
    return values if np.ndim(tau) else float(values[0])


def dissipation_kernel(tau, env: EnvironmentParams, quad: QuadratureSpec):
    """eta(tau) = int_0^W dw J(w) sin(w tau)."""
    values, _ = _kernel(lambda w: spectral_density(w, env), env, tau, quad, "sin", "dissipation_kernel")
    return values if np.ndim(tau) else float(values[0])


# --- closed forms -----------------------------------------------------------


def coeff_gamma_closed(env: EnvironmentParams, delta0: float) -> float:
    """gamma = (pi/2) J(delta0), using that J is odd."""
    if delta0 < 0:
        raise ValueError("delta0 must be >= 0")
    wc2 = env.omega_c**2
    return env.mass_scale * env.gamma0 * delta0 * wc2 / (wc2 + delta0**2)


def coeff_D_closed(env: EnvironmentParams, delta0: float) -> float:
    """D = gamma * coth(delta0 / 2kBT).

    Diverges at delta0 = 0; for delta0 << omega_c the limit is
    2 M gamma0 kBT, which the caller has to ask for explicitly.
    """
    if not delta0 > 0:
        raise ValueError("coeff_D_closed needs delta0 > 0 (coth is singular at 0)")
    return coeff_gamma_closed(env, delta0) * coth(delta0 / (2.0 * env.kBT))


def coeff_f_highT(env: EnvironmentParams, delta0: float) -> float:
    """f in the high-temperature limit, coth(x/2) ~ 2/x."""
    if delta0 < 0:
        raise ValueError("delta0 must be >= 0")
    if delta0 / env.kBT > 0.1 or env.omega_c / env.kBT > 0.1:
        warnings.warn(
            "coeff_f_highT outside its regime: delta0/kBT = "
            f"{delta0 / env.kBT:.3g}, omega_c/kBT = {env.omega_c / env.kBT:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    wc = env.omega_c
    return 2.0 * env.mass_scale * env.gamma0 * env.kBT * wc * delta0 / (delta0**2 + wc**2)


def closed_coefficients(env: EnvironmentParams, delta0: float) -> CoefficientSet:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        f = coeff_f_highT(env, delta0)
    return CoefficientSet(D=coeff_D_closed(env, delta0), f=f, gamma=coeff_gamma_closed(env, delta0))


# --- nested quadrature ------------------------------------------------------


def _lag_nodes(delta0: float, quad: QuadratureSpec, order: int):
    """Gauss-Legendre nodes on [0, max_lag].

    Panels follow half-periods of the sin/cos(delta0 tau) factor, with a
    geometric refinement towards tau = 0 where the kernels vary on 1/W.
    """
    half_period = math.pi / delta0
    t_min = 1e-3 / quad.max_frequency
    first = min(half_period, quad.max_lag)
    n_geo = max(1, math.ceil(math.log2(first / t_min)))
    edges = [0.0, *np.geomspace(t_min, first, n_geo + 1)]
    k = 2
    while edges[-1] < quad.max_lag:
        edges.append(min(k * half_period, quad.max_lag))
        k += 1
    edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def coeff_numeric(env: EnvironmentParams, delta0: float, quad: QuadratureSpec | None = None) -> CoefficientSet:
    """D, f, gamma from the tau-integrals of the bath kernels.

    D = int nu cos(delta0 tau), f = int nu sin(delta0 tau),
    gamma = int eta sin(delta0 tau), all truncated at ``quad.max_lag``.
    The returned set carries per-coefficient error estimates in ``errors``:
    the gap between ``outer_order`` and half that order, plus the inner
    kernel errors weighted through the outer rule.
    """
    if not delta0 > 0:
        raise ValueError("coeff_numeric needs delta0 > 0")
    quad = quad or QuadratureSpec.default(env, delta0)
    results = {}
    errors = {}
    for order in (quad.outer_order, quad.outer_order // 2):
        tau, w = _lag_nodes(delta0, quad, order)
        nu, nu_err = _kernel(lambda x: _noise_weight(x, env), env, tau, quad, "cos", "noise_kernel")
        eta, eta_err = _kernel(lambda x: spectral_density(x, env), env, tau, quad, "sin", "dissipation_kernel")
        c, s = np.cos(delta0 * tau), np.sin(delta0 * tau)
        vals = {
            "D": float(np.sum(w * nu * c)),
            "f": float(np.sum(w * nu * s)),
            "gamma": float(np.sum(w * eta * s)),
        }
        if order == quad.outer_order:
            results = vals
            inner = {
                "D": float(np.sum(np.abs(w * c) * nu_err)),
                "f": float(np.sum(np.abs(w * s) * nu_err)),
                "gamma": float(np.sum(np.abs(w * s) * eta_err)),
            }
        else:
            for key in results:
                errors[key] = abs(results[key] - vals[key]) + inner[key]

    failed = {k: e for k, e in errors.items() if e > quad.coeff_rtol * abs(results[k])}
    if failed:
        detail = ", ".join(f"{k}: {results[k]:.6g} +/- {e:.3g}" for k, e in failed.items())
        raise QuadratureError(f"coefficient quadrature did not converge ({detail})", failed)
    return CoefficientSet(D=results["D"], f=results["f"], gamma=results["gamma"], errors=errors)
