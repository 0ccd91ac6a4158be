"""Matplotlib figures for the report path. Imported lazily by the CLI."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import ComparisonRun, DecoherenceEstimate  # noqa: E402
from .core import Trajectory  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trajectory_figure(traj: Trajectory, title: str = "", *, path) -> None:
    fig, (a, b) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    t = traj.times * 1e6
    a.plot(t, traj.rho01.real, label="Re rho01")
    a.plot(t, traj.rho01.imag, label="Im rho01")
    a.plot(t, traj.rho00.real, label="rho00")
    a.legend()
    a.set_title(title)
    b.semilogy(t, traj.purity, label="purity")
    b.set_xlabel("t (us)")
    b.legend()
    _save(fig, path)


def compare_figure(run: ComparisonRun, title: str = "", *, path) -> None:
    fig, (a, b, c) = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    t = run.spin_boson.times * 1e6
    a.plot(t, run.spin_boson.rho01.real, label="Spin-Boson")
    a.plot(t, run.noise.rho01.real, "--", label="classical noise")
    a.set_ylabel("Re rho01")
    a.legend()
    a.set_title(title or f"hopping rate {run.rate:.3g} 1/s")
    b.plot(t, run.spin_boson.rho01.imag)
    b.plot(t, run.noise.rho01.imag, "--")
    b.set_ylabel("Im rho01")
    c.plot(t, run.delta_r.values, color="k")
    c.set_ylabel("Delta R")
    c.set_xlabel("t (us)")
    _save(fig, path)


def sweep_figure(runs: Sequence[ComparisonRun], *, path) -> None:
    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4.5))
    for r in runs:
        a.plot(r.delta_r.times * 1e6, r.delta_r.values, label=f"{r.rate:.0e}")
    a.set_xlabel("t (us)")
    a.set_ylabel("Delta R")
    a.legend(title="rate (1/s)")
    rates = [r.rate for r in runs]
    b.loglog(rates, [r.time_mean_abs for r in runs], "o-", label="time-mean |Delta R|")
    b.loglog(rates, [r.max_abs for r in runs], "s--", label="max |Delta R|")
    b.set_xlabel("hopping rate (1/s)")
    b.legend()
    _save(fig, path)


def tau_figure(estimates: Sequence[DecoherenceEstimate], rates: Sequence[float], *, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rate in sorted(set(rates)):
        pts = sorted((e.omega, e.tau_D) for r, e in zip(rates, estimates) if r == rate)
        ax.loglog(*zip(*pts), "o-", label=f"rate {rate:.0e} 1/s")
    ax.axhline(1e-7, color="grey", ls=":")
    ax.set_xlabel("frequency (1/s)")
    ax.set_ylabel("tau_D (s)")
    ax.legend()
    _save(fig, path)
