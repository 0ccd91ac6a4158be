"""Regenerate tests/fixtures/ from the independent oracle.

    python3 tests/make_fixtures.py

The demo configuration: omega0 = 1e7, D = gamma = alpha = 0.5e7, f = 0,
hermitian coherence damping, dt = 1e-10, t_end = 4e-7, every 10th step
stored. Delta R summaries use the trapezoidal mean of |Delta R| over the
stored grid.
"""

from pathlib import Path

import numpy as np

import oracles

RATES = (1e6, 5e6, 1e7, 5e7, 1e8)
OMEGA0, D, GAMMA, ALPHA = 1e7, 0.5e7, 0.5e7, 0.5e7
DT, STEPS, STRIDE = 1e-10, 4000, 10
FIXTURE = Path(__file__).parent / "fixtures" / "fig5_delta_r.csv"


def summarize(rate):
    rho0 = oracles.superposition()
    t, sb = oracles.rk4(oracles.spin_boson_generator(OMEGA0, rate, D, 0.0, GAMMA), rho0, DT, STEPS, STRIDE)
    _, nz = oracles.rk4(oracles.noise_generator(OMEGA0, rate, ALPHA), rho0, DT, STEPS, STRIDE)
    dr = np.abs(sb[:, 0, 1].real - nz[:, 0, 1].real)
    return float(np.trapezoid(dr, t) / (t[-1] - t[0])), float(dr.max())


def main():
    lines = ["rate,time_mean_abs_delta_r,max_abs_delta_r"]
    for rate in RATES:
        mean, peak = summarize(rate)
        lines.append(f"{rate!r},{mean!r},{peak!r}")
    FIXTURE.parent.mkdir(exist_ok=True)
    FIXTURE.write_text("\n".join(lines) + "\n")
    print(FIXTURE.read_text())


if __name__ == "__main__":
    main()
