import csv
import subprocess
import sys
import xml.dom.minidom

import numpy as np
import pytest

from iondeco import csvio
from iondeco.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main, preset_text
from iondeco.config import loads

ENV_CFG = """\
system.omega0 = 0.0
system.delta0 = 1.0
environment.M = 1.0
environment.gamma0 = 1.0
environment.omega_c = 1.0
environment.kBT = 10.0
"""

NOISE_CFG = """\
model = noise
system.omega0 = 10.0
system.delta0 = 0.0
noise.alpha = 1.0
integrator.dt = 5e-06
integrator.t_end = 0.5
integrator.store_stride = 1000
"""

DEMO = """\
model = both
mode = hermitian
system.omega0 = 10000000.0
system.delta0 = 10000000.0
coefficients.D = 5000000.0
coefficients.f = 0.0
coefficients.gamma = 5000000.0
noise.alpha = 5000000.0
integrator.dt = 1e-10
integrator.t_end = 1e-07
integrator.store_stride = 10
sweep.window = 0.0, 1e-07
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


def run(*argv):
    return main([str(a) for a in argv])


def test_coeffs_closed_form(write, capsys):
    assert run("coeffs", "--config", write(ENV_CFG)) == EXIT_OK
    rows = dict(line.split(",") for line in capsys.readouterr().out.splitlines()[1:])
    assert float(rows["gamma"]) == 0.5
    assert float(rows["f"]) == 10.0


def test_coeffs_numeric_within_one_percent(write, tmp_path):
    out = tmp_path / "c.csv"
    assert run("coeffs", "--config", write(ENV_CFG), "--numeric", "--out", out) == EXIT_OK
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["quantity"] for r in rows] == ["D", "f", "gamma", "re_zeta", "im_zeta"]
    for r in rows:
        assert float(r["rel_diff"]) <= 1e-2, r["quantity"]


def test_coeffs_needs_environment(write):
    assert run("coeffs", "--config", write("system.omega0 = 0.0\nsystem.delta0 = 1.0\n")) == EXIT_CONFIG


def test_coeffs_quadrature_failure_exit_code(write):
    text = ENV_CFG + "quadrature.max_frequency = 200.0\nquadrature.max_lag = 200.0\nquadrature.coeff_rtol = 1e-12\n"
    assert run("coeffs", "--config", write(text), "--numeric") == EXIT_NUMERIC


def test_evolve_dephasing_and_determinism(write, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = write(NOISE_CFG)
    assert run("evolve", "--config", cfg, "--out", a) == EXIT_OK
    assert run("evolve", "--config", cfg, "--out", b) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    table = csvio.read(a)
    t = table.column("t")
    np.testing.assert_allclose(table.column("re_rho01"), 0.5 * np.exp(-2 * t) * np.cos(10 * t), atol=1e-9)
    assert csvio.parse(a.read_text()).render() == a.read_text()


def test_evolve_zero_duration(write, tmp_path):
    out = tmp_path / "z.csv"
    assert run("evolve", "--config", write(NOISE_CFG.replace("t_end = 0.5", "t_end = 0.0")), "--out", out) == 0
    table = csvio.read(out)
    assert table.rows.shape == (1, 12)
    assert table.rows[0, 1:9].tolist() == [0.5, 0, 0.5, 0, 0.5, 0, 0.5, 0]


def test_evolve_abort_writes_trailing_comment(write, tmp_path):
    text = ("model = spin-boson\nmode = verbatim\nsystem.omega0 = 0.0\nsystem.delta0 = 0.0\n"
            "coefficients.D = 1000.0\ncoefficients.f = 0.0\ncoefficients.gamma = 0.0\n"
            "integrator.dt = 1e-05\nintegrator.t_end = 1.0\nintegrator.store_stride = 1000\n")
    out = tmp_path / "x.csv"
    assert run("evolve", "--config", write(text), "--out", out) == EXIT_NUMERIC
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("# integration aborted at t=")
    assert len(lines) > 2


def test_evolve_rejects_model_both(write):
    assert run("evolve", "--config", write(DEMO)) == EXIT_CONFIG


def test_ensemble_degenerate_matches_evolve(write, tmp_path):
    text = NOISE_CFG.replace("noise.alpha = 1.0", "noise.alpha = 0.0").replace("delta0 = 0.0", "delta0 = 4.0")
    text += "ensemble.N = 1\nensemble.dt = 5e-06\nensemble.t_end = 0.5\nensemble.store_stride = 1000\n"
    cfg = write(text)
    ev, en = tmp_path / "ev.csv", tmp_path / "en.csv"
    assert run("evolve", "--config", cfg, "--out", ev) == 0
    assert run("ensemble", "--config", cfg, "--out", en) == 0
    e, m = csvio.read(ev), csvio.read(en)
    assert m.columns[-2:] == ("stderr_re_rho01", "stderr_im_rho01")
    assert np.all(np.isnan(m.column("stderr_re_rho01")))
    np.testing.assert_allclose(m.rows[:, :9], e.rows[:, :9], atol=1e-9)


def test_ensemble_workers_byte_identical(write, tmp_path):
    text = DEMO + "ensemble.N = 600\nensemble.dt = 1e-10\nensemble.t_end = 1e-07\nensemble.store_stride = 10\n"
    cfg = write(text)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("ensemble", "--config", cfg, "--workers", 1, "--seed", 7, "--out", a) == 0
    assert run("ensemble", "--config", cfg, "--workers", 4, "--seed", 7, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_csv_and_svg(write, tmp_path):
    out, pic = tmp_path / "c.csv", tmp_path / "c.svg"
    assert run("compare", "--config", write(DEMO), "--out", out, "--svg", pic) == 0
    table = csvio.read(out)
    assert table.columns == csvio.COMPARE_COLUMNS
    assert table.column("delta_r")[0] == 0.0
    np.testing.assert_array_equal(table.column("delta_r"),
                                  table.column("re_rho01_sb") - table.column("re_rho01_noise"))
    doc = xml.dom.minidom.parse(str(pic))
    assert len(doc.getElementsByTagName("polyline")) == 3


def test_sweep_rows_and_consistency(write, tmp_path):
    out, pic = tmp_path / "s.csv", tmp_path / "s.svg"
    assert run("sweep", "--config", write(DEMO), "--out", out, "--svg", pic) == 0
    table = csvio.read(out)
    assert table.column("rate").tolist() == [1e6, 5e6, 1e7, 5e7, 1e8]
    one = write(DEMO + "sweep.rates = 10000000.0\n", "one.cfg")
    out1 = tmp_path / "one.csv"
    assert run("sweep", "--config", one, "--out", out1) == 0
    assert csvio.read(out1).rows[0].tolist() == table.rows[2].tolist()
    again = tmp_path / "again.csv"
    run("sweep", "--config", write(DEMO), "--out", again, "--workers", 3)
    assert again.read_bytes() == out.read_bytes()


def test_sweep_derive_coeffs_needs_environment(write):
    assert run("sweep", "--config", write(DEMO), "--derive-coeffs") == EXIT_CONFIG


def test_tau_report(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert run("tau", "--preset", "tau", "--out", out) == 0
    table = csvio.read(out)
    assert table.rows.shape == (15, 8)
    np.testing.assert_allclose(table.column("tau_D"), 1 / table.column("rate"), rtol=1e-12)
    assert "within a factor 10" in capsys.readouterr().err


def test_tau_missing_temperature(write):
    assert run("tau", "--config", write("tau.mass = 6.49e-26\n")) == EXIT_CONFIG
    assert run("tau", "--config", write("model = both\n", "empty.cfg")) == EXIT_CONFIG


def test_io_failure_exit_code(write):
    assert run("compare", "--config", write(DEMO), "--out", "/nonexistent/dir/x.csv") == EXIT_IO


def test_missing_config_exit_code():
    assert run("evolve", "--config", "/nonexistent.cfg") == EXIT_CONFIG
    assert run("evolve") == EXIT_CONFIG


def test_presets_parse():
    for name in ("fig3", "fig4", "fig5", "tau"):
        loads(preset_text(name))


def test_matplotlib_figure(write, tmp_path):
    png = tmp_path / "c.png"
    assert run("compare", "--config", write(DEMO), "--out", tmp_path / "c.csv", "--figure", png) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_console_script_demo_figures(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "iondeco.cli", "demo-figures", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    for name in ("fig3", "fig4", "fig5", "tau"):
        for ext in ("csv", "svg", "png"):
            assert (tmp_path / f"{name}.{ext}").stat().st_size > 0
