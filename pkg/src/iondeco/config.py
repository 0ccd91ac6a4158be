"""Run configuration in a flat ``section.key = value`` text format.

Lines starting with ``#`` are comments. Floats are written with ``repr`` so
a config survives write -> read -> write unchanged. Lists are comma
separated, booleans are ``true``/``false``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import DEFAULT_RATES, DEFAULT_WINDOW, TauConfig
from .core import CoefficientSet, EnvironmentParams, NoiseParams, SystemParams
from .dynamics import IntegratorSpec, SpinBosonMode
from .spectral import QuadratureSpec
from .stochastic import EnsembleSpec

MODELS = ("spin-boson", "noise", "both")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSettings:
    rates: tuple[float, ...] = DEFAULT_RATES
    window: tuple[float, float] = DEFAULT_WINDOW
    derive_coeffs: bool = False


@dataclass(frozen=True)
class OutputPaths:
    csv: str | None = None
    svg: str | None = None
    figure: str | None = None


@dataclass(frozen=True)
class RunConfig:
    model: str = "both"
    mode: SpinBosonMode = SpinBosonMode.HERMITIAN
    system: SystemParams | None = None
    environment: EnvironmentParams | None = None
    coefficients: CoefficientSet | None = None
    noise: NoiseParams | None = None
    integrator: IntegratorSpec | None = None
    ensemble: EnsembleSpec | None = None
    quadrature: QuadratureSpec | None = None
    sweep: SweepSettings = field(default_factory=SweepSettings)
    tau: TauConfig | None = None
    workers: int = 1
    output: OutputPaths = field(default_factory=OutputPaths)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.environment is not None and self.coefficients is not None:
            raise ConfigError("give either an environment block or a coefficients block, not both")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")

    def require(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError("config is missing: " + ", ".join(missing))


# key -> (section attribute, field name, kind). Field order here is the
# serialization order.
_KEYS: dict[str, tuple[str, str, str]] = {
    "model": ("", "model", "str"),
    "mode": ("", "mode", "mode"),
    "run.workers": ("", "workers", "int"),
    "system.omega0": ("system", "omega0", "float"),
    "system.delta0": ("system", "delta0", "float"),
    "environment.M": ("environment", "mass_scale", "float"),
    "environment.gamma0": ("environment", "gamma0", "float"),
    "environment.omega_c": ("environment", "omega_c", "float"),
    "environment.kBT": ("environment", "kBT", "float"),
    "coefficients.D": ("coefficients", "D", "float"),
    "coefficients.f": ("coefficients", "f", "float"),
    "coefficients.gamma": ("coefficients", "gamma", "float"),
    "noise.alpha": ("noise", "alpha", "float"),
    "integrator.method": ("integrator", "method", "str"),
    "integrator.dt": ("integrator", "dt", "float"),
    "integrator.t_end": ("integrator", "t_end", "float"),
    "integrator.store_stride": ("integrator", "store_stride", "int"),
    "integrator.rtol": ("integrator", "rtol", "float"),
    "integrator.atol": ("integrator", "atol", "float"),
    "integrator.renormalize": ("integrator", "renormalize", "bool"),
    "ensemble.N": ("ensemble", "n_realizations", "int"),
    "ensemble.dt": ("ensemble", "dt", "float"),
    "ensemble.t_end": ("ensemble", "t_end", "float"),
    "ensemble.seed": ("ensemble", "master_seed", "int"),
    "ensemble.store_stride": ("ensemble", "store_stride", "int"),
    "ensemble.splitting": ("ensemble", "splitting", "str"),
    "quadrature.max_frequency": ("quadrature", "max_frequency", "float"),
    "quadrature.max_lag": ("quadrature", "max_lag", "float"),
    "quadrature.panel_count": ("quadrature", "panel_count", "int"),
    "quadrature.scheme": ("quadrature", "scheme", "str"),
    "quadrature.rtol": ("quadrature", "rtol", "float"),
    "quadrature.outer_order": ("quadrature", "outer_order", "int"),
    "quadrature.coeff_rtol": ("quadrature", "coeff_rtol", "float"),
    "quadrature.tail_correction": ("quadrature", "tail_correction", "bool"),
    "sweep.rates": ("sweep", "rates", "floats"),
    "sweep.window": ("sweep", "window", "floats"),
    "sweep.derive_coeffs": ("sweep", "derive_coeffs", "bool"),
    "tau.mass": ("tau", "mass", "float"),
    "tau.temperature": ("tau", "temperature", "float"),
    "tau.cutoff": ("tau", "cutoff", "float"),
    "tau.delta_x": ("tau", "delta_x", "float"),
    "tau.rates": ("tau", "rates", "floats"),
    "tau.frequencies": ("tau", "frequencies", "floats"),
    "output.csv": ("output", "csv", "str"),
    "output.svg": ("output", "svg", "str"),
    "output.figure": ("output", "figure", "str"),
}

_SECTIONS = {
    "system": SystemParams,
    "environment": EnvironmentParams,
    "coefficients": CoefficientSet,
    "noise": NoiseParams,
    "integrator": IntegratorSpec,
    "ensemble": EnsembleSpec,
    "quadrature": QuadratureSpec,
    "sweep": SweepSettings,
    "tau": TauConfig,
    "output": OutputPaths,
}


def _parse_value(key: str, text: str, kind: str):
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if kind == "floats":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if kind == "mode":
            return SpinBosonMode(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind}") from exc


def _format_value(value, kind: str) -> str:
    if kind == "float":
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "mode":
        return SpinBosonMode(value).value
    return str(value)


def loads(text: str) -> RunConfig:
    top: dict = {}
    sections: dict[str, dict] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        section, name, kind = _KEYS[key]
        parsed = _parse_value(key, value, kind)
        if section:
            sections.setdefault(section, {})[name] = parsed
        else:
            top[name] = parsed

    if "sweep" in sections and "window" in sections["sweep"]:
        window = sections["sweep"]["window"]
        if len(window) != 2:
            raise ConfigError("sweep.window needs exactly two values")
    for section, values in sections.items():
        try:
            top[section] = _SECTIONS[section](**values)
        except TypeError as exc:
            raise ConfigError(f"incomplete [{section}] block: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from exc
    try:
        return RunConfig(**top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def dumps(cfg: RunConfig) -> str:
    lines = []
    for key, (section, name, kind) in _KEYS.items():
        if section:
            obj = getattr(cfg, section)
            if obj is None:
                continue
            value = getattr(obj, name)
        else:
            value = getattr(cfg, name)
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value, kind)}")
    return "\n".join(lines) + "\n"


def dump(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg
