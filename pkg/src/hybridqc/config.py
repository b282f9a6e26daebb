"""Run configuration: a flat ``section.key = value`` text format.

Grammar, one assignment per line::

    # comment
    scenario = fig3
    rates.gamma = 0.5
    grid.panel_times = 0.5, 1.0

Blank lines and ``#`` comments are ignored. Values are decimal reals,
integers, words, or comma-separated lists of those. The ``scenario`` key is
applied first and supplies the defaults; every other key overrides one
field. Unknown keys are errors.
"""
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError

SCENARIOS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "custom")
FORMATS = ("csv", "json", "plot")

FIG3_UP = math.sqrt(1 / 20) * (3 - 1j)
FIG3_DN = (1 + 1j) / 2


@dataclass(frozen=True)
class Rates:
    phi: float = 1.0
    gamma: float = 0.5
    lambda_up_re: float = 0.0
    lambda_up_im: float = 0.0
    lambda_dn_re: float = 0.0
    lambda_dn_im: float = 0.0

    @property
    def lambda_up(self):
        return complex(self.lambda_up_re, self.lambda_up_im)

    @property
    def lambda_dn(self):
        return complex(self.lambda_dn_re, self.lambda_dn_im)

    @property
    def coherent(self):
        return self.lambda_up != 0 or self.lambda_dn != 0


@dataclass(frozen=True)
class Grid:
    n_half_width: int = 60
    r0: float = 1.0
    dt_factor: float = 0.01
    t_end_phi_units: float = 5.0
    snapshot_stride: int = 1
    panel_times: tuple = (0.1, 0.28, 1.0, 5.0)


@dataclass(frozen=True)
class Initial:
    rho0: tuple = (0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0)
    n0: int = 0
    sigma0_sq_over_r0_sq: float = 0.0

    @property
    def rho0_matrix(self):
        v = np.asarray(self.rho0, dtype=float)
        return (v[0::2] + 1j * v[1::2]).reshape(2, 2)


@dataclass(frozen=True)
class Outputs:
    directory: str = "hybridqc-out"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "custom"
    rates: Rates = field(default_factory=Rates)
    grid: Grid = field(default_factory=Grid)
    initial: Initial = field(default_factory=Initial)
    outputs: Outputs = field(default_factory=Outputs)

    @property
    def dt(self):
        return self.grid.dt_factor / self.rates.phi

    @property
    def t_end(self):
        return self.grid.t_end_phi_units / self.rates.phi

    @property
    def sigma0(self):
        return self.grid.r0 * math.sqrt(self.initial.sigma0_sq_over_r0_sq)


SECTIONS = {"rates": Rates, "grid": Grid, "initial": Initial, "outputs": Outputs}


def scenario_defaults(name):
    """Configuration reproducing one figure; ``custom`` starts from the example-1 rates."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    cfg = RunConfig(scenario=name)
    if name in ("fig2", "fig3", "fig4", "fig6"):
        cfg = replace(cfg, initial=replace(cfg.initial, sigma0_sq_over_r0_sq=0.5))
    if name in ("fig3", "fig4", "fig5", "fig6"):
        cfg = replace(cfg, rates=Rates(1.0, 0.5, FIG3_UP.real, FIG3_UP.imag,
                                       FIG3_DN.real, FIG3_DN.imag))
    if name in ("fig3", "fig4"):
        cfg = replace(cfg, grid=replace(cfg.grid, panel_times=(0.5, 1.0)))
    return cfg


def _convert(raw, kind, key, line):
    def scalar(text):
        text = text.strip()
        if kind is str or kind is tuple and key == "outputs.formats":
            return text
        try:
            if kind is int or key in ("initial.n0",):
                return int(text)
            value = float(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {text!r} as a number", line) from None
        if not math.isfinite(value):
            raise ConfigError(f"{key}: value must be finite", line)
        return value
    if kind is tuple:
        parts = [p for p in raw.split(",") if p.strip()]
        return tuple(scalar(p) for p in parts)
    return scalar(raw)


def _field_kinds(cls):
    return {f.name: type(f.default) if not isinstance(f.default, tuple) else tuple
            for f in fields(cls)}


def set_value(cfg, key, raw, line=None):
    """Return ``cfg`` with ``key`` (``section.name`` or ``scenario``) set from text."""
    key = key.strip()
    if key == "scenario":
        raise ConfigError("scenario can only be chosen once, at the top", line)
    section, _, name = key.partition(".")
    cls = SECTIONS.get(section)
    if cls is None or name not in _field_kinds(cls):
        raise ConfigError(f"unknown key {key!r}", line)
    value = _convert(raw, _field_kinds(cls)[name], key, line)
    return replace(cfg, **{section: replace(getattr(cfg, section), **{name: value})})


def _split(text):
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, value = body.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        yield lineno, key.strip(), value.strip()


def parse_config(text, overrides=()):
    """Parse configuration text and optional ``key=value`` overrides into a validated config."""
    entries = list(_split(text))
    names = [(ln, v) for ln, k, v in entries if k == "scenario"]
    if len(names) > 1:
        raise ConfigError("scenario given more than once", names[1][0])
    cfg = scenario_defaults(names[0][1]) if names else RunConfig()
    for lineno, key, value in entries:
        if key != "scenario":
            cfg = set_value(cfg, key, value, lineno)
    for item in overrides:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"override {item!r} is not key=value")
        cfg = set_value(cfg, key, value)
    return validate_config(cfg)


def validate_config(cfg):
    """Check ranges; the CP inequalities are checked when the model is built."""
    r, g, i = cfg.rates, cfg.grid, cfg.initial
    if not r.phi > 0:
        raise ConfigError(f"rates.phi = {r.phi} must be positive (times are in phi units)")
    if r.gamma < 0:
        raise ConfigError(f"rates.gamma = {r.gamma} must be nonnegative (negative rate)")
    if g.n_half_width < 1:
        raise ConfigError("grid.n_half_width must be at least 1")
    if not g.r0 > 0 or not g.dt_factor > 0:
        raise ConfigError("grid.r0 and grid.dt_factor must be positive")
    if g.t_end_phi_units < 0:
        raise ConfigError("grid.t_end_phi_units must be nonnegative")
    if g.snapshot_stride < 1:
        raise ConfigError("grid.snapshot_stride must be at least 1")
    if any(t < 0 for t in g.panel_times):
        raise ConfigError("grid.panel_times must be nonnegative")
    if len(i.rho0) != 8:
        raise ConfigError("initial.rho0 needs 8 reals (re, im of a 2x2 matrix, row-major)")
    rho = i.rho0_matrix
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ConfigError("initial.rho0 is not Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise ConfigError("initial.rho0 must have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -1e-10:
        raise ConfigError("initial.rho0 has a negative eigenvalue")
    if abs(i.n0) > g.n_half_width:
        raise ConfigError("initial.n0 lies outside the lattice window")
    if i.sigma0_sq_over_r0_sq < 0:
        raise ConfigError("initial.sigma0_sq_over_r0_sq must be nonnegative")
    bad = set(cfg.outputs.formats) - set(FORMATS)
    if bad:
        raise ConfigError(f"unknown output formats {sorted(bad)}; choose from {FORMATS}")
    return cfg


def _fmt(v):
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def serialize(cfg):
    """Text form that :func:`parse_config` reads back to an equal config."""
    lines = [f"scenario = {cfg.scenario}"]
    for section in SECTIONS:
        part = getattr(cfg, section)
        for f in fields(part):
            lines.append(f"{section}.{f.name} = {_fmt(getattr(part, f.name))}")
    return "\n".join(lines) + "\n"
