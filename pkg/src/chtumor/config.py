"""Run configuration: JSON ingestion, validation, and object builders.

A config is a JSON object with sections (all optional except grid):

    grid:       {extents: [L_i, ...], modes: [N_i, ...]}
    potential:  {name, params: {...}, yosida_m: null | m, yosida_tol}
    prolif:     {name, params: {...}}
    scheme:     {dt, t_end, nonlinear, tol_n, max_iter, dealias,
                 implicit_mu_source}
    initial:    {phi_mean, psi_value, noise_amp, seed}
    output:     {snapshot_stride, diagnostic_stride}
    compare:    {deltas, t_end, dt}          (continuous-dependence runs)
    attractor:  {ensemble, energy_bound, transient, horizon, dt, noise_amp}
    convergence:{taus, t_end, modes, ref_modes, ref_factor}

Defaults (filled on load): double-well potential, truncated-quadratic p,
dt = 1e-4, t_end = 0.1, newton inner solver with tol_n = 1e-10, phi_mean = 0,
psi_value = 0.1, noise_amp = 0.05, seed = 12345, strides 10/100.

The master seed expands per consumer by fixed offsets: phi noise uses
seed + 1, the compare direction uses seed + 3, and ensemble member i uses
seed + 100 + i. Configs round-trip losslessly through save/load.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .basis import Grid
from .dynamics import SchemeConfig, SimState, noisy_state
from .potentials import BUILTIN_POTENTIALS, SplitPotential, YosidaPotential
from .proliferation import BUILTIN_PROLIFERATIONS, ProliferationFn

SEED_OFFSET_PHI = 1
SEED_OFFSET_PSI = 2
SEED_OFFSET_DIRECTION = 3


class ConfigError(ValueError):
    """Invalid configuration; .path names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridSection:
    extents: tuple[float, ...] = (1.0,)
    modes: tuple[int, ...] = (64,)


@dataclass(frozen=True)
class PotentialSection:
    name: str = "double_well"
    params: dict = field(default_factory=dict)
    yosida_m: float | None = None
    yosida_tol: float = 1e-12


@dataclass(frozen=True)
class ProlifSection:
    name: str = "truncated_quadratic"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SchemeSection:
    dt: float = 1e-4
    t_end: float = 0.1
    nonlinear: str = "newton"
    tol_n: float = 1e-10
    max_iter: int = 50
    dealias: bool = False
    implicit_mu_source: bool = False


@dataclass(frozen=True)
class InitialSection:
    phi_mean: float = 0.0
    psi_value: float = 0.1
    noise_amp: float = 0.05
    seed: int = 12345


@dataclass(frozen=True)
class OutputSection:
    snapshot_stride: int = 100
    diagnostic_stride: int = 10


@dataclass(frozen=True)
class CompareSection:
    deltas: tuple[float, ...] = (1e-3, 5e-4, 2.5e-4)
    t_end: float = 0.05
    dt: float = 2e-4


@dataclass(frozen=True)
class AttractorSection:
    ensemble: int = 8
    energy_bound: float = 2.0
    transient: float = 10.0
    horizon: float = 50.0
    dt: float = 0.02
    noise_amp: float = 0.5


@dataclass(frozen=True)
class ConvergenceSection:
    taus: tuple[float, ...] = (4e-4, 2e-4, 1e-4)
    t_end: float = 0.1
    modes: tuple[int, ...] = (16, 32, 64)
    ref_modes: int = 128
    ref_factor: int = 16


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    potential: PotentialSection = field(default_factory=PotentialSection)
    prolif: ProlifSection = field(default_factory=ProlifSection)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    compare: CompareSection = field(default_factory=CompareSection)
    attractor: AttractorSection = field(default_factory=AttractorSection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, initial=replace(self.initial, seed=int(seed)))


_SECTIONS = {
    "grid": GridSection,
    "potential": PotentialSection,
    "prolif": ProlifSection,
    "scheme": SchemeSection,
    "initial": InitialSection,
    "output": OutputSection,
    "compare": CompareSection,
    "attractor": AttractorSection,
    "convergence": ConvergenceSection,
}

_TUPLE_FIELDS = {"extents", "modes", "deltas", "taus"}


def _coerce_section(name: str, cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(name, f"expected an object, got {type(data).__name__}")
    defaults = cls()
    known = set(defaults.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown field")
    kwargs = {}
    for key, value in data.items():
        path = f"{name}.{key}"
        default_val = getattr(defaults, key)
        if key in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(path, "expected a list")
            value = tuple(value)
        elif isinstance(default_val, bool):
            if not isinstance(value, bool):
                raise ConfigError(path, "expected a boolean")
        elif isinstance(default_val, (int, float)) or default_val is None:
            if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
                raise ConfigError(path, "expected a number")
        elif isinstance(default_val, str):
            if not isinstance(value, str):
                raise ConfigError(path, "expected a string")
        elif isinstance(default_val, dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
        kwargs[key] = value
    return replace(defaults, **kwargs)


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    sections = {}
    for name, cls in _SECTIONS.items():
        sections[name] = _coerce_section(name, cls, data.get(name, {}))
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Check every numeric field against the module preconditions."""
    g = cfg.grid
    if len(g.extents) != len(g.modes):
        raise ConfigError("grid.modes", "extents and modes must have equal length")
    if not (1 <= len(g.extents) <= 3):
        raise ConfigError("grid.extents", "dimension must be 1, 2 or 3")
    for i, L in enumerate(g.extents):
        if not (isinstance(L, (int, float)) and L > 0):
            raise ConfigError(f"grid.extents[{i}]", "must be positive")
    for i, N in enumerate(g.modes):
        if not (isinstance(N, int) and N >= 2):
            raise ConfigError(f"grid.modes[{i}]", "must be an integer >= 2")

    if cfg.potential.name not in BUILTIN_POTENTIALS:
        raise ConfigError(
            "potential.name",
            f"unknown potential {cfg.potential.name!r}; available: "
            + ", ".join(sorted(BUILTIN_POTENTIALS)),
        )
    if cfg.potential.yosida_m is not None and cfg.potential.yosida_m < 1:
        raise ConfigError("potential.yosida_m", "must be >= 1")
    if not (0.0 < cfg.potential.yosida_tol <= 1e-8):
        raise ConfigError("potential.yosida_tol", "must lie in (0, 1e-8]")

    if cfg.prolif.name not in BUILTIN_PROLIFERATIONS:
        raise ConfigError(
            "prolif.name",
            f"unknown proliferation {cfg.prolif.name!r}; available: "
            + ", ".join(sorted(BUILTIN_PROLIFERATIONS)),
        )

    s = cfg.scheme
    if s.dt <= 0:
        raise ConfigError("scheme.dt", "must be positive")
    if s.t_end < 0:
        raise ConfigError("scheme.t_end", "must be nonnegative")
    if not (0.0 < s.tol_n <= 1e-6):
        raise ConfigError("scheme.tol_n", "must lie in (0, 1e-6]")
    if s.max_iter < 10:
        raise ConfigError("scheme.max_iter", "must be >= 10")
    if s.nonlinear not in ("newton", "fixed_point"):
        raise ConfigError("scheme.nonlinear", "must be 'newton' or 'fixed_point'")

    if cfg.initial.noise_amp < 0:
        raise ConfigError("initial.noise_amp", "must be nonnegative")
    if not isinstance(cfg.initial.seed, int):
        raise ConfigError("initial.seed", "must be an integer")
    for fname in ("snapshot_stride", "diagnostic_stride"):
        val = getattr(cfg.output, fname)
        if not isinstance(val, int) or val < 1:
            raise ConfigError(f"output.{fname}", "must be an integer >= 1")

    c = cfg.compare
    if any(d <= 0 for d in c.deltas):
        raise ConfigError("compare.deltas", "must be positive")
    if c.t_end <= 0 or c.dt <= 0:
        raise ConfigError("compare.t_end", "compare horizon and dt must be positive")

    a = cfg.attractor
    if a.ensemble < 1:
        raise ConfigError("attractor.ensemble", "must be >= 1")
    if a.energy_bound <= 0:
        raise ConfigError("attractor.energy_bound", "must be positive")
    if not (0 <= a.transient < a.horizon):
        raise ConfigError("attractor.transient", "need 0 <= transient < horizon")
    if a.dt <= 0:
        raise ConfigError("attractor.dt", "must be positive")

    v = cfg.convergence
    if any(t <= 0 for t in v.taus):
        raise ConfigError("convergence.taus", "must be positive")
    if any(n < 2 for n in v.modes) or v.ref_modes < 2:
        raise ConfigError("convergence.modes", "mode counts must be >= 2")
    if v.ref_factor < 2:
        raise ConfigError("convergence.ref_factor", "must be >= 2")
    if v.t_end <= 0:
        raise ConfigError("convergence.t_end", "must be positive")


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("<file>", f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError("<file>", f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}")
    return from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


# builders


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.grid.extents, cfg.grid.modes)


def build_potential(cfg: RunConfig):
    pot: SplitPotential = BUILTIN_POTENTIALS[cfg.potential.name](**cfg.potential.params)
    if cfg.potential.yosida_m is not None:
        return YosidaPotential(pot, m=cfg.potential.yosida_m, tol_r=cfg.potential.yosida_tol)
    return pot


def build_prolif(cfg: RunConfig) -> ProliferationFn:
    return BUILTIN_PROLIFERATIONS[cfg.prolif.name](**cfg.prolif.params)


def build_scheme(cfg: RunConfig, **overrides) -> SchemeConfig:
    s = cfg.scheme
    kwargs = dict(
        potential=build_potential(cfg),
        prolif=build_prolif(cfg),
        dt=s.dt,
        t_end=s.t_end,
        nonlinear=s.nonlinear,
        tol_n=s.tol_n,
        max_iter=s.max_iter,
        dealias=s.dealias,
        implicit_mu_source=s.implicit_mu_source,
    )
    kwargs.update(overrides)
    return SchemeConfig(**kwargs)


def build_initial(cfg: RunConfig, grid: Grid | None = None) -> SimState:
    grid = grid or build_grid(cfg)
    ini = cfg.initial
    return noisy_state(grid, ini.phi_mean, ini.noise_amp,
                       ini.seed + SEED_OFFSET_PHI, ini.psi_value)


def standard_benchmark() -> RunConfig:
    """The 1-D acceptance benchmark: N = 64, dt = 1e-4, double-well,
    truncated-quadratic p, seeded spinodal noise."""
    return RunConfig(
        grid=GridSection(extents=(1.0,), modes=(64,)),
        scheme=SchemeSection(dt=1e-4, t_end=1.0),
        initial=InitialSection(phi_mean=0.0, psi_value=0.1, noise_amp=0.05, seed=12345),
    )
