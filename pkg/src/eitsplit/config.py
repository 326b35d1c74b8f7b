"""Scenario configuration files.

Configs are TOML. Every key carries its unit in the name; angular
frequencies given in ``*_mhz`` / ``*_khz`` are divided by 2*pi, so
``rabi_mhz = 5.8`` means a Rabi frequency of 2*pi x 5.8 MHz. See
``docs/config.md`` for the full schema.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from .medium import MediumParams
from .schedule import ControlSchedule, ProbePulse, Segment
from .solver import Grid

TWO_PI = 2.0 * np.pi
MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3
US = 1e-6
NS = 1e-9
MM = 1e-3

KINDS = ("simulation", "spectrum")


class ConfigError(ValueError):
    """A scenario config could not be parsed or failed validation."""


@dataclass(frozen=True)
class MediumConfig:
    od: float = 21.0
    gamma_mhz: float = 5.8
    gamma_gs_khz: float = 3.8
    length_mm: float = 10.0


@dataclass(frozen=True)
class ProbeConfig:
    peak: float = 1.0
    center_us: float = 1.5
    fwhm_us: float = 1.0


@dataclass(frozen=True)
class SequenceConfig:
    write_off_us: float = 2.05
    storage_us: float = 1.93
    readout_us: float = 4.0
    ramp_us: float = 0.1


@dataclass(frozen=True)
class ControlConfig:
    write_rabi_mhz: float = 0.0
    read_rabi_mhz: float = 0.0
    read_phase_rad: float = 0.0
    detuning_mhz: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    nz: int = 256
    dt_ns: float = 1.0
    map_every: int = 0


@dataclass(frozen=True)
class SolverConfig:
    phase_mismatch_rad_per_m: float = 0.0
    dark_skip: bool = True


@dataclass(frozen=True)
class AnalysisConfig:
    convergence_check: bool = True
    fringe: bool = False
    fringe_points: int = 12
    delta_phi_rad: list = field(default_factory=list)
    beat: bool = False
    window_us: list = field(default_factory=list)


@dataclass(frozen=True)
class SpectrumConfig:
    rabi_mhz: float = 5.8
    span_mhz: float = 15.0
    points: int = 601


@dataclass(frozen=True)
class OutputConfig:
    directory: str = ""
    plot: bool = True


SECTIONS = {
    "medium": MediumConfig,
    "probe": ProbeConfig,
    "sequence": SequenceConfig,
    "fw": ControlConfig,
    "bw": ControlConfig,
    "grid": GridConfig,
    "solver": SolverConfig,
    "analysis": AnalysisConfig,
    "spectrum": SpectrumConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    kind: str = "simulation"
    description: str = ""
    medium: MediumConfig = field(default_factory=MediumConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    sequence: SequenceConfig = field(default_factory=SequenceConfig)
    fw: ControlConfig = field(default_factory=ControlConfig)
    bw: ControlConfig = field(default_factory=ControlConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # -- physical objects --------------------------------------------------

    @property
    def t_retrieve(self) -> float:
        return (self.sequence.write_off_us + self.sequence.storage_us) * US

    @property
    def t_end(self) -> float:
        return self.t_retrieve + self.sequence.readout_us * US

    def medium_params(self) -> MediumParams:
        m = self.medium
        return MediumParams(od=m.od, gamma=m.gamma_mhz * MHZ, gamma_gs=m.gamma_gs_khz * KHZ, length=m.length_mm * MM)

    def _schedule(self, c: ControlConfig) -> ControlSchedule:
        seq = self.sequence
        ramp = seq.ramp_us * US
        segs = []
        if c.write_rabi_mhz > 0:
            segs.append(Segment(0.0, seq.write_off_us * US, c.write_rabi_mhz * MHZ, 0.0, ramp))
        if c.read_rabi_mhz > 0 and seq.readout_us > 0:
            segs.append(Segment(self.t_retrieve, self.t_end, c.read_rabi_mhz * MHZ, c.read_phase_rad, ramp))
        return ControlSchedule(tuple(segs), c.detuning_mhz * MHZ)

    def fw_schedule(self) -> ControlSchedule:
        return self._schedule(self.fw)

    def bw_schedule(self) -> ControlSchedule:
        return self._schedule(self.bw)

    def probe_pulse(self) -> ProbePulse:
        p = self.probe
        return ProbePulse(peak_amplitude=p.peak, center=p.center_us * US, fwhm=p.fwhm_us * US)

    def sim_grid(self) -> Grid:
        return Grid.from_step(self.t_end, self.grid.dt_ns * NS, nz=self.grid.nz)

    def analysis_window(self) -> tuple[float, float] | None:
        w = self.analysis.window_us
        return (w[0] * US, w[1] * US) if w else None

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind, "description": self.description}
        for key in SECTIONS:
            out[key] = {k: (list(v) if isinstance(v, list) else v) for k, v in dataclasses.asdict(getattr(self, key)).items()}
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def replace_path(self, path: str, value) -> "ScenarioConfig":
        """Copy with one scalar field, addressed as ``section.key``, replaced."""
        parts = path.split(".")
        if len(parts) == 1 and parts[0] in ("name", "description"):
            raise ConfigError(f"parameter {path!r} is not a numeric scalar")
        if len(parts) != 2 or parts[0] not in SECTIONS:
            raise ConfigError(f"unknown parameter path {path!r}; expected '<section>.<key>'")
        section, key = parts
        sub = getattr(self, section)
        names = {f.name: f for f in dataclasses.fields(sub)}
        if key not in names:
            raise ConfigError(f"unknown parameter path {path!r}")
        current = getattr(sub, key)
        if isinstance(current, (list, str)):
            raise ConfigError(f"parameter {path!r} is not a scalar")
        value = _coerce(f"{section}.{key}", names[key].type, value)
        cfg = dataclasses.replace(self, **{section: dataclasses.replace(sub, **{key: value})})
        validate(cfg)
        return cfg


def _type_name(tp) -> str:
    return tp if isinstance(tp, str) else tp.__name__


def _coerce(where: str, tp, value):
    tp = _type_name(tp)
    if tp == "bool":
        if isinstance(value, bool):
            return value
        raise ConfigError(f"field {where}: expected true/false, got {value!r}")
    if tp == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"field {where}: expected integer, got {value!r}")
        return int(value)
    if tp == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field {where}: expected number, got {value!r}")
        return float(value)
    if tp == "str":
        if not isinstance(value, str):
            raise ConfigError(f"field {where}: expected string, got {value!r}")
        return value
    if tp == "list":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"field {where}: expected list of numbers, got {value!r}")
        return [float(v) for v in value]
    raise ConfigError(f"field {where}: unsupported type {tp}")


def from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a config; missing keys take their defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    top = {}
    for key, value in data.items():
        if key in ("name", "kind", "description"):
            top[key] = _coerce(key, "str", value)
        elif key in SECTIONS:
            cls = SECTIONS[key]
            if not isinstance(value, dict):
                raise ConfigError(f"field {key}: expected a [{key}] table")
            names = {f.name: f for f in dataclasses.fields(cls)}
            kwargs = {}
            for k, v in value.items():
                if k not in names:
                    raise ConfigError(f"unknown field {key}.{k}")
                kwargs[k] = _coerce(f"{key}.{k}", names[k].type, v)
            top[key] = cls(**kwargs)
        else:
            raise ConfigError(f"unknown field {key}")
    cfg = ScenarioConfig(**top)
    validate(cfg)
    return cfg


def _positive(where: str, value, strict: bool = True):
    ok = value > 0 if strict else value >= 0
    if not ok:
        raise ConfigError(f"field {where}: must be {'>' if strict else '>='} 0, got {value}")


def validate(cfg: ScenarioConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"field kind: must be one of {KINDS}, got {cfg.kind!r}")
    _positive("medium.od", cfg.medium.od)
    _positive("medium.gamma_mhz", cfg.medium.gamma_mhz)
    _positive("medium.gamma_gs_khz", cfg.medium.gamma_gs_khz, strict=False)
    _positive("medium.length_mm", cfg.medium.length_mm)
    _positive("probe.fwhm_us", cfg.probe.fwhm_us)
    _positive("sequence.write_off_us", cfg.sequence.write_off_us)
    _positive("sequence.storage_us", cfg.sequence.storage_us, strict=False)
    _positive("sequence.readout_us", cfg.sequence.readout_us, strict=False)
    _positive("sequence.ramp_us", cfg.sequence.ramp_us, strict=False)
    for side in ("fw", "bw"):
        c = getattr(cfg, side)
        _positive(f"{side}.write_rabi_mhz", c.write_rabi_mhz, strict=False)
        _positive(f"{side}.read_rabi_mhz", c.read_rabi_mhz, strict=False)
    if cfg.fw.detuning_mhz != 0:
        raise ConfigError("field fw.detuning_mhz: the forward control is resonant; detune the backward control")
    if cfg.grid.nz < 64:
        raise ConfigError(f"field grid.nz: must be >= 64, got {cfg.grid.nz}")
    _positive("grid.dt_ns", cfg.grid.dt_ns)
    _positive("grid.map_every", cfg.grid.map_every, strict=False)
    if cfg.analysis.fringe_points < 12 and not cfg.analysis.delta_phi_rad:
        raise ConfigError(f"field analysis.fringe_points: need >= 12 settings, got {cfg.analysis.fringe_points}")
    w = cfg.analysis.window_us
    if w and (len(w) != 2 or not w[1] > w[0]):
        raise ConfigError(f"field analysis.window_us: expected [start, end] with end > start, got {w}")
    _positive("spectrum.span_mhz", cfg.spectrum.span_mhz)
    _positive("spectrum.rabi_mhz", cfg.spectrum.rabi_mhz, strict=False)
    if cfg.spectrum.points < 3:
        raise ConfigError("field spectrum.points: need >= 3")


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        where = ""
        if getattr(exc, "lineno", None) is not None and "line" not in str(exc):
            where = f" (line {exc.lineno}, column {exc.colno})"
        raise ConfigError(f"unparseable config: {exc}{where}") from exc
    return from_dict(data)


def load(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return loads(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(cfg.dumps(), encoding="utf-8")


# -- presets ----------------------------------------------------------------


def preset_names() -> list[str]:
    files = resources.files("eitsplit").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".toml"))


def load_preset(name: str) -> ScenarioConfig:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(preset_names())}")
    text = resources.files("eitsplit").joinpath("presets", f"{name}.toml").read_text(encoding="utf-8")
    return loads(text)


def resolve(name_or_path: str) -> ScenarioConfig:
    """A preset name or the path of a TOML config."""
    if name_or_path in preset_names():
        return load_preset(name_or_path)
    path = Path(name_or_path)
    if path.suffix == ".toml" or path.exists():
        return load(path)
    raise ConfigError(f"unknown preset {name_or_path!r}; known presets: {', '.join(preset_names())}")
