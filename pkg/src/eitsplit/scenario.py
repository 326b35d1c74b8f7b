"""Run presets / config files and write their data tables, summaries and plots."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, medium as med
from .config import MHZ, US, ConfigError, ScenarioConfig, resolve
from .solver import SimResult, run, storage_efficiency

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "EITSPLIT_OUTPUT_ROOT"
CONVERGENCE_TOL = 0.01
TIMESERIES_COLUMNS = ("t_us", "fw_intensity", "bw_intensity", "fw_phase", "bw_phase", "control_fw", "control_bw")


@dataclass
class ScenarioOutcome:
    config: ScenarioConfig
    summary: dict
    directory: Path
    files: list[Path] = field(default_factory=list)
    result: SimResult | None = None


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _write(path: Path, text: str, files: list[Path]) -> None:
    path.write_text(text, encoding="utf-8")
    files.append(path)


def simulate(cfg: ScenarioConfig, refine: bool = False) -> SimResult:
    grid = cfg.sim_grid()
    if refine:
        grid = grid.refined()
    map_every = cfg.grid.map_every * (2 if refine else 1)
    return run(
        cfg.medium_params(),
        cfg.fw_schedule(),
        cfg.bw_schedule(),
        cfg.probe_pulse(),
        grid,
        phase_mismatch=cfg.solver.phase_mismatch_rad_per_m,
        map_every=map_every,
        dark_skip=cfg.solver.dark_skip,
    )


def scalar_outputs(result: SimResult) -> dict:
    """Scalars compared in the grid-convergence check, as fractions of the input."""
    led = result.ledger
    norm = led.supplied
    out = {
        "leaked": led.leaked / norm,
        "retrieved_fw": led.retrieved_fw / norm,
        "retrieved_bw": led.retrieved_bw / norm,
    }
    if led.input > 0 and result.dark is not None:
        out["efficiency"] = storage_efficiency(result)
    if led.retrieved_fw + led.retrieved_bw > 0:
        out["r_fw"], out["r_bw"] = analysis.splitting_ratio(result)
    return out


def relative_changes(a: dict, b: dict, floor: float = 1e-6) -> dict:
    """``|a - b| / |b|`` per key; values below ``floor`` of the input count as zero."""
    return {k: (0.0 if max(abs(a[k]), abs(b[k])) < floor else abs(a[k] - b[k]) / abs(b[k])) for k in b}


def _onset(t: np.ndarray, y: np.ndarray, t0: float, floor: float, frac: float = 0.01) -> float | None:
    sel = t >= t0
    if not sel.any() or y[sel].max() <= floor:
        return None
    ts, ys = t[sel], y[sel]
    return float(ts[np.argmax(ys >= frac * ys.max())])


def _fwhm_after(t: np.ndarray, y: np.ndarray, t0: float, floor: float) -> float | None:
    sel = t >= t0
    if not sel.any() or y[sel].max() <= floor:
        return None
    try:
        return analysis.pulse_duration(t[sel], y[sel])
    except ValueError:
        return None


def storage_map_metrics(result: SimResult) -> dict:
    """Photonic content and spin-wave shape drift during the dark interval."""
    if result.spacetime is None or result.dark is None or result.t_retrieve is None:
        return {}
    t0, t1 = result.dark
    rows = (result.map_t > t0 + 0.2 * US) & (result.map_t < t1)
    if not rows.any():
        return {}
    light = result.spacetime
    spin = result.spin_map[rows]
    shapes = spin / spin.sum(axis=1, keepdims=True)
    drift = float(np.max(np.abs(shapes - shapes[0])) / np.max(shapes[0]))
    after = result.map_t >= t1
    fw_exit = result.fw_out[result.t >= t1]
    bw_exit = result.bw_out[result.t >= t1]
    return {
        "photonic_peak_dark_over_peak": float(light[rows].max() / light.max()),
        "spin_wave_shape_drift": drift,
        "spin_wave_centroid_mm": float(np.sum(result.z * shapes[0]) * 1e3),
        "fw_and_bw_retrieved": bool(fw_exit.max() > 0 and bw_exit.max() > 0 and after.any()),
    }


def simulation_summary(cfg: ScenarioConfig, result: SimResult) -> dict:
    led = result.ledger
    summary: dict = {"scenario": cfg.name, "kind": cfg.kind}
    t_ret = result.t_retrieve
    summary["efficiency"] = storage_efficiency(result) if (led.input > 0 and result.dark is not None) else None
    try:
        r_fw, r_bw = analysis.splitting_ratio(result)
        summary["splitting_ratio"] = {"fw": r_fw, "bw": r_bw}
    except ValueError:
        summary["splitting_ratio"] = None
    norm = led.supplied if led.supplied > 0 else 1.0
    summary["energy_ledger"] = led.as_dict()
    summary["energy_fractions"] = {
        k: getattr(led, k) / norm for k in ("leaked", "retrieved_fw", "retrieved_bw", "dissipated", "residual")
    }
    timing = {
        "t_dark_us": None if result.dark is None else result.dark[0] / US,
        "t_retrieve_us": None if t_ret is None else t_ret / US,
    }
    if t_ret is not None:
        # traces below this are numerical dust, not a retrieved pulse
        floor = 1e-9 * max(float(np.max(np.abs(result.probe_field) ** 2)), float(np.max(result.fw_out)), float(np.max(result.bw_out)))
        for side, y in (("fw", result.fw_out), ("bw", result.bw_out)):
            onset = _onset(result.t, y, t_ret, floor)
            width = _fwhm_after(result.t, y, t_ret, floor)
            timing[f"{side}_onset_us"] = None if onset is None else onset / US
            timing[f"{side}_fwhm_us"] = None if width is None else width / US
    summary["timing"] = timing

    window = cfg.analysis_window() or (result.retrieval_window() if t_ret is not None else None)
    delta = cfg.bw.detuning_mhz * MHZ
    if cfg.analysis.fringe:
        phases = cfg.analysis.delta_phi_rad or cfg.analysis.fringe_points
        res = analysis.interference(result, phases, window, delta=delta)
        summary["interference"] = {
            "visibility": res.visibility,
            "fringe_phase_rad": res.fringe_phase,
            "fringe": [[p, v] for p, v in res.fringe],
        }
    if cfg.analysis.beat:
        port = analysis.combine(result.t, result.fw_field, result.bw_field, 0.0, delta)
        sel = np.ones_like(result.t, dtype=bool) if window is None else (result.t >= window[0]) & (result.t <= window[1])
        expected = None if delta == 0 else 2 * np.pi / abs(delta) / US
        try:
            period = analysis.beat_period(port.t[sel], port.port_plus[sel]) / US
            summary["beat"] = {"detected": True, "period_us": period, "expected_us": expected}
        except analysis.NoOscillation as exc:
            summary["beat"] = {"detected": False, "period_us": None, "expected_us": expected, "reason": str(exc)}
    maps = storage_map_metrics(result)
    if maps:
        summary["storage_map"] = maps
    return summary


def convergence_report(cfg: ScenarioConfig, coarse: SimResult) -> dict:
    fine = simulate(cfg, refine=True)
    changes = relative_changes(scalar_outputs(coarse), scalar_outputs(fine))
    worst = max(changes.values(), default=0.0)
    return {
        "checked": True,
        "max_relative_change": worst,
        "tolerance": CONVERGENCE_TOL,
        "converged": bool(worst < CONVERGENCE_TOL),
        "changes": changes,
        "fine_grid": {"nz": fine.meta["nz"], "dt_ns": fine.meta["dt"] / 1e-9},
    }


def timeseries_text(result: SimResult) -> str:
    rows = zip(
        result.t / US,
        result.fw_out,
        result.bw_out,
        result.fw_phase,
        result.bw_phase,
        np.abs(result.control_fw) / MHZ,
        np.abs(result.control_bw) / MHZ,
    )
    return _csv_text(TIMESERIES_COLUMNS, rows)


def _map_text(result: SimResult, data: np.ndarray) -> str:
    header = ["t_us"] + [f"z_mm={z * 1e3:.4f}" for z in result.z]
    rows = ([t / US, *row] for t, row in zip(result.map_t, data))
    return _csv_text(header, rows)


def spectrum_tables(cfg: ScenarioConfig) -> tuple[str, dict]:
    m = cfg.medium_params()
    sp = cfg.spectrum
    det_mhz = np.linspace(-0.5 * sp.span_mhz, 0.5 * sp.span_mhz, sp.points)
    delta = det_mhz * MHZ
    omega_c = sp.rabi_mhz * MHZ
    chi = med.eit_susceptibility(delta, omega_c, m)
    two = med.two_level_transmission(delta, m)
    eit = chi.transmission(m.od)
    text = _csv_text(
        ("detuning_mhz", "two_level_transmission", "eit_transmission", "chi_real", "chi_imag"),
        zip(det_mhz, two, eit, chi.value.real, chi.value.imag),
    )
    summary = {
        "scenario": cfg.name,
        "kind": cfg.kind,
        "two_level_on_resonance": med.two_level_transmission(0.0, m),
        "expected_exp_minus_od": float(np.exp(-m.od)),
        "eit_on_resonance": float(med.eit_transmission(0.0, omega_c, m)),
        "group_delay_us": med.group_delay(omega_c, m) / US if omega_c > 0 else None,
        "eit_peak_detuning_mhz": float(det_mhz[np.argmax(eit)]),
    }
    return text, summary


def run_config(cfg: ScenarioConfig, out_root: Path | None = None, plot: bool | None = None) -> ScenarioOutcome:
    """Run one scenario and write its files; returns the summary and file list."""
    root = Path(out_root) if out_root is not None else output_root()
    directory = root / (cfg.output.directory or cfg.name)
    directory.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    do_plot = cfg.output.plot if plot is None else plot
    result = None

    if cfg.kind == "spectrum":
        text, summary = spectrum_tables(cfg)
        _write(directory / "spectrum.csv", text, files)
    else:
        result = simulate(cfg)
        _write(directory / "timeseries.csv", timeseries_text(result), files)
        summary = simulation_summary(cfg, result)
        if cfg.analysis.convergence_check:
            summary["convergence"] = convergence_report(cfg, result)
        else:
            summary["convergence"] = {"checked": False}
        if result.spacetime is not None:
            _write(directory / "spacetime.csv", _map_text(result, result.spacetime), files)
            _write(directory / "spin_wave.csv", _map_text(result, result.spin_map), files)
        if "interference" in summary:
            _write(directory / "fringe.csv", _csv_text(("delta_phi_rad", "integrated_intensity"), summary["interference"]["fringe"]), files)
        if cfg.analysis.beat:
            port = analysis.combine(result.t, result.fw_field, result.bw_field, 0.0, cfg.bw.detuning_mhz * MHZ)
            _write(directory / "combined.csv", _csv_text(("t_us", "port_plus", "port_minus"), zip(port.t / US, port.port_plus, port.port_minus)), files)

    summary["config"] = cfg.to_dict()
    _write(directory / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n", files)

    if do_plot:
        try:
            from .plotting import plot_scenario

            files.extend(plot_scenario(cfg, summary, result, directory))
        except Exception as exc:  # plotting never gates data emission
            logger.warning("plotting failed for %s: %s", cfg.name, exc)
    return ScenarioOutcome(cfg, summary, directory, files, result)


def run_scenario(name_or_path: str, out_root: Path | None = None, plot: bool | None = None) -> ScenarioOutcome:
    return run_config(resolve(name_or_path), out_root, plot)


# -- sweeps -------------------------------------------------------------------


def _sweep_row(args) -> dict:
    cfg, parameter, value = args
    cfg = cfg.replace_path(parameter, value)
    result = simulate(cfg)
    led = result.ledger
    norm = led.supplied if led.supplied > 0 else 1.0
    row = {"value": value}
    row["efficiency"] = storage_efficiency(result) if (led.input > 0 and result.dark is not None) else float("nan")
    try:
        row["r_fw"], row["r_bw"] = analysis.splitting_ratio(result)
    except ValueError:
        row["r_fw"] = row["r_bw"] = float("nan")
    for key in ("leaked", "retrieved_fw", "retrieved_bw", "dissipated", "residual"):
        row[key] = getattr(led, key) / norm
    row["closure_error"] = led.closure_error
    return row


SWEEP_COLUMNS = ("value", "efficiency", "r_fw", "r_bw", "leaked", "retrieved_fw", "retrieved_bw", "dissipated", "residual", "closure_error")


def sweep(cfg: ScenarioConfig, parameter: str, values: Sequence[float], jobs: int = 1) -> list[dict]:
    """One summary row per parameter value, in the order given."""
    # validates the path even when there are no values
    cfg.replace_path(parameter, _current(cfg, parameter))
    tasks = [(cfg, parameter, v) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]


def _current(cfg: ScenarioConfig, parameter: str):
    section, _, key = parameter.partition(".")
    value = getattr(getattr(cfg, section, None), key, None) if key else None
    if value is None:
        raise ConfigError(f"unknown parameter path {parameter!r}; expected '<section>.<key>'")
    return value


def write_sweep(cfg: ScenarioConfig, parameter: str, rows: list[dict], out_root: Path | None = None) -> Path:
    root = Path(out_root) if out_root is not None else output_root()
    directory = root / (cfg.output.directory or cfg.name)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"sweep_{parameter.replace('.', '_')}.csv"
    path.write_text(_csv_text(SWEEP_COLUMNS, ([float(r[c]) for c in SWEEP_COLUMNS] for r in rows)), encoding="utf-8")
    return path
