"""SVG figures for scenario outputs. Optional: needs matplotlib."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import MHZ, US  # noqa: E402

# stable SVG ids and no timestamp, so reruns produce identical files
plt.rcParams["svg.hashsalt"] = "eitsplit"
_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_traces(result, title: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    t = result.t / US
    ax.plot(t, result.fw_out, color="tab:blue", label="FW output")
    ax.plot(t, result.bw_out, color="tab:green", label="BW output")
    ax.plot(t, np.abs(result.probe_field) ** 2, color="0.6", ls=":", label="input")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("intensity (input peak = 1)")
    ax2 = ax.twinx()
    ax2.plot(t, np.abs(result.control_fw) / MHZ, color="tab:red", lw=2, alpha=0.6)
    ax2.plot(t, np.abs(result.control_bw) / MHZ, color="tab:orange", lw=2, alpha=0.6)
    ax2.set_ylabel("control Rabi / 2pi (MHz)")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_spacetime(result, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    extent = (result.map_t[0] / US, result.map_t[-1] / US, 0.0, result.z[-1] * 1e3)
    ax.imshow(result.spacetime.T, origin="lower", aspect="auto", extent=extent, cmap="viridis")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("z (mm)")
    ax.set_title("|e_f|^2 + |e_b|^2")
    return _save(fig, path)


def plot_fringe(summary: dict, path: Path) -> Path:
    data = np.asarray(summary["interference"]["fringe"])
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(data[:, 0], data[:, 1], "o", color="tab:purple")
    ax.set_xlabel("combiner phase (rad)")
    ax.set_ylabel("integrated output")
    ax.set_title(f"visibility {summary['interference']['visibility']:.4f}")
    return _save(fig, path)


def plot_spectrum(csv_path: Path, path: Path) -> Path:
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    ax.plot(data[:, 0], data[:, 1], label="two-level")
    ax.plot(data[:, 0], data[:, 2], label="EIT")
    ax.set_xlabel("probe detuning / 2pi (MHz)")
    ax.set_ylabel("transmission")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_scenario(cfg, summary: dict, result, directory: Path) -> list[Path]:
    directory = Path(directory)
    if cfg.kind == "spectrum":
        return [plot_spectrum(directory / "spectrum.csv", directory / f"{cfg.name}.svg")]
    files = [plot_traces(result, cfg.name, directory / f"{cfg.name}.svg")]
    if result.spacetime is not None:
        files.append(plot_spacetime(result, directory / f"{cfg.name}_spacetime.svg"))
    if "interference" in summary:
        files.append(plot_fringe(summary, directory / f"{cfg.name}_fringe.svg"))
    return files
