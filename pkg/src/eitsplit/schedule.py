"""Control-field programs and the input probe envelope."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def smoothstep(x):
    """``3x^2 - 2x^3`` clipped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class Segment:
    """One "on" window of a control laser.

    ``ramp`` is the smoothstep duration in seconds; 0 means instant switching.
    Ramps sit inside the window, so the field is exactly zero outside
    ``[t_start, t_end]`` and reaches ``amplitude`` at ``t_start + ramp``.
    """

    t_start: float
    t_end: float
    amplitude: float
    phase: float = 0.0
    ramp: float = 0.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"segment must have t_end > t_start, got [{self.t_start}, {self.t_end}]")
        if self.amplitude < 0:
            raise ValueError(f"segment amplitude must be >= 0, got {self.amplitude}")
        if self.ramp < 0:
            raise ValueError(f"ramp duration must be >= 0, got {self.ramp}")

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_start) & (t <= self.t_end)
        if self.ramp > 0:
            up = smoothstep((t - self.t_start) / self.ramp)
            down = smoothstep((self.t_end - t) / self.ramp)
            shape = np.minimum(up, down)
        else:
            shape = np.ones_like(t)
        return np.where(inside, self.amplitude * shape, 0.0)


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise program of one control beam.

    ``detuning`` (rad/s) is the offset of this control from the |s>-|e>
    transition. Segments must be time-ordered and non-overlapping.
    """

    segments: tuple[Segment, ...] = ()
    detuning: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for a, b in zip(self.segments, self.segments[1:]):
            if b.t_start < a.t_end:
                raise ValueError("control segments must be time-ordered and non-overlapping")

    @classmethod
    def off(cls) -> "ControlSchedule":
        return cls(())

    def with_phase_offset(self, alpha: float) -> "ControlSchedule":
        segs = tuple(
            Segment(s.t_start, s.t_end, s.amplitude, s.phase + alpha, s.ramp) for s in self.segments
        )
        return ControlSchedule(segs, self.detuning)

    @property
    def peak(self) -> float:
        return max((s.amplitude for s in self.segments), default=0.0)

    def on_intervals(self) -> list[tuple[float, float]]:
        return [(s.t_start, s.t_end) for s in self.segments if s.amplitude > 0]

    def __call__(self, t):
        return evaluate_control(self, t)


def evaluate_control(schedule: ControlSchedule, t):
    """Complex Rabi frequency ``amplitude(t) * exp(i phase(t))`` at time(s) ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for seg in schedule.segments:
        out = out + seg.envelope(t) * np.exp(1j * seg.phase)
    return out[()] if out.ndim == 0 else out


def merged_on_intervals(schedules: Sequence[ControlSchedule]) -> list[tuple[float, float]]:
    """Union of the "on" windows of several schedules, sorted."""
    spans = sorted(iv for sch in schedules for iv in sch.on_intervals())
    merged: list[list[float]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def dark_interval(schedules: Sequence[ControlSchedule], t_end: float) -> tuple[float, float | None] | None:
    """Storage window during which every control is off.

    Returns ``(t_dark, t_retrieve)``. If the first control window starts
    after ``t = 0`` the storage window is ``[0, start)``; otherwise it is
    the first gap after the first window. ``t_retrieve`` is ``None`` when
    no control comes back on before ``t_end``. Returns ``None`` when the
    controls never switch off within the run.
    """
    spans = merged_on_intervals(schedules)
    if not spans:
        return (0.0, None)
    if spans[0][0] > 0:
        return (0.0, spans[0][0])
    first_off = spans[0][1]
    if first_off >= t_end:
        return None
    nxt = spans[1][0] if len(spans) > 1 else None
    if nxt is not None and nxt >= t_end:
        nxt = None
    return (first_off, nxt)


@dataclass(frozen=True)
class ProbePulse:
    """Gaussian probe envelope with intensity FWHM ``fwhm`` (s)."""

    peak_amplitude: float = 1.0
    center: float = 1.5e-6
    fwhm: float = 1.0e-6
    shape: str = field(default="gaussian")

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError(f"probe fwhm must be > 0, got {self.fwhm}")
        if self.shape != "gaussian":
            raise ValueError(f"unsupported probe shape {self.shape!r}")

    @property
    def energy(self) -> float:
        """Closed-form ``integral |E(t)|^2 dt``."""
        return self.peak_amplitude**2 * self.fwhm * np.sqrt(np.pi / (4.0 * np.log(2.0)))

    def max_abs_on(self, t0: float, t1: float) -> float:
        """Largest envelope magnitude over ``[t0, t1]``."""
        tc = min(max(self.center, t0), t1)
        return abs(complex(evaluate_probe(self, tc)))

    def __call__(self, t):
        return evaluate_probe(self, t)


def evaluate_probe(pulse: ProbePulse, t):
    t = np.asarray(t, dtype=float)
    # intensity FWHM == fwhm, i.e. amplitude drops to 1/sqrt(2) at +-fwhm/2
    env = pulse.peak_amplitude * np.exp(-2.0 * np.log(2.0) * ((t - pulse.center) / pulse.fwhm) ** 2)
    out = env.astype(complex)
    return out[()] if out.ndim == 0 else out
