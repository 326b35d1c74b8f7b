"""Phase matching, splitting metrics, two-output interference and beat analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.ndimage import uniform_filter1d
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .solver import SimResult


# --------------------------------------------------------------------------
# phase matching
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseMatch:
    k_s: np.ndarray
    k_fwc: np.ndarray
    k_rc: np.ndarray
    k_spin: np.ndarray
    k_out: np.ndarray
    omega_s: float
    omega_fwc: float
    omega_rc: float
    omega_spin: float
    omega_out: float
    angle_out_signal: float


def _sum3(a: float, b: float, c: float) -> float:
    return math.fsum((a, b, c))


def phase_match(k_s, k_fwc, k_rc, omega_s: float, omega_fwc: float, omega_rc: float) -> PhaseMatch:
    """Spin-wave and output wave vector / frequency for storage then retrieval.

    Storage with the forward control writes ``k_spin = k_s - k_fwc`` and
    ``omega_spin = omega_s - omega_fwc``; a retrieval control adds its own
    wave vector and frequency. The output is the exactly rounded value of
    the three-term sum, so ``k_rc == k_fwc`` returns ``k_s`` and
    ``k_rc == -k_s`` returns ``-k_fwc`` bit for bit.
    """
    k_s = np.asarray(k_s, dtype=float)
    k_fwc = np.asarray(k_fwc, dtype=float)
    k_rc = np.asarray(k_rc, dtype=float)
    if not (k_s.shape == k_fwc.shape == k_rc.shape == (3,)):
        raise ValueError("wave vectors must be 3-vectors")
    k_spin = k_s - k_fwc
    k_out = np.array([_sum3(k_s[i], -k_fwc[i], k_rc[i]) for i in range(3)])
    omega_spin = omega_s - omega_fwc
    omega_out = _sum3(omega_s, -omega_fwc, omega_rc)

    ns, no = np.linalg.norm(k_s), np.linalg.norm(k_out)
    if ns == 0 or no == 0:
        angle = float("nan")
    else:
        angle = float(np.arccos(np.clip(np.dot(k_s, k_out) / (ns * no), -1.0, 1.0)))
    return PhaseMatch(k_s, k_fwc, k_rc, k_spin, k_out, omega_s, omega_fwc, omega_rc, omega_spin, omega_out, angle)


def wave_vector(k: float, angle: float) -> np.ndarray:
    """Wave vector of magnitude ``k`` at ``angle`` (rad) from +z in the x-z plane."""
    return np.array([k * math.sin(angle), 0.0, k * math.cos(angle)])


# --------------------------------------------------------------------------
# splitting and pulse metrics
# --------------------------------------------------------------------------


def splitting_ratio(result: SimResult) -> tuple[float, float]:
    """Fractions of the retrieved energy in the forward and backward outputs."""
    rf, rb = result.ledger.retrieved_fw, result.ledger.retrieved_bw
    total = rf + rb
    if not total > 0:
        raise ValueError("splitting ratio undefined: nothing was retrieved")
    return rf / total, rb / total


def pulse_duration(t: np.ndarray, intensity: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked trace (linear interpolation)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(intensity, dtype=float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    if not half > 0:
        raise ValueError("trace has no signal")
    left = np.nonzero(y[:k] < half)[0]
    right = np.nonzero(y[k:] < half)[0]
    if len(left) == 0 or len(right) == 0:
        raise ValueError("pulse is truncated by the trace window")
    i = left[-1]
    j = k + right[0]
    t_lo = np.interp(half, [y[i], y[i + 1]], [t[i], t[i + 1]])
    t_hi = np.interp(half, [y[j], y[j - 1]], [t[j], t[j - 1]])
    return float(t_hi - t_lo)


# --------------------------------------------------------------------------
# interference
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CombinedOutput:
    """Both ports of the 50:50 combiner behind the atomic beam splitter."""

    t: np.ndarray
    port_plus: np.ndarray
    port_minus: np.ndarray


def combine(t, fw_trace, bw_trace, delta_phi: float = 0.0, delta: float = 0.0) -> CombinedOutput:
    """Superpose the two output fields on a lossless 50:50 beam splitter.

    ``port_plus = |e_f + exp(i delta_phi) e_b exp(-i delta t)|^2 / 2``;
    ``port_minus`` carries the opposite sign. The ``exp(-i delta t)`` factor
    restores the carrier offset of the detuned backward output.
    """
    t = np.asarray(t, dtype=float)
    ef = np.asarray(fw_trace, dtype=complex)
    eb = np.asarray(bw_trace, dtype=complex)
    if not (t.shape == ef.shape == eb.shape):
        raise ValueError(f"traces do not share a time base: {t.shape}, {ef.shape}, {eb.shape}")
    rotated = np.exp(1j * delta_phi) * eb * np.exp(-1j * delta * t)
    plus = 0.5 * np.abs(ef + rotated) ** 2
    minus = 0.5 * np.abs(ef - rotated) ** 2
    return CombinedOutput(t, plus, minus)


@dataclass(frozen=True)
class FringeFit:
    offset: float
    amplitude: float
    phase: float

    @property
    def visibility(self) -> float:
        return self.amplitude / self.offset

    def __call__(self, phi):
        return self.offset + self.amplitude * np.cos(np.asarray(phi) + self.phase)


@dataclass(frozen=True)
class InterferenceResult:
    fringe: list[tuple[float, float]]
    visibility: float
    fringe_phase: float
    beat_period: float | None = None


def fit_fringe(fringe: Sequence[tuple[float, float]]) -> FringeFit:
    """Least-squares fit ``I(phi) = A + B cos(phi + phi0)`` with ``B >= 0``.

    The phase settings must cover a full turn.
    """
    data = np.asarray(fringe, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 3:
        raise ValueError("fringe needs at least three (phase, intensity) pairs")
    phi, inten = data[:, 0], data[:, 1]
    order = np.sort(np.mod(phi, 2 * np.pi))
    gaps = np.diff(np.concatenate((order, [order[0] + 2 * np.pi])))
    if gaps.max() > np.pi:
        raise ValueError("fringe phase settings must span a full 2*pi turn")
    design = np.column_stack((np.ones_like(phi), np.cos(phi), np.sin(phi)))
    (a0, ac, as_), *_ = np.linalg.lstsq(design, inten, rcond=None)
    if not a0 > 0:
        raise ValueError(f"degenerate fringe fit (offset {a0:.3g} <= 0)")
    return FringeFit(float(a0), float(np.hypot(ac, as_)), float(np.arctan2(-as_, ac)))


def visibility(fringe: Sequence[tuple[float, float]]) -> float:
    """Fringe visibility ``|B|/A`` from a sinusoid fit, clipped to [0, 1]."""
    return float(min(fit_fringe(fringe).visibility, 1.0))


def integrate_window(t: np.ndarray, y: np.ndarray, window: tuple[float, float] | None) -> float:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (t >= lo) & (t <= hi)
        t, y = t[keep], y[keep]
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def fringe_scan(
    t,
    fw_trace,
    bw_trace,
    phases: Sequence[float] | int = 12,
    delta: float = 0.0,
    window: tuple[float, float] | None = None,
) -> list[tuple[float, float]]:
    """Integrated ``port_plus`` energy over ``window`` at each combiner phase."""
    if isinstance(phases, (int, np.integer)):
        phases = 2 * np.pi * np.arange(phases) / phases
    return [
        (float(p), integrate_window(t, combine(t, fw_trace, bw_trace, p, delta).port_plus, window))
        for p in phases
    ]


def interference(
    result: SimResult,
    phases: Sequence[float] | int = 12,
    window: tuple[float, float] | None = None,
    delta: float | None = None,
) -> InterferenceResult:
    """Fringe, visibility and (for a detuned backward output) beat period."""
    if window is None and result.t_retrieve is not None:
        window = result.retrieval_window()
    if delta is None:
        delta = float(result.meta.get("delta", 0.0))
    fringe = fringe_scan(result.t, result.fw_field, result.bw_field, phases, delta, window)
    fit = fit_fringe(fringe)
    period = None
    if delta != 0.0:
        port = combine(result.t, result.fw_field, result.bw_field, 0.0, delta)
        sel = slice(None)
        if window is not None:
            sel = (result.t >= window[0]) & (result.t <= window[1])
        try:
            period = beat_period(port.t[sel], port.port_plus[sel])
        except NoOscillation:
            period = None
    return InterferenceResult(fringe, min(fit.visibility, 1.0), fit.phase, period)


# --------------------------------------------------------------------------
# beating
# --------------------------------------------------------------------------


# fit only where |d ln I / dt| is below this fraction of the beat frequency
SLOW_ENVELOPE = 0.5
# the beat must remove at least this share of the envelope-only residual
MIN_EXPLAINED = 0.5


class NoOscillation(ValueError):
    """No beat was found in the trace."""


def _uniform(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    steps = np.diff(t)
    if np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        return t, y
    # median, not minimum: near-duplicate samples must not blow up the grid
    tu = np.linspace(t[0], t[-1], int(round((t[-1] - t[0]) / np.median(steps))) + 1)
    return tu, np.interp(tu, t, y)


def beat_period(t, intensity, min_prominence: float = 0.05) -> float:
    """Dominant oscillation period of an intensity trace, in the units of ``t``.

    A first estimate comes from the spacing of prominent peaks, or from a
    windowed spectrum when fewer than three peaks stand out by
    ``min_prominence`` (relative to the trace maximum). The period is then
    refined by fitting ``P(t) * (1 + a cos(wt) + b sin(wt))``, with ``P`` a
    smooth spline envelope, over the part of the trace that carries signal
    and whose envelope varies slowly compared with the beat. Fitting the
    envelope avoids the frequency bias a moving-average detrend picks up
    from a curved pulse shape.

    Raises :class:`NoOscillation` when fewer than two periods fit in that
    region, the modulation depth is below ``min_prominence``, or the beat
    explains less than half of what an envelope-only fit leaves over.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if t.shape != y.shape or len(t) < 8:
        raise ValueError("need matching t / intensity arrays with at least 8 samples")
    t, y = _uniform(t, y)
    dt = t[1] - t[0]
    scale = float(np.max(np.abs(y)))
    if scale == 0:
        raise NoOscillation("no oscillation: trace is identically zero")

    peaks, _ = find_peaks(y, prominence=min_prominence * scale)
    if len(peaks) >= 3:
        guess = float(np.median(np.diff(t[peaks])))
    else:
        guess = _spectral_period(t, y, min_prominence)

    # fit where there is signal and the envelope changes slowly on the beat scale;
    # a retrieval turn-on spike would otherwise dominate the fit
    width = max(3, int(round(guess / dt)))
    mean = uniform_filter1d(y, width, mode="nearest")
    rate = np.abs(np.gradient(np.log(np.maximum(mean, 1e-300 * scale)), dt))
    sel = _signal_region((mean > min_prominence * float(mean.max())) & (rate < SLOW_ENVELOPE * 2.0 * np.pi / guess))
    ts, ys = t[sel], y[sel]
    if len(ts) < 8 or ts[-1] - ts[0] < 2.0 * guess:
        raise NoOscillation("no oscillation: fewer than two periods inside the signal")

    period, depth, explained = _fit_modulation(ts, ys, mean[sel], guess)
    if not (period > 0 and depth >= min_prominence and explained >= MIN_EXPLAINED):
        raise NoOscillation(f"no oscillation detected (modulation depth {depth:.3g}, explained fraction {explained:.3g})")
    if ts[-1] - ts[0] < 2.0 * period:
        raise NoOscillation("no oscillation: fewer than two periods inside the signal")
    return period


def _signal_region(mask: np.ndarray) -> np.ndarray:
    """Longest contiguous run of ``True`` in ``mask``."""
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    starts, stops = idx[::2], idx[1::2]
    out = np.zeros_like(mask, dtype=bool)
    if len(starts):
        k = int(np.argmax(stops - starts))
        out[starts[k] : stops[k]] = True
    return out


def _fit_modulation(t: np.ndarray, y: np.ndarray, mean: np.ndarray, guess: float) -> tuple[float, float, float]:
    """Period, modulation depth and the share of the envelope-only residual the beat explains."""
    # cubic B-spline envelope with knots two guessed periods apart
    t0 = t - t[0]
    span = t0[-1]
    n_int = max(1, int(np.ceil(span / (2.0 * guess))))
    inner = np.linspace(0.0, span, n_int + 1)
    knots = np.concatenate(([0.0] * 3, inner, [span] * 3))
    basis = BSpline.design_matrix(np.clip(t0, 0.0, span), knots, 3).toarray()

    w0 = 2.0 * np.pi / guess
    rel = y / mean - 1.0
    cs = np.column_stack((np.cos(w0 * t0), np.sin(w0 * t0)))
    (a0, b0), *_ = np.linalg.lstsq(cs, rel, rcond=None)

    def resid(p):
        w, a, b = p
        design = basis * (1.0 + a * np.cos(w * t0) + b * np.sin(w * t0))[:, None]
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return design @ coef - y

    fit = least_squares(resid, [w0, a0, b0], x_scale=[0.01 * w0, 0.1, 0.1], bounds=([0.5 * w0, -2, -2], [2.0 * w0, 2, 2]))
    w, a, b = fit.x
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    rss_env = float(np.sum((basis @ coef - y) ** 2))
    explained = 1.0 - float(np.sum(fit.fun**2)) / rss_env if rss_env > 0 else 0.0
    return float(2.0 * np.pi / w), float(np.hypot(a, b)), explained


def _spectral_period(t: np.ndarray, y: np.ndarray, min_prominence: float) -> float:
    dt = t[1] - t[0]
    span = t[-1] - t[0]
    yy = (y - y.mean()) * np.hanning(len(y))
    nfft = 1 << int(np.ceil(np.log2(8 * len(y))))
    amp = np.abs(np.fft.rfft(yy, nfft))
    freq = np.fft.rfftfreq(nfft, dt)
    allowed = freq >= 2.0 / span
    if not allowed.any():
        raise NoOscillation("no oscillation: trace too short for two periods")
    peaks, _ = find_peaks(np.where(allowed, amp, 0.0), prominence=min_prominence * amp[allowed].max())
    peaks = peaks[allowed[peaks]]
    if len(peaks) == 0:
        raise NoOscillation("no oscillation detected")
    best = peaks[np.argmax(amp[peaks])]
    return float(1.0 / freq[best])


# --------------------------------------------------------------------------
# dual-rail state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DualRailState:
    theta: float
    delta_phi: float
    amp_fw: complex
    amp_bw: complex

    def __iter__(self):
        return iter((self.theta, self.delta_phi, self.amp_fw, self.amp_bw))


def dual_rail_state(omega_fw: float, omega_bw: float, phi1: float, phi2: float) -> DualRailState:
    """Single-excitation amplitudes ``sin(theta) |1,0> + exp(i dphi) cos(theta) |0,1>``.

    ``tan(theta) = omega_fw / omega_bw`` and ``dphi = phi2 - phi1``.
    """
    if omega_fw == 0 and omega_bw == 0:
        raise ValueError("dual-rail state undefined when both control Rabi frequencies are zero")
    theta = math.atan2(omega_fw, omega_bw)
    dphi = phi2 - phi1
    return DualRailState(theta, dphi, complex(math.sin(theta)), complex(np.exp(1j * dphi) * math.cos(theta)))
