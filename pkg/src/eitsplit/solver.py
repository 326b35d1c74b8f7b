"""1+1D Maxwell-Bloch integrator for forward/backward retrieval from one spin wave.

Model (weak probe, all atoms in |g>, co-rotating envelopes)::

    d/dz e_f =  i k p_f                 -d/dz e_b = i k p_b
    d/dt p_f = -(G/2) p_f      + i k e_f + i (W_f/2) s
    d/dt p_b = -(G/2 + i D) p_b + i k e_b + i (W_b/2) s
    d/dt s   = -g_gs s + i (W_f*/2) p_f + i (W_b*/2) p_b

with ``k**2 = od * G / (4 L)``. Light transit through the medium is ~30 ps,
so the field equations are solved quasi-statically: at every Runge-Kutta
stage ``e_f`` is integrated from the entrance face (``e_f(0) = probe``) and
``e_b`` from the exit face (``e_b(L) = 0``). The backward envelope is
referenced to the phase-matched backward output carrier, which puts the
control detuning ``D`` on ``p_b``.

The two coupling constants are chosen equal. Only their product affects
the output fields; equal constants make ``|e|^2`` (flux) and
``|p|^2 + |s|^2`` (excitation per unit length) share one energy unit, so
the run can keep an energy ledger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .medium import MediumParams, coupling_product
from .schedule import ControlSchedule, ProbePulse, dark_interval, evaluate_control

logger = logging.getLogger(__name__)

STABILITY_LIMIT = 0.1


class StabilityError(ValueError):
    """The time step violates the integrator's stability contract."""


class NumericalError(RuntimeError):
    """The state became non-finite during integration."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t = {t:.6e} s)")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid: ``nz`` points over [0, L], ``nt`` over [0, t_end]."""

    nz: int = 256
    nt: int = 8001
    t_end: float = 8.0e-6

    def __post_init__(self):
        if self.nz < 64:
            raise ValueError(f"nz must be >= 64, got {self.nz}")
        if self.nt < 2:
            raise ValueError(f"nt must be >= 2, got {self.nt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")

    @classmethod
    def from_step(cls, t_end: float, dt: float, nz: int = 256) -> "Grid":
        return cls(nz=nz, nt=int(round(t_end / dt)) + 1, t_end=t_end)

    @property
    def dt(self) -> float:
        return self.t_end / (self.nt - 1)

    def dz(self, length: float) -> float:
        return length / (self.nz - 1)

    def refined(self) -> "Grid":
        """Same extent with ``dz`` and ``dt`` halved."""
        return Grid(nz=2 * self.nz - 1, nt=2 * self.nt - 1, t_end=self.t_end)


@dataclass
class SimState:
    e_f: np.ndarray
    e_b: np.ndarray
    p_f: np.ndarray
    p_b: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class EnergyLedger:
    """Energy bookkeeping in envelope units (flux x time).

    ``initial`` is excitation present at t = 0 (from a pre-loaded spin
    wave) and ``residual`` is excitation still in the medium at the end.
    """

    input: float
    leaked: float
    retrieved_fw: float
    retrieved_bw: float
    dissipated: float
    initial: float = 0.0
    residual: float = 0.0

    @property
    def supplied(self) -> float:
        return self.input + self.initial

    @property
    def accounted(self) -> float:
        return self.leaked + self.retrieved_fw + self.retrieved_bw + self.dissipated + self.residual

    @property
    def closure_error(self) -> float:
        """Relative mismatch between supplied and accounted energy."""
        if self.supplied == 0:
            return 0.0 if self.accounted == 0 else float("inf")
        return abs(self.supplied - self.accounted) / self.supplied

    def as_dict(self) -> dict:
        return {
            "input": self.input,
            "initial": self.initial,
            "leaked": self.leaked,
            "retrieved_fw": self.retrieved_fw,
            "retrieved_bw": self.retrieved_bw,
            "dissipated": self.dissipated,
            "residual": self.residual,
            "closure_error": self.closure_error,
        }


@dataclass
class SimResult:
    t: np.ndarray
    z: np.ndarray
    fw_field: np.ndarray
    bw_field: np.ndarray
    probe_field: np.ndarray
    control_fw: np.ndarray
    control_bw: np.ndarray
    ledger: EnergyLedger
    dark: tuple[float, float | None] | None
    final: SimState
    map_t: np.ndarray | None = None
    spacetime: np.ndarray | None = None
    spin_map: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def fw_out(self) -> np.ndarray:
        return np.abs(self.fw_field) ** 2

    @property
    def bw_out(self) -> np.ndarray:
        return np.abs(self.bw_field) ** 2

    @property
    def fw_phase(self) -> np.ndarray:
        return np.angle(self.fw_field)

    @property
    def bw_phase(self) -> np.ndarray:
        return np.angle(self.bw_field)

    @property
    def t_retrieve(self) -> float | None:
        return None if self.dark is None else self.dark[1]

    def retrieval_window(self) -> tuple[float, float]:
        if self.t_retrieve is None:
            raise ValueError("run has no retrieval window")
        return (self.t_retrieve, float(self.t[-1]))


def check_stability(medium: MediumParams, fw: ControlSchedule, bw: ControlSchedule, grid: Grid) -> float:
    """Return ``dt * max rate`` or raise :class:`StabilityError` if it is >= 0.1."""
    rate = max(medium.half_gamma, 0.5 * fw.peak, 0.5 * bw.peak, abs(fw.detuning), abs(bw.detuning))
    score = grid.dt * rate
    if score >= STABILITY_LIMIT:
        raise StabilityError(
            f"dt * max(G/2, |W|/2, |D|) = {score:.3g} >= {STABILITY_LIMIT}; reduce dt below "
            f"{STABILITY_LIMIT / rate:.3g} s"
        )
    return score


def _cumtrapz(y: np.ndarray, dz: float) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * dz * (y[1:] + y[:-1]), out=out[1:])
    return out


def _trapz(y: np.ndarray, dz: float) -> float:
    return float(dz * (y.sum() - 0.5 * (y[0] + y[-1])))


def run(
    medium: MediumParams,
    fw: ControlSchedule,
    bw: ControlSchedule,
    probe: ProbePulse | None,
    grid: Grid,
    *,
    initial_spin_wave: np.ndarray | None = None,
    phase_mismatch: float = 0.0,
    map_every: int = 0,
    dark_skip: bool = True,
    dark_tol: float = 1e-10,
) -> SimResult:
    """Integrate the forward/backward Maxwell-Bloch system.

    Parameters
    ----------
    probe
        Input envelope at ``z = 0``; ``None`` for no input light.
    initial_spin_wave
        Optional spin-wave amplitude on the ``nz`` grid at ``t = 0``.
    phase_mismatch
        Residual wave-vector mismatch of the backward channel, rad/m.
        Enters as ``exp(i dk z)`` on the backward coupling.
    map_every
        Store ``|e_f|^2 + |e_b|^2`` and ``|s|^2`` every this many steps.
    dark_skip
        Jump across the storage window once the optical polarization has
        decayed below ``dark_tol`` relative to the spin wave. The spin wave
        evolves as ``exp(-gamma_gs t)`` alone there, so the jump is exact
        up to the discarded polarization (its energy is booked as dissipated).
    """
    if fw.detuning != 0.0:
        raise ValueError("forward control must be resonant; put the detuning on the backward control")
    check_stability(medium, fw, bw, grid)

    nz, nt, dt = grid.nz, grid.nt, grid.dt
    z = np.linspace(0.0, medium.length, nz)
    dz = grid.dz(medium.length)
    kappa = np.sqrt(coupling_product(medium))
    hg = medium.half_gamma
    gs = medium.gamma_gs
    dec_b = hg + 1j * bw.detuning
    mis = np.exp(1j * phase_mismatch * z) if phase_mismatch else None

    # controls and probe on the half-step grid used by the RK4 stages
    th = 0.5 * dt * np.arange(2 * (nt - 1) + 1)
    half_f = 0.5 * np.atleast_1d(evaluate_control(fw, th))
    half_b = 0.5 * np.atleast_1d(evaluate_control(bw, th))
    e_in = np.atleast_1d(probe(th)) if probe is not None else np.zeros(th.shape, complex)

    y = np.zeros((3, nz), dtype=complex)
    if initial_spin_wave is not None:
        s0 = np.asarray(initial_spin_wave, dtype=complex)
        if s0.shape != (nz,):
            raise ValueError(f"initial_spin_wave must have shape ({nz},), got {s0.shape}")
        y[2] = s0

    def solve_fields(pf, pb, ein):
        ef = ein + 1j * kappa * _cumtrapz(pf, dz)
        eb = 1j * kappa * _cumtrapz(pb[::-1], dz)[::-1]
        return ef, eb

    def rhs(yy, k):
        pf, pb, s = yy
        ef, eb = solve_fields(pf, pb, e_in[k])
        of, ob = half_f[k], half_b[k]
        out = np.empty_like(yy)
        sb = s if mis is None else mis * s
        out[0] = -hg * pf + 1j * kappa * ef + 1j * of * s
        out[1] = -dec_b * pb + 1j * kappa * eb + 1j * ob * sb
        cb = np.conj(ob) * pb if mis is None else np.conj(ob * mis) * pb
        out[2] = -gs * s + 1j * np.conj(of) * pf + 1j * cb
        return out, ef, eb

    def loss_rate(yy):
        return medium.gamma * (_trapz(np.abs(yy[0]) ** 2, dz) + _trapz(np.abs(yy[1]) ** 2, dz)) + 2.0 * gs * _trapz(
            np.abs(yy[2]) ** 2, dz
        )

    def stored(yy):
        return sum(_trapz(np.abs(row) ** 2, dz) for row in yy)

    storage = dark_interval([fw, bw], grid.t_end)
    t_next_on = None
    if storage is not None:
        t_next_on = storage[1] if storage[1] is not None else grid.t_end
    probe_peak = abs(probe.peak_amplitude) if probe is not None else 0.0

    idx: list[int] = []
    out_f: list[complex] = []
    out_b: list[complex] = []
    map_rows: list[np.ndarray] = []
    spin_rows: list[np.ndarray] = []
    map_idx: list[int] = []

    initial = stored(y)
    dissipated = 0.0
    q_prev = loss_rate(y)
    i = 0
    k1, ef, eb = rhs(y, 0)
    while True:
        idx.append(i)
        out_f.append(ef[-1])
        out_b.append(eb[0])
        if map_every and i % map_every == 0:
            map_rows.append(np.abs(ef) ** 2 + np.abs(eb) ** 2)
            spin_rows.append(np.abs(y[2]) ** 2)
            map_idx.append(i)
        if i == nt - 1:
            break

        t = i * dt
        if dark_skip and storage is not None and storage[0] <= t < t_next_on:
            if t_next_on >= grid.t_end:
                jump = nt - 1 - i
            else:
                # land strictly before the next turn-on so instant ramps are not skipped
                jump = int(np.ceil((t_next_on - t) / dt - 1e-9)) - 1
            s_scale = np.max(np.abs(y[2]))
            quiet_light = probe is None or probe.max_abs_on(t, t_next_on) <= dark_tol * max(probe_peak, 1e-300)
            quiet_atoms = np.max(np.abs(y[:2])) <= dark_tol * s_scale if s_scale > 0 else not np.any(y[:2])
            if jump > 1 and quiet_light and quiet_atoms:
                span = jump * dt
                dissipated += _trapz(np.abs(y[0]) ** 2 + np.abs(y[1]) ** 2, dz)
                dissipated += _trapz(np.abs(y[2]) ** 2, dz) * (1.0 - np.exp(-2.0 * gs * span))
                y[:2] = 0.0
                y[2] *= np.exp(-gs * span)
                i += jump
                q_prev = loss_rate(y)
                k1, ef, eb = rhs(y, 2 * i)
                logger.debug("dark skip %.3e s -> %.3e s", t, i * dt)
                continue

        k = 2 * i
        k2, _, _ = rhs(y + 0.5 * dt * k1, k + 1)
        k3, _, _ = rhs(y + 0.5 * dt * k2, k + 1)
        k4, _, _ = rhs(y + dt * k3, k + 2)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        i += 1
        if not np.isfinite(y).all():
            raise NumericalError(i, i * dt)
        q = loss_rate(y)
        dissipated += 0.5 * dt * (q_prev + q)
        q_prev = q
        k1, ef, eb = rhs(y, 2 * i)

    idx_arr = np.asarray(idx)
    t_arr = idx_arr * dt
    fw_field = np.asarray(out_f)
    bw_field = np.asarray(out_b)
    probe_field = e_in[2 * idx_arr]

    e_input = _time_integral(np.abs(probe_field) ** 2, t_arr)
    t_ret = storage[1] if storage is not None else None
    fw_before, fw_after = _split_energy(np.abs(fw_field) ** 2, t_arr, t_ret)
    bw_before, bw_after = _split_energy(np.abs(bw_field) ** 2, t_arr, t_ret)
    ledger = EnergyLedger(
        input=e_input,
        leaked=fw_before + bw_before,
        retrieved_fw=fw_after,
        retrieved_bw=bw_after,
        dissipated=dissipated,
        initial=initial,
        residual=stored(y),
    )
    final = SimState(e_f=ef, e_b=eb, p_f=y[0].copy(), p_b=y[1].copy(), s=y[2].copy())
    result = SimResult(
        t=t_arr,
        z=z,
        fw_field=fw_field,
        bw_field=bw_field,
        probe_field=probe_field,
        control_fw=2.0 * half_f[2 * idx_arr],
        control_bw=2.0 * half_b[2 * idx_arr],
        ledger=ledger,
        dark=storage,
        final=final,
        meta={"dt": dt, "dz": dz, "nz": nz, "nt": nt, "delta": bw.detuning, "steps_taken": int(len(idx_arr) - 1)},
    )
    if map_every:
        result.map_t = np.asarray(map_idx) * dt
        result.spacetime = np.asarray(map_rows)
        result.spin_map = np.asarray(spin_rows)
    return result


def _time_integral(y: np.ndarray, t: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def _split_energy(intensity: np.ndarray, t: np.ndarray, t_split: float | None) -> tuple[float, float]:
    """Energy before and after ``t_split`` (linear interpolation of the running integral)."""
    if len(t) < 2:
        return 0.0, 0.0
    running = np.concatenate(([0.0], np.cumsum(0.5 * (intensity[1:] + intensity[:-1]) * np.diff(t))))
    total = float(running[-1])
    if t_split is None:
        return total, 0.0
    before = float(np.interp(t_split, t, running))
    return before, total - before


def storage_efficiency(result: SimResult) -> float:
    """Retrieved energy (both outputs) over input energy."""
    led = result.ledger
    if led.input <= 0:
        raise ValueError("storage efficiency undefined: zero input energy")
    if result.dark is None:
        raise ValueError("run has no storage interval (controls never switched off)")
    return (led.retrieved_fw + led.retrieved_bw) / led.input
