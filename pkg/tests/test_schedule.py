import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from eitsplit.schedule import (
    ControlSchedule,
    ProbePulse,
    Segment,
    dark_interval,
    evaluate_control,
    evaluate_probe,
    merged_on_intervals,
    smoothstep,
)

US = 1e-6
MHZ = 2 * np.pi * 1e6


def write_read(ramp=0.1 * US, phase=0.0):
    return ControlSchedule(
        (
            Segment(0.0, 2.05 * US, 5.8 * MHZ, 0.0, ramp),
            Segment(3.98 * US, 8.0 * US, 5.7 * MHZ, phase, ramp),
        )
    )


def test_smoothstep_shape():
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(0.5) == 0.5
    assert smoothstep(-3.0) == 0.0 and smoothstep(7.0) == 1.0
    x = np.linspace(0, 1, 101)
    assert np.all(np.diff(smoothstep(x)) >= 0)


def test_control_plateau_ramps_and_gaps():
    sch = write_read()
    assert evaluate_control(sch, 1.0 * US) == pytest.approx(5.8 * MHZ)
    assert evaluate_control(sch, 6.0 * US) == pytest.approx(5.7 * MHZ)
    assert evaluate_control(sch, 3.0 * US) == 0.0
    # ramps live inside the window: half amplitude mid-ramp
    assert abs(evaluate_control(sch, 2.0 * US)) == pytest.approx(0.5 * 5.8 * MHZ, rel=1e-9)
    assert abs(evaluate_control(sch, 4.03 * US)) == pytest.approx(0.5 * 5.7 * MHZ, rel=1e-9)
    assert evaluate_control(sch, 2.05 * US) == 0.0


def test_instant_switching():
    sch = ControlSchedule((Segment(1 * US, 2 * US, 3.0),))
    t = np.array([0.999, 1.0, 1.5, 2.0, 2.001]) * US
    np.testing.assert_array_equal(np.abs(evaluate_control(sch, t)), [0, 3, 3, 3, 0])


def test_off_schedule_is_zero():
    t = np.linspace(0, 5 * US, 11)
    assert np.all(evaluate_control(ControlSchedule.off(), t) == 0)


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment(2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Segment(0.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        Segment(0.0, 1.0, 1.0, ramp=-0.1)
    with pytest.raises(ValueError):
        ControlSchedule((Segment(0, 2, 1), Segment(1, 3, 1)))


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(-10, 10), alpha=st.floats(-10, 10), t=st.floats(0, 8e-6))
def test_phase_offset_covariance(phi, alpha, t):
    sch = write_read(phase=phi)
    shifted = sch.with_phase_offset(alpha)
    want = np.exp(1j * alpha) * evaluate_control(sch, t)
    assert abs(evaluate_control(shifted, t) - want) <= 1e-12 * max(abs(want), 1.0)


def test_dark_interval_cases():
    sch = write_read()
    off = ControlSchedule.off()
    assert dark_interval([sch, off], 8 * US) == (2.05 * US, 3.98 * US)
    # never re-enabled: storage until the end of the run
    write_only = ControlSchedule((Segment(0.0, 2.05 * US, 1.0),))
    assert dark_interval([write_only], 8 * US) == (2.05 * US, None)
    # control never switches off within the run
    assert dark_interval([ControlSchedule((Segment(0.0, 9 * US, 1.0),))], 8 * US) is None
    # retrieval only (pre-loaded spin wave)
    read_only = ControlSchedule((Segment(1 * US, 3 * US, 1.0),))
    assert dark_interval([read_only], 8 * US) == (0.0, 1 * US)
    assert dark_interval([off, off], 8 * US) == (0.0, None)


def test_merged_intervals():
    a = ControlSchedule((Segment(0, 2, 1), Segment(5, 6, 1)))
    b = ControlSchedule((Segment(1, 3, 1),))
    assert merged_on_intervals([a, b]) == [(0, 3), (5, 6)]


def test_probe_examples():
    p = ProbePulse(peak_amplitude=0.7, center=1.5 * US, fwhm=1.0 * US)
    assert evaluate_probe(p, 1.5 * US) == pytest.approx(0.7, rel=1e-15)
    for t in (1.0 * US, 2.0 * US):
        assert abs(evaluate_probe(p, t)) == pytest.approx(0.7 / np.sqrt(2), rel=1e-12)
        assert abs(evaluate_probe(p, t)) ** 2 == pytest.approx(0.5 * 0.49, rel=1e-12)
    for t in (1.5 * US - 5 * US, 1.5 * US + 5 * US):
        assert abs(evaluate_probe(p, t)) < 1e-7 * 0.7


def test_probe_validation():
    with pytest.raises(ValueError):
        ProbePulse(fwhm=0.0)
    with pytest.raises(ValueError):
        ProbePulse(shape="square")


@pytest.mark.parametrize("fwhm_us,peak", [(1.0, 1.0), (0.3, 2.5), (4.0, 0.01)])
def test_probe_energy_closed_form(fwhm_us, peak):
    p = ProbePulse(peak_amplitude=peak, center=10 * US, fwhm=fwhm_us * US)
    # integrate in microseconds so quad sees O(1) numbers
    val, _ = quad(lambda u: abs(evaluate_probe(p, u * US)) ** 2, 10 - 12 * fwhm_us, 10 + 12 * fwhm_us, epsabs=0, epsrel=1e-12)
    assert val * US == pytest.approx(p.energy, rel=1e-6)


def test_probe_max_abs_on():
    p = ProbePulse(center=1.5 * US)
    assert p.max_abs_on(0, 3 * US) == pytest.approx(1.0)
    assert p.max_abs_on(4 * US, 5 * US) == pytest.approx(abs(evaluate_probe(p, 4 * US)))
