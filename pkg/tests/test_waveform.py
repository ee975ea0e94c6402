import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from tdsm.waveform import (
    PulseSpec,
    SampledSignal,
    eval_gaussian_pulse,
    eval_smooth_sawtooth,
    evaluate,
    evaluate_derivative,
    sample_pulse,
    spectrum,
)

C0 = 299792458.0
GAUSS = PulseSpec("gaussian_sine", f0=3e8)
SAW = PulseSpec("smooth_sawtooth", f0=3e8, smoothing=1e18)


def saw_oracle(t, spec, n=10**6):
    """Brute-force trapezoid of saw(tau) exp(-c (t - tau)^2) over the 1e-12 window."""
    half = math.sqrt(math.log(1e12) / spec.smoothing)
    tau = np.linspace(t - half, t + half, n)
    u = (spec.b * tau + math.pi) / (2 * math.pi)
    saw = u - np.floor(u) - 0.5
    return trapezoid(saw * np.exp(-spec.smoothing * (t - tau) ** 2), tau)


def test_gaussian_examples():
    assert eval_gaussian_pulse(-1e-9, GAUSS) == 0.0
    assert eval_gaussian_pulse(GAUSS.t0, GAUSS) == 0.0
    assert eval_gaussian_pulse(GAUSS.t0 + 1 / (4 * GAUSS.f0), GAUSS) == pytest.approx(math.exp(-0.25), abs=1e-12)
    assert math.exp(-0.25) == pytest.approx(0.77880, abs=1e-5)


def test_default_delay_keeps_truncation_small():
    assert GAUSS.t0 >= 3 * GAUSS.a
    assert abs(eval_gaussian_pulse(0.0, GAUSS)) < math.exp(-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e-7, -1e-15), st.floats(1e6, 1e10))
def test_causality_both_kinds(t, f0):
    assert evaluate(t, PulseSpec("gaussian_sine", f0=f0)) == 0.0
    assert evaluate(t, PulseSpec("smooth_sawtooth", f0=f0, smoothing=(10 * f0) ** 2)) == 0.0
    assert evaluate_derivative(t, PulseSpec("gaussian_sine", f0=f0)) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5e-8))
def test_gaussian_envelope(t):
    env = math.exp(-((t - GAUSS.t0) / GAUSS.a) ** 2)
    assert abs(eval_gaussian_pulse(t, GAUSS)) <= env + 1e-15


def test_sample_pulse_envelope_and_alignment():
    sig = sample_pulse(GAUSS, GAUSS.t0 / 8, 4)
    bound = math.exp(-((GAUSS.t0 * 5 / 8) / GAUSS.a) ** 2)
    # the last sample sits on a crest of the sine, so the bound is met with equality
    assert np.all(np.abs(sig.values) <= bound * (1 + 1e-12))
    assert sig.values[0] == eval_gaussian_pulse(0.0, GAUSS)


def test_sample_pulse_argmax_matches_dense_oracle():
    dt = 1 / (20 * GAUSS.f0)
    sig = sample_pulse(GAUSS, dt, 400)
    t_dense = np.arange(400 * 100) * dt / 100
    dense = eval_gaussian_pulse(t_dense, GAUSS)
    assert abs(sig.times[sig.values.argmax()] - t_dense[dense.argmax()]) <= dt


def test_sample_pulse_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_pulse(GAUSS, 0.0, 4)
    with pytest.raises(ValueError):
        sample_pulse(GAUSS, 1e-10, 1)
    with pytest.raises(ValueError):
        SampledSignal(1e-10, np.zeros(1))


def test_sawtooth_near_zero_at_origin():
    assert abs(eval_smooth_sawtooth(0.0, SAW)) < 1e-3
    assert eval_smooth_sawtooth(-1e-9, SAW) == 0.0


def test_sawtooth_matches_trapezoid_oracle():
    t = 1e-9
    ref = saw_oracle(t, SAW)
    assert eval_smooth_sawtooth(t, SAW) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("t", [2.3e-9, 3.3e-9, 7.1e-9])
def test_sawtooth_oracle_near_jumps(t):
    # jumps sit at (2k - 1)/f0; 3.3e-9 is within a mollifier width of the first
    assert eval_smooth_sawtooth(t, SAW) == pytest.approx(saw_oracle(t, SAW), rel=1e-7, abs=1e-12)


def test_sawtooth_rejects_non_finite():
    with pytest.raises(ValueError):
        eval_smooth_sawtooth(np.nan, SAW)


def test_sawtooth_derivative_matches_difference():
    t = np.array([1.2e-9, 3.4e-9, 6.6e-9])
    h = 1e-13
    fd = (eval_smooth_sawtooth(t + h, SAW) - eval_smooth_sawtooth(t - h, SAW)) / (2 * h)
    np.testing.assert_allclose(evaluate_derivative(t, SAW), fd, rtol=1e-5)


def test_sawtooth_second_difference_bounded():
    c = SAW.smoothing
    dt = 1 / (40 * SAW.f0)
    t = np.linspace(1e-9, 1.3e-8, 40)
    saw_max = 0.5
    for k in (1, 2, 4, 8, 16):
        h = dt / k
        d2 = np.abs(eval_smooth_sawtooth(t + h, SAW) - 2 * eval_smooth_sawtooth(t, SAW) + eval_smooth_sawtooth(t - h, SAW)) / h**2
        bound = 4 * c * saw_max * (1 + 2 * c * h**2)
        assert d2.max() <= bound


def test_spectrum_zero_signal():
    spec = spectrum(SampledSignal(1e-10, np.zeros(10)), [0.0, 1e8])
    assert np.all(spec.values == 0)


def test_spectrum_conjugate_symmetry(rng):
    sig = SampledSignal(1e-10, rng.normal(size=64))
    f = np.linspace(1e6, 3e9, 17)
    plus = spectrum(sig, f).values[0]
    minus = spectrum(sig, -f[::-1]).values[0][::-1]
    np.testing.assert_allclose(minus, np.conj(plus), rtol=0, atol=1e-12)


def test_spectrum_peak_near_carrier():
    spec = PulseSpec("gaussian_sine", f0=C0 / 1.0)
    dt = 1 / (40 * spec.f0)
    sig = sample_pulse(spec, dt, int((spec.t0 + 8 * spec.a) / dt) + 1)
    f = np.linspace(0, 3 * spec.f0, 601)
    vals = np.abs(spectrum(sig, f).values[0])
    assert abs(f[vals.argmax()] - spec.f0) <= 0.05 * spec.f0


def test_spectrum_rejects_empty_grid():
    with pytest.raises(ValueError):
        spectrum(SampledSignal(1e-10, np.ones(3)), [])


def test_pulse_spec_validation():
    with pytest.raises(ValueError):
        PulseSpec("gaussian_sine", f0=-1.0)
    with pytest.raises(ValueError):
        PulseSpec("smooth_sawtooth", f0=1e8)
    with pytest.raises(ValueError):
        PulseSpec("square", f0=1e8)
