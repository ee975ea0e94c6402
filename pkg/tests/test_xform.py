import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from tdsm.forward.traces import TraceSet
from tdsm.imaging import time_indicator
from tdsm.presets import TERMINAL_TIME_2D
from tdsm.verify import reference_pulse_signal
from tdsm.waveform import PulseSpec, SampledSignal, sample_pulse, trapezoid_weights
from tdsm.xform import fourier_laplace, freq_indicator, parseval_residual, parseval_sides, receiver_spectra


def fft_laplace(signal: SampledSignal, sigma: float, pad: int):
    """Trapezoid Fourier-Laplace transform on the FFT grid xi_k = 2 pi k / (N dt)."""
    g = trapezoid_weights(len(signal), signal.dt) * np.exp(-sigma * signal.times) * signal.values
    n = pad * len(signal)
    vals = n * np.fft.ifft(g, n)
    xi = 2 * math.pi * np.arange(n) / (n * signal.dt)
    return xi, vals


def test_exponential_integral():
    dt = 1e-3
    sig = SampledSignal(dt, np.exp(-dt * np.arange(20000)))
    assert fourier_laplace(sig, 0.0, [0.0]).values[0, 0].real == pytest.approx(1.0, abs=1e-4)


def test_zero_signal():
    assert np.all(fourier_laplace(SampledSignal(1.0, np.zeros(8)), 0.5, [0.0, 1.0, 2.0]).values == 0)


def test_matches_fft_oracle(rng):
    sig = SampledSignal(1e-10, rng.normal(size=256))
    xi, ref = fft_laplace(sig, 3e8, 4)
    got = fourier_laplace(sig, 3e8, xi[:200]).values[0]
    np.testing.assert_allclose(got, ref[:200], rtol=1e-10, atol=1e-10 * np.abs(ref).max())


@pytest.mark.parametrize("sigma", [0.0, 2e7])
def test_shift_property(sigma):
    spec = PulseSpec("gaussian_sine", f0=3e8, t0=10 / (2 * 3e8))
    dt = 1 / (40 * spec.f0)
    base = sample_pulse(spec, dt, 1200)
    k = 7
    a = k * dt
    shifted = SampledSignal(dt, np.concatenate([base.values[k:], np.zeros(k)]))
    xi = np.linspace(0, 4 * spec.omega, 50)
    omega = xi + 1j * sigma
    lhs = fourier_laplace(shifted, sigma, xi).values[0]
    rhs = np.exp(-1j * omega * a) * fourier_laplace(base, sigma, xi).values[0]
    assert np.abs(lhs - rhs).max() <= 1e-6 * np.abs(rhs).max()


def test_conjugate_symmetry_and_linearity(rng):
    f = SampledSignal(1e-9, rng.normal(size=100))
    g = SampledSignal(1e-9, rng.normal(size=100))
    xi = np.linspace(0.1, 3e9, 11)
    plus = fourier_laplace(f, 1e7, xi).values[0]
    minus = fourier_laplace(f, 1e7, -xi[::-1]).values[0][::-1]
    np.testing.assert_allclose(minus, np.conj(plus), rtol=0, atol=1e-12 * np.abs(plus).max())
    combo = SampledSignal(1e-9, 2.5 * f.values - 0.5 * g.values)
    lin = 2.5 * plus - 0.5 * fourier_laplace(g, 1e7, xi).values[0]
    np.testing.assert_allclose(fourier_laplace(combo, 1e7, xi).values[0], lin, rtol=0, atol=1e-12 * np.abs(lin).max())


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        fourier_laplace(SampledSignal(1.0, np.ones(4)), -1.0, [0.0])


@pytest.mark.parametrize("sigma", [0.0, 2e7])
def test_parseval_gaussian(sigma):
    spec, sig = reference_pulse_signal()
    assert parseval_residual(sig, sigma, 6 * spec.omega, 4001) < 1e-3


def test_parseval_frequency_side_against_fft():
    spec, sig = reference_pulse_signal()
    xi_max = 6 * spec.omega
    _, rhs = parseval_sides(sig, 2e7, xi_max, 4001)
    xi, vals = fft_laplace(sig, 2e7, 64)
    keep = xi <= xi_max
    oracle = trapezoid(np.abs(vals[keep]) ** 2, xi[keep]) / math.pi
    assert rhs == pytest.approx(oracle, rel=1e-3)
    lhs_oracle = trapezoid((np.exp(-2e7 * sig.times) * sig.values) ** 2, sig.times)
    assert parseval_sides(sig, 2e7, xi_max, 4001)[0] == pytest.approx(lhs_oracle, rel=1e-12)


def test_parseval_homogeneous_and_damped():
    spec, sig = reference_pulse_signal()
    r1 = parseval_residual(sig, 0.0, 6 * spec.omega, 4001)
    r2 = parseval_residual(SampledSignal(sig.dt, 2 * sig.values), 0.0, 6 * spec.omega, 4001)
    assert r2 == pytest.approx(r1, rel=1e-9, abs=1e-15)
    assert parseval_sides(sig, 2e7, 6 * spec.omega, 11)[0] < parseval_sides(sig, 0.0, 6 * spec.omega, 11)[0]


def test_parseval_warns_when_under_resolved():
    spec, sig = reference_pulse_signal()
    with pytest.warns(RuntimeWarning):
        parseval_sides(sig, 0.0, 0.5 * spec.omega, 101)


def test_freq_indicator_zero_and_quadratic(tm_scene, tm_traces):
    z = np.array([[0.0, 1.5], [1.0, -1.0]])
    xi = np.linspace(0, 6 * tm_scene.source.pulse.omega, 301)
    zero = TraceSet(tm_traces.positions, tm_traces.dt, np.zeros_like(tm_traces.values))
    assert np.all(freq_indicator(zero, tm_scene.receivers, z, 0.0, xi) == 0)
    base = freq_indicator(tm_traces, tm_scene.receivers, z, 0.0, xi)
    np.testing.assert_allclose(freq_indicator(tm_traces.scaled(3.0), tm_scene.receivers, z, 0.0, xi), 9 * base, rtol=1e-12)


def test_freq_indicator_rejects_receiver_point(tm_scene, tm_traces):
    with pytest.raises(ValueError):
        freq_indicator(tm_traces, tm_scene.receivers, tm_scene.receivers.positions[0], 0.0, [0.0, 1e9])


def test_freq_matches_time_at_scatterer(tm_scene, tm_traces):
    z = np.array([0.0, 1.5])
    c0 = tm_scene.constants.c0
    xi = np.linspace(0, 6 * tm_scene.source.pulse.omega, 3001)
    it = time_indicator(tm_traces, tm_scene.receivers, tm_scene.grid, 0.0, c0, TERMINAL_TIME_2D, points=z[None])[0]
    fi = freq_indicator(tm_traces, tm_scene.receivers, z, 0.0, xi, c0=c0, spectra=receiver_spectra(tm_traces, 0.0, xi))
    assert fi == pytest.approx(it, rel=1e-2)
