import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal as sps

from msstemg.signal import (BANDPASS_DEFAULT, NOTCH_DEFAULT, IirFilterSpec, MultichannelSignal,
                            apply_filter_zero_phase, design_filter, fft_forward, fft_inverse,
                            next_pow2, prefilter)

from conftest import FS, tone


def naive_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


# --- container ---------------------------------------------------------------

def test_signal_rejects_nan():
    with pytest.raises(ValueError, match="NaN"):
        MultichannelSignal(np.array([[0.0, np.nan]]), FS)


def test_signal_rejects_bad_rate_and_shape():
    with pytest.raises(ValueError):
        MultichannelSignal(np.zeros((2, 3)), 0.0)
    with pytest.raises(ValueError):
        MultichannelSignal(np.zeros((2, 3, 4)), FS)


def test_signal_is_read_only():
    s = MultichannelSignal(np.zeros((2, 8)), FS)
    assert (s.channel_count, s.length_samples, s.duration_s) == (2, 8, 8 / FS)
    with pytest.raises(ValueError):
        s.samples[0, 0] = 1.0


# --- FFT -----------------------------------------------------------------------

def test_fft_impulse():
    np.testing.assert_allclose(fft_forward([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 8, 64, 256])
def test_fft_matches_quadratic_dft(n, rng):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    np.testing.assert_allclose(fft_forward(x), naive_dft(x), rtol=0, atol=1e-10 * max(1, n))


def test_fft_errors():
    with pytest.raises(ValueError, match="empty"):
        fft_forward([])
    with pytest.raises(ValueError, match="power of two"):
        fft_forward(np.ones(6))


@given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)),
       st.floats(-10, 10), st.floats(-10, 10))
def test_fft_linearity(x, y, a, b):
    lhs = fft_forward(a * x + b * y)
    rhs = a * fft_forward(x) + b * fft_forward(y)
    scale = 1 + np.abs(lhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale


@given(arrays(np.complex128, 128, elements=st.complex_numbers(max_magnitude=1e3)))
def test_fft_roundtrip_and_parseval(x):
    X = fft_forward(x)
    np.testing.assert_allclose(fft_inverse(X), x, atol=1e-9 * (1 + np.abs(x).max()))
    e = np.sum(np.abs(x) ** 2)
    assert abs(e - np.sum(np.abs(X) ** 2) / 128) <= 1e-9 * (1 + e)


@pytest.mark.parametrize("n,p", [(1, 1), (2, 2), (3, 4), (500, 512), (1024, 1024), (1025, 2048)])
def test_next_pow2(n, p):
    assert next_pow2(n) == p


# --- filters ---------------------------------------------------------------------

def test_bandpass_passband_and_stopband():
    f = design_filter(BANDPASS_DEFAULT, FS)
    h = np.abs(f.response([250.0, 1.0]))
    assert 0.99 <= h[0] <= 1.01
    assert 20 * np.log10(h[1]) < -60
    assert f.order == 12


def test_bandpass_matches_bilinear_prototype():
    # independent route: analog Butterworth band-pass with prewarped edges, then bilinear
    lo, hi = 5.0, 500.0
    w = 2 * FS * np.tan(np.pi * np.array([lo, hi]) / FS)
    z, p, k = sps.butter(6, w, btype="bandpass", analog=True, output="zpk")
    zd, pd, kd = sps.bilinear_zpk(z, p, k, fs=FS)
    freqs = np.array([2.0, 5.0, 20.0, 100.0, 300.0, 500.0, 800.0])
    _, h_ref = sps.freqz_zpk(zd, pd, kd, worN=freqs, fs=FS)
    h = design_filter(BANDPASS_DEFAULT, FS).response(freqs)
    np.testing.assert_allclose(np.abs(h), np.abs(h_ref), rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("spec", [BANDPASS_DEFAULT, NOTCH_DEFAULT])
def test_filters_are_stable(spec):
    assert np.all(np.abs(design_filter(spec, FS).poles()) < 1.0)


def test_notch_response():
    f = design_filter(NOTCH_DEFAULT, FS)
    db = 20 * np.log10(np.abs(f.response([45.0, 50.0, 55.0])))
    assert db[1] < -30
    assert db[0] > -1 and db[2] > -1


def test_notch_rejects_mains_tone():
    f = design_filter(NOTCH_DEFAULT, FS)
    x = tone(50.0, 12000)
    y = apply_filter_zero_phase(MultichannelSignal(x, FS), f).samples[0, 1000:-1000]
    assert np.sqrt(np.mean(y ** 2)) < 0.05 * np.sqrt(np.mean(x[1000:-1000] ** 2))


def test_invalid_cutoff():
    with pytest.raises(ValueError, match="invalid cutoff"):
        design_filter(IirFilterSpec("butterworth_bandpass", 6, 5.0, 1200.0), FS)
    with pytest.raises(ValueError, match="invalid cutoff"):
        design_filter(IirFilterSpec("butterworth_bandpass", 6, 50.0, 10.0), FS)


def test_short_signal_rejected():
    f = design_filter(BANDPASS_DEFAULT, FS)
    with pytest.raises(ValueError, match="warm-up"):
        apply_filter_zero_phase(MultichannelSignal(np.zeros((1, 20)), FS), f)


def test_sample_rate_mismatch():
    f = design_filter(BANDPASS_DEFAULT, FS)
    with pytest.raises(ValueError, match="sample rate"):
        apply_filter_zero_phase(MultichannelSignal(np.zeros((1, 200)), 1000.0), f)


def test_zero_phase_has_no_lag(rng):
    f = design_filter(BANDPASS_DEFAULT, FS)
    x = rng.standard_normal(4000)
    y = apply_filter_zero_phase(MultichannelSignal(x, FS), f).samples[0]
    sl = slice(500, -500)
    c = np.correlate(y[sl], x[sl], mode="full")
    assert int(np.argmax(c)) - (len(x[sl]) - 1) == 0


def test_filter_preserves_inband_tone():
    f = design_filter(BANDPASS_DEFAULT, FS)
    # the 5 Hz edge rings for ~0.5 s; compare away from both ends
    x = tone(120.0, 8000)
    y = apply_filter_zero_phase(MultichannelSignal(x, FS), f).samples[0]
    np.testing.assert_allclose(y[2000:-2000], x[2000:-2000], atol=1e-3)


def test_prefilter_applies_all_channels():
    filters = [design_filter(BANDPASS_DEFAULT, FS), design_filter(NOTCH_DEFAULT, FS)]
    x = np.vstack([tone(120.0, 4000), 2 * tone(120.0, 4000)])
    y = prefilter(MultichannelSignal(x, FS), filters).samples
    assert y.shape == x.shape
    np.testing.assert_allclose(y[1], 2 * y[0], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("phase", [0.0, 0.7, 1.9])
def test_bandpass_keeps_inband_rms(phase):
    f = design_filter(BANDPASS_DEFAULT, FS)
    x = tone(250.0, 4000, phase=phase)
    y = apply_filter_zero_phase(MultichannelSignal(x, FS), f).samples[0, 100:-100]
    ratio = np.sqrt(np.mean(y ** 2)) / np.sqrt(np.mean(x[100:-100] ** 2))
    assert abs(ratio - 1.0) < 0.02
