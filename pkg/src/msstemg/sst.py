"""Morlet continuous wavelet transform and synchrosqueezing."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from scipy import signal as sps

from . import kernels
from .signal import next_pow2

MORLET_OMEGA0 = 6.0
VALIDITY_THRESHOLD = 1e-8
EDGE_FRACTION = 0.05
MIN_CWT_LENGTH = 64
PREDICTION_ORDER = 16
BOUNDARIES = ("predict", "reflect")


@dataclass(frozen=True)
class TimeFrequencyMatrix:
    """Coefficients over (frequency bin, time index) with their axes."""

    coefficients: np.ndarray
    freq_axis_hz: np.ndarray
    time_axis_s: np.ndarray
    sample_rate_hz: float
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        c = self.coefficients
        if c.ndim != 2 or c.shape != (len(self.freq_axis_hz), len(self.time_axis_s)):
            raise ValueError(
                f"coefficient shape {c.shape} does not match axes "
                f"({len(self.freq_axis_hz)}, {len(self.time_axis_s)})")
        if len(self.freq_axis_hz) > 1 and np.any(np.diff(self.freq_axis_hz) <= 0):
            raise ValueError("freq_axis_hz must be strictly increasing")

    @property
    def shape(self):
        return self.coefficients.shape

    def scaled(self, c):
        return TimeFrequencyMatrix(self.coefficients * c, self.freq_axis_hz,
                                   self.time_axis_s, self.sample_rate_hz, dict(self.meta))


@dataclass(frozen=True)
class WaveletSpec:
    family: str = "morlet"
    center_frequency_cycles: float = MORLET_OMEGA0 / (2 * np.pi)
    voices_per_octave: int = 16
    min_freq_hz: float = 5.0
    max_freq_hz: float = 500.0
    boundary: str = "predict"

    def __post_init__(self):
        if self.family != "morlet":
            raise ValueError(f"unsupported wavelet family {self.family!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {', '.join(BOUNDARIES)}")
        if self.voices_per_octave < 4:
            raise ValueError("voices_per_octave must be >= 4")
        if not (0 < self.min_freq_hz < self.max_freq_hz):
            raise ValueError("need 0 < min_freq_hz < max_freq_hz")
        if not self.center_frequency_cycles > 0:
            raise ValueError("center_frequency_cycles must be positive")

    @property
    def omega0(self):
        return 2 * np.pi * self.center_frequency_cycles

    def frequencies(self):
        """Log-spaced analysis frequencies, ascending, one per voice."""
        n = int(np.floor(self.voices_per_octave * np.log2(self.max_freq_hz / self.min_freq_hz) + 1e-9)) + 1
        return self.min_freq_hz * 2.0 ** (np.arange(n) / self.voices_per_octave)

    def scales(self):
        """Scales in seconds matching :meth:`frequencies`."""
        return self.center_frequency_cycles / self.frequencies()


def linear_axis(f_min=5.0, f_max=500.0, n_bins=256):
    return np.linspace(f_min, f_max, n_bins)


@lru_cache(maxsize=32)
def _morlet_bank(scales, n_fft, sample_rate_hz, omega0):
    # analytic Morlet, L2 normalised: sqrt(a) * pi^-1/4 * exp(-(a w - w0)^2 / 2), w > 0
    scales = np.asarray(scales)
    omega = 2 * np.pi * np.fft.fftfreq(n_fft, d=1.0 / sample_rate_hz)
    aw = scales[:, None] * omega[None, :]
    bank = np.where(omega[None, :] > 0,
                    np.sqrt(scales)[:, None] * np.pi ** -0.25 * np.exp(-0.5 * (aw - omega0) ** 2),
                    0.0)
    bank.setflags(write=False)
    return bank


def burg_ar(x, order):
    """All-pole coefficients ``a`` (``a[0] == 1``) of each row by Burg's method.

    Reflection coefficients are bounded by one, so the model is stable.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    f = x[:, 1:].copy()
    b = x[:, :-1].copy()
    a = np.zeros((x.shape[0], order + 1))
    a[:, 0] = 1.0
    for m in range(1, order + 1):
        num = np.einsum("ij,ij->i", f, b)
        den = np.einsum("ij,ij->i", f, f) + np.einsum("ij,ij->i", b, b)
        k = np.where(den > 0, -2.0 * num / np.where(den > 0, den, 1.0), 0.0)
        k = np.clip(k, -1.0, 1.0)
        a[:, :m + 1] = a[:, :m + 1] + k[:, None] * a[:, m::-1]
        f, b = f[:, 1:] + k[:, None] * b[:, 1:], b[:, :-1] + k[:, None] * f[:, :-1]
    return a


def _predict(x, a, length):
    # zero-input response of 1/A(z) continuing from the last samples of x
    p = a.shape[0] - 1
    zi = sps.lfiltic([1.0], a, x[::-1][:p])
    return sps.lfilter([1.0], a, np.zeros(length), zi=zi)[0]


def _taper(length):
    return 0.5 * (1.0 + np.cos(np.pi * np.arange(length) / max(length, 1)))


def _extend(x, n_fft, boundary="predict"):
    """Extend rows of ``x`` to ``n_fft`` samples; returns (extended, left offset).

    ``predict`` continues each row forward and backward with a Burg linear
    predictor and fades the continuation to zero with a half-cosine, so tones
    keep their phase across the boundary. ``reflect`` mirrors the row.
    """
    n = x.shape[-1]
    left = (n_fft - n) // 2
    right = n_fft - n - left
    if boundary == "reflect":
        return np.pad(x, [(0, 0)] * (x.ndim - 1) + [(left, right)], mode="reflect"), left
    rows = x.reshape(-1, n)
    # a stationary row and its time reversal share one autocorrelation, hence one model
    A = burg_ar(rows, min(PREDICTION_ORDER, n // 4))
    out = np.empty((rows.shape[0], n_fft))
    tl, tr = _taper(left)[::-1], _taper(right)
    for i, (r, a) in enumerate(zip(rows, A)):
        out[i, :left] = _predict(r[::-1], a, left)[::-1] * tl
        out[i, left:left + n] = r
        out[i, left + n:] = _predict(r, a, right) * tr
    return out.reshape(x.shape[:-1] + (n_fft,)), left


def cwt_batch(x, sample_rate_hz, wavelet):
    """CWT of every row of ``x``; returns complex array (rows, scales, time)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    if n < MIN_CWT_LENGTH:
        raise ValueError(f"signal too short for CWT: {n} < {MIN_CWT_LENGTH} samples")
    if wavelet.max_freq_hz > sample_rate_hz / 2:
        raise ValueError("wavelet frequency range exceeds Nyquist")
    n_fft = next_pow2(2 * n)
    padded, left = _extend(x, n_fft, wavelet.boundary)
    bank = _morlet_bank(tuple(wavelet.scales()), n_fft, float(sample_rate_hz), wavelet.omega0)
    spectrum = np.fft.fft(padded, axis=-1)
    coeffs = np.fft.ifft(spectrum[:, None, :] * bank[None, :, :], axis=-1)
    return coeffs[..., left:left + n]


def _time_axis(n, sample_rate_hz):
    return np.arange(n) / sample_rate_hz


def _edge_meta(n):
    e = int(np.ceil(EDGE_FRACTION * n))
    return {"edge_columns": e}


def cwt(channel, sample_rate_hz, wavelet=WaveletSpec()):
    """Morlet CWT of a single channel on the log frequency grid of ``wavelet``."""
    channel = np.asarray(channel, dtype=float)
    if channel.ndim != 1:
        raise ValueError("cwt expects a single channel")
    W = cwt_batch(channel[None, :], sample_rate_hz, wavelet)[0]
    n = channel.shape[0]
    meta = _edge_meta(n)
    meta["scales"] = wavelet.scales()
    meta["voices_per_octave"] = wavelet.voices_per_octave
    return TimeFrequencyMatrix(W, wavelet.frequencies(), _time_axis(n, sample_rate_hz),
                               float(sample_rate_hz), meta)


@dataclass(frozen=True)
class PhaseTransform:
    """Instantaneous-frequency estimates in Hz; ``freq_hz`` is 0 where not ``valid``."""

    freq_hz: np.ndarray
    valid: np.ndarray


def phase_transform(W):
    freq, valid = kernels.phase_frequency_np(W.coefficients, W.sample_rate_hz,
                                             VALIDITY_THRESHOLD)
    return PhaseTransform(freq, valid)


def nearest_bin(freqs, axis):
    """Index of the nearest ``axis`` entry, or -1 when more than half a bin outside."""
    return kernels.nearest_index_np(freqs, np.asarray(axis, dtype=float))


def scale_weights(scales, voices_per_octave):
    """Per-scale integration weight a^(-3/2) * da on a log-spaced grid."""
    da = scales * np.log(2.0) / voices_per_octave
    return scales ** -1.5 * da


def synchrosqueeze(W, omega_hat, out_freq_axis=None):
    """Reassign CWT coefficients to the output bin nearest their IF estimate."""
    if out_freq_axis is None:
        out_freq_axis = linear_axis()
    out_freq_axis = np.asarray(out_freq_axis, dtype=float)
    if out_freq_axis.ndim != 1 or out_freq_axis.size < 1 or np.any(np.diff(out_freq_axis) <= 0):
        raise ValueError("out_freq_axis must be strictly increasing")
    if omega_hat.freq_hz.shape != W.shape or omega_hat.valid.shape != W.shape:
        raise ValueError("phase transform shape does not match coefficients")
    scales = W.meta.get("scales")
    voices = W.meta.get("voices_per_octave")
    if scales is None or voices is None or len(scales) != W.shape[0]:
        raise ValueError("coefficients lack scale metadata from cwt()")
    bins = nearest_bin(omega_hat.freq_hz, out_freq_axis)
    bins[~omega_hat.valid] = -1
    values = W.coefficients * scale_weights(scales, voices)[:, None]
    T = kernels.scatter_columns(np.ascontiguousarray(values), bins, out_freq_axis.shape[0])
    meta = {"edge_columns": W.meta.get("edge_columns", 0)}
    return TimeFrequencyMatrix(T, out_freq_axis, W.time_axis_s, W.sample_rate_hz, meta)


def sst(channel, sample_rate_hz, wavelet=WaveletSpec(), out_freq_axis=None):
    W = cwt(channel, sample_rate_hz, wavelet)
    return synchrosqueeze(W, phase_transform(W), out_freq_axis)


def sst_batch(x, sample_rate_hz, wavelet, out_freq_axis):
    """Synchrosqueezed transform of every row of ``x``: complex (rows, bins, time)."""
    W = cwt_batch(x, sample_rate_hz, wavelet)
    weights = scale_weights(wavelet.scales(), wavelet.voices_per_octave)
    axis = np.ascontiguousarray(out_freq_axis, dtype=float)
    out = np.empty((W.shape[0], axis.shape[0], W.shape[-1]), dtype=complex)
    for i in range(W.shape[0]):
        out[i] = kernels.squeeze(np.ascontiguousarray(W[i]), weights, sample_rate_hz,
                                 VALIDITY_THRESHOLD, axis)
    return out
