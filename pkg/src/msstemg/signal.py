"""Multichannel signal container, FFT wrappers and IIR filtering."""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class MultichannelSignal:
    """Uniformly sampled real signal, shape ``(channels, samples)``."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("samples must be a non-empty 2-D array [channel][time]")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain NaN or Inf")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @classmethod
    def _trusted(cls, samples, sample_rate_hz):
        # for views cut from an already validated signal
        obj = object.__new__(cls)
        object.__setattr__(obj, "samples", samples)
        object.__setattr__(obj, "sample_rate_hz", sample_rate_hz)
        return obj

    @property
    def channel_count(self):
        return self.samples.shape[0]

    @property
    def length_samples(self):
        return self.samples.shape[1]

    @property
    def duration_s(self):
        return self.length_samples / self.sample_rate_hz


# --- FFT ---------------------------------------------------------------------

def _check_fft_input(x):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise ValueError("expected a 1-D vector")
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty signal")
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    return x


def fft_forward(x):
    """Discrete Fourier transform of a power-of-two length vector."""
    return np.fft.fft(_check_fft_input(x))


def fft_inverse(X):
    return np.fft.ifft(_check_fft_input(X))


def next_pow2(n):
    return 1 << max(0, int(n - 1).bit_length())


# --- IIR filters -------------------------------------------------------------

@dataclass(frozen=True)
class IirFilterSpec:
    """Band-pass Butterworth or notch filter description.

    ``order`` is the Butterworth prototype order; the band-pass realisation
    has ``2 * order`` poles in ``order`` second-order sections.
    """

    kind: str
    order: int = 6
    low_cut_hz: float = 5.0
    high_cut_hz: float = 500.0
    center_hz: float = 50.0
    quality_factor: float = 35.0

    def __post_init__(self):
        if self.kind not in ("butterworth_bandpass", "notch"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.order < 1:
            raise ValueError("order must be positive")
        if self.kind == "notch" and self.order != 2:
            raise ValueError("notch filters are second order")


BANDPASS_DEFAULT = IirFilterSpec("butterworth_bandpass", order=6, low_cut_hz=5.0, high_cut_hz=500.0)
NOTCH_DEFAULT = IirFilterSpec("notch", order=2, center_hz=50.0, quality_factor=35.0)


@dataclass(frozen=True)
class SosFilter:
    sos: np.ndarray
    sample_rate_hz: float
    order: int
    spec: IirFilterSpec = field(repr=False)

    def response(self, freqs_hz):
        """Complex frequency response at the given frequencies."""
        freqs_hz = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
        _, h = sps.sosfreqz(self.sos, worN=freqs_hz, fs=self.sample_rate_hz)
        return h

    def poles(self):
        return np.concatenate([np.roots(s[3:]) for s in self.sos])


def design_filter(spec, sample_rate_hz):
    nyq = sample_rate_hz / 2.0
    if spec.kind == "butterworth_bandpass":
        if not (0.0 < spec.low_cut_hz < spec.high_cut_hz < nyq):
            raise ValueError("invalid cutoff")
        sos = sps.butter(spec.order, [spec.low_cut_hz, spec.high_cut_hz],
                         btype="bandpass", output="sos", fs=sample_rate_hz)
        order = 2 * spec.order
    else:
        if not (0.0 < spec.center_hz < nyq):
            raise ValueError("invalid cutoff")
        b, a = sps.iirnotch(spec.center_hz, spec.quality_factor, fs=sample_rate_hz)
        sos = sps.tf2sos(b, a)
        order = 2
    return SosFilter(np.ascontiguousarray(sos), float(sample_rate_hz), order, spec)


def apply_filter_zero_phase(sig, filt):
    """Forward-backward filtering of every channel."""
    if abs(sig.sample_rate_hz - filt.sample_rate_hz) > 1e-9 * filt.sample_rate_hz:
        raise ValueError("filter designed for a different sample rate")
    n = sig.length_samples
    if n < 3 * filt.order:
        raise ValueError("signal shorter than filter warm-up")
    sos = filt.sos
    ntaps = 2 * len(sos) + 1
    ntaps -= min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    padlen = min(3 * ntaps, n - 1)
    y = sps.sosfiltfilt(sos, sig.samples, axis=-1, padlen=padlen)
    return MultichannelSignal(y, sig.sample_rate_hz)


def prefilter(sig, filters):
    for f in filters:
        sig = apply_filter_zero_phase(sig, f)
    return sig
