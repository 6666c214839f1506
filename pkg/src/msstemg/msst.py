"""Multivariate synchrosqueezing: band-wise fusion of per-channel transforms."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .sst import TimeFrequencyMatrix, WaveletSpec, linear_axis, nearest_bin, sst_batch

DEFAULT_BANDS = 32
DEFAULT_BINS = 256


@dataclass(frozen=True)
class BandPartition:
    """Contiguous partition of ``n_bins`` frequency bins into bands.

    ``band_edges[k]:band_edges[k + 1]`` are the bin indices of band ``k``.
    """

    band_edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.band_edges, dtype=np.int64)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("band_edges needs at least two entries")
        if e[0] != 0 or np.any(np.diff(e) < 1):
            raise ValueError("bands must start at bin 0 and each hold at least one bin")
        object.__setattr__(self, "band_edges", e)

    @property
    def K(self):
        return self.band_edges.size - 1

    @property
    def n_bins(self):
        return int(self.band_edges[-1])

    @classmethod
    def equal_width(cls, n_bins, K):
        if not 1 <= K <= n_bins:
            raise ValueError(f"cannot split {n_bins} bins into {K} bands")
        edges = np.round(np.linspace(0, n_bins, K + 1)).astype(np.int64)
        return cls(edges)

    def band_of_bin(self):
        return np.repeat(np.arange(self.K), np.diff(self.band_edges))


@dataclass(frozen=True)
class BandEstimates:
    """Per-band instantaneous frequency (Hz) and amplitude for one channel."""

    band_if_hz: np.ndarray
    band_ia: np.ndarray
    valid: np.ndarray
    channel_index: int = 0


def band_if_ia(T, partition, channel_index=0):
    """Energy centroid frequency and root energy of each band at each time index."""
    if partition.n_bins != T.shape[0]:
        raise ValueError(
            f"partition covers {partition.n_bins} bins but matrix has {T.shape[0]}")
    energy = np.ascontiguousarray(np.abs(T.coefficients) ** 2)
    f, a, v = kernels.band_centroid(energy, np.ascontiguousarray(T.freq_axis_hz, dtype=float),
                                    partition.band_edges)
    return BandEstimates(f, a, v, channel_index)


def multivariate_fuse(estimates):
    """Amplitude-squared weighted IF and root-sum-square IA across channels.

    Channel sums are taken over values sorted along the channel axis so the
    result does not depend on channel order. The weighted mean is formed as an
    offset from the smallest contributing IF, which makes it exact when all
    channels agree.
    """
    if not estimates:
        raise ValueError("no channel estimates to fuse")
    shape = estimates[0].band_if_hz.shape
    for e in estimates:
        if e.band_if_hz.shape != shape or e.band_ia.shape != shape:
            raise ValueError("channel estimates have inconsistent shapes")
    freq = np.stack([e.band_if_hz for e in estimates])
    amp = np.stack([e.band_ia for e in estimates])
    valid = np.stack([e.valid for e in estimates])
    return _fuse_arrays(freq, amp, valid)


def _fuse_arrays(freq, amp, valid):
    return kernels.fuse(np.ascontiguousarray(freq, dtype=float),
                        np.ascontiguousarray(amp, dtype=float),
                        np.ascontiguousarray(valid, dtype=bool))


def msst_assemble(multi_if, multi_ia, out_axis, time_axis_s=None, sample_rate_hz=None):
    """Place each band's amplitude in the output bin nearest its fused IF."""
    out_axis = np.asarray(out_axis, dtype=float)
    multi_if = np.asarray(multi_if, dtype=float)
    multi_ia = np.asarray(multi_ia, dtype=float)
    bins = nearest_bin(multi_if, out_axis)
    bins[multi_ia <= 0] = -1
    M = kernels.deposit(np.ascontiguousarray(multi_ia), np.ascontiguousarray(bins),
                        out_axis.shape[0])
    n_cols = multi_if.shape[1]
    if time_axis_s is None:
        time_axis_s = np.arange(n_cols, dtype=float) if sample_rate_hz is None \
            else np.arange(n_cols) / sample_rate_hz
    return TimeFrequencyMatrix(M, out_axis, np.asarray(time_axis_s, dtype=float),
                               float(sample_rate_hz or 0.0))


def msst_from_sst(sst_matrices, partition):
    """Fuse already computed per-channel synchrosqueezed matrices."""
    if not sst_matrices:
        raise ValueError("no channels")
    est = [band_if_ia(T, partition, n) for n, T in enumerate(sst_matrices)]
    f, a = multivariate_fuse(est)
    T0 = sst_matrices[0]
    return msst_assemble(f, a, T0.freq_axis_hz, T0.time_axis_s, T0.sample_rate_hz)


def msst_array(x, sample_rate_hz, wavelet=WaveletSpec(), K=DEFAULT_BANDS, out_axis=None):
    """MSST of a (channels, time) array, returned as a plain (bins, time) array."""
    if K < 1:
        raise ValueError("band count K must be >= 1")
    if out_axis is None:
        out_axis = linear_axis(wavelet.min_freq_hz, wavelet.max_freq_hz, DEFAULT_BINS)
    T = sst_batch(x, sample_rate_hz, wavelet, out_axis)
    partition = BandPartition.equal_width(out_axis.shape[0], K)
    freqs = np.ascontiguousarray(out_axis)
    fs, amps, vals = [], [], []
    for n in range(T.shape[0]):
        f, a, v = kernels.band_centroid(np.ascontiguousarray(np.abs(T[n]) ** 2), freqs,
                                        partition.band_edges)
        fs.append(f)
        amps.append(a)
        vals.append(v)
    mf, ma = _fuse_arrays(np.stack(fs), np.stack(amps), np.stack(vals))
    bins = nearest_bin(mf, out_axis)
    bins[ma <= 0] = -1
    return kernels.deposit(ma, bins, out_axis.shape[0])


def msst(sig, wavelet=WaveletSpec(), K=DEFAULT_BANDS, out_axis=None):
    """Single time-frequency matrix representing all channels of ``sig``."""
    if out_axis is None:
        out_axis = linear_axis(wavelet.min_freq_hz, wavelet.max_freq_hz, DEFAULT_BINS)
    out_axis = np.asarray(out_axis, dtype=float)
    M = msst_array(sig.samples, sig.sample_rate_hz, wavelet, K, out_axis)
    n = sig.length_samples
    return TimeFrequencyMatrix(M, out_axis, np.arange(n) / sig.sample_rate_hz,
                               sig.sample_rate_hz, {"bands": K})


def write_matrix_csv(path, T):
    """Dump a matrix as text: header of time values, one row per frequency bin."""
    with open(path, "w", newline="") as fh:
        fh.write("# freq_hz," + ",".join(repr(float(t)) for t in T.time_axis_s) + "\n")
        for f, row in zip(T.freq_axis_hz, np.real_if_close(T.coefficients)):
            fh.write(f"# freq_hz={float(f)!r}," + ",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path, sample_rate_hz=0.0):
    freqs, rows = [], []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        times = np.array([float(v) for v in header[1:]])
        for line in fh:
            parts = line.rstrip("\n").split(",")
            freqs.append(float(parts[0].split("=", 1)[1]))
            rows.append([float(v) for v in parts[1:]])
    return TimeFrequencyMatrix(np.array(rows, dtype=float).reshape(len(freqs), times.size),
                               np.array(freqs), times, sample_rate_hz)
