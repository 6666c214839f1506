"""Inner loops with two interchangeable backends.

Each kernel exists as ``<name>_nb`` (numba, compiled lazily) and
``<name>_np`` (vectorised numpy). The public name dispatches according to
:data:`msstemg._accel.USE_NUMBA`. Both backends accumulate in the same order,
so they agree to the last bit on the inputs exercised by the test suite.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


# --- nearest bin -------------------------------------------------------------

def nearest_index_np(freqs, axis):
    """Index of the nearest ``axis`` entry, -1 beyond half a bin outside the axis."""
    freqs = np.asarray(freqs, dtype=float)
    n = axis.shape[0]
    if n == 1:
        return np.zeros(freqs.shape, dtype=np.int64)
    idx = np.clip(np.searchsorted(axis, freqs), 1, n - 1)
    idx = np.where(freqs - axis[idx - 1] <= axis[idx] - freqs, idx - 1, idx).astype(np.int64)
    lo = axis[0] - 0.5 * (axis[1] - axis[0])
    hi = axis[-1] + 0.5 * (axis[-1] - axis[-2])
    idx[(freqs < lo) | (freqs > hi)] = -1
    return idx


@njit
def _nearest_index(f, axis, lo, hi, inv_step):
    # same result as the searchsorted rule in nearest_index_np; the arithmetic
    # guess is exact for uniform axes and walked into place otherwise
    n = axis.shape[0]
    if n == 1:
        return 0
    if f < lo or f > hi:
        return -1
    k = int(np.floor((f - axis[0]) * inv_step))
    if k < 0:
        k = 0
    elif k > n - 2:
        k = n - 2
    while k < n - 2 and axis[k + 1] < f:
        k += 1
    while k > 0 and axis[k] >= f:
        k -= 1
    if f - axis[k] <= axis[k + 1] - f:
        return k
    return k + 1


def _axis_limits(axis):
    if axis.shape[0] == 1:
        return -np.inf, np.inf, 0.0
    lo = axis[0] - 0.5 * (axis[1] - axis[0])
    hi = axis[-1] + 0.5 * (axis[-1] - axis[-2])
    return lo, hi, (axis.shape[0] - 1) / (axis[-1] - axis[0])


# --- synchrosqueezing --------------------------------------------------------

@njit
def _squeeze_nb(W, weights, sample_rate_hz, rel_threshold, axis, lo, hi, inv_step):
    n_sc, n_t = W.shape
    n_out = axis.shape[0]
    out = np.zeros((n_out, n_t), dtype=np.complex128)
    mag = np.empty((n_sc, n_t))
    peak = 0.0
    for i in range(n_sc):
        for j in range(n_t):
            m = abs(W[i, j])
            mag[i, j] = m
            if m > peak:
                peak = m
    if peak == 0.0:
        return out
    thr = rel_threshold * peak
    scale = sample_rate_hz / (2.0 * np.pi)
    for i in range(n_sc):
        wi = weights[i]
        for j in range(n_t):
            if not mag[i, j] > thr:
                continue
            w = W[i, j]
            if n_t == 1:
                dphi = 0.0
            elif j == 0:
                z = W[i, 1] * np.conj(W[i, 0])
                dphi = np.arctan2(z.imag, z.real)
            elif j == n_t - 1:
                z = W[i, j] * np.conj(W[i, j - 1])
                dphi = np.arctan2(z.imag, z.real)
            else:
                z = W[i, j + 1] * np.conj(W[i, j - 1])
                dphi = np.arctan2(z.imag, z.real) * 0.5
            k = _nearest_index(dphi * scale, axis, lo, hi, inv_step)
            if k >= 0:
                out[k, j] += w * wi
    return out


def squeeze_nb(W, weights, sample_rate_hz, rel_threshold, axis):
    lo, hi, inv_step = _axis_limits(axis)
    return _squeeze_nb(W, weights, float(sample_rate_hz), float(rel_threshold), axis,
                       lo, hi, inv_step)


def phase_frequency_np(W, sample_rate_hz, rel_threshold):
    """Central-difference phase derivative of each row, in Hz, and validity mask."""
    mag = np.abs(W)
    peak = mag.max() if mag.size else 0.0
    if peak > 0:
        valid = mag > rel_threshold * peak
    else:
        valid = np.zeros(W.shape, dtype=bool)
    # Im(dW/db / W) is the time derivative of arg W; the phase difference is
    # read from the angle of a product so no unwrapping is needed
    dphi = np.zeros(W.shape, dtype=float)
    n_t = W.shape[-1]
    if n_t >= 3:
        z = W[..., 2:] * np.conj(W[..., :-2])
        dphi[..., 1:-1] = np.arctan2(z.imag, z.real) * 0.5
    if n_t >= 2:
        z = W[..., 1] * np.conj(W[..., 0])
        dphi[..., 0] = np.arctan2(z.imag, z.real)
        z = W[..., -1] * np.conj(W[..., -2])
        dphi[..., -1] = np.arctan2(z.imag, z.real)
    freq = np.where(valid, dphi * (sample_rate_hz / (2.0 * np.pi)), 0.0)
    return freq, valid


def squeeze_np(W, weights, sample_rate_hz, rel_threshold, axis):
    freq, valid = phase_frequency_np(W, sample_rate_hz, rel_threshold)
    bins = nearest_index_np(freq, axis)
    bins[~valid] = -1
    return scatter_columns_np(W * weights[:, None], bins, axis.shape[0])


# --- scatter -----------------------------------------------------------------

@njit
def scatter_columns_nb(values, bins, n_out):
    """Add ``values[i, j]`` into ``out[bins[i, j], j]``; negative bins are skipped."""
    n_rows, n_cols = values.shape
    out = np.zeros((n_out, n_cols), dtype=np.complex128)
    for i in range(n_rows):
        for j in range(n_cols):
            k = bins[i, j]
            if k >= 0:
                out[k, j] += values[i, j]
    return out


def scatter_columns_np(values, bins, n_out):
    n_rows, n_cols = values.shape
    keep = bins >= 0
    flat = (bins * n_cols + np.arange(n_cols)[None, :])[keep]
    v = values[keep]
    re = np.bincount(flat, weights=v.real, minlength=n_out * n_cols)
    im = np.bincount(flat, weights=v.imag, minlength=n_out * n_cols)
    return (re + 1j * im).reshape(n_out, n_cols)


# --- band centroid frequency and root energy ---------------------------------

@njit
def band_centroid_nb(energy, freqs, edges):
    """Energy-weighted centroid frequency and root energy per band and column.

    ``energy`` is ``|T|**2`` with shape (bins, time). Bands with zero energy
    get ``if = 0`` and ``ia = 0`` and are reported through ``valid``.
    """
    n_bands = edges.shape[0] - 1
    n_cols = energy.shape[1]
    inst_f = np.zeros((n_bands, n_cols))
    inst_a = np.zeros((n_bands, n_cols))
    valid = np.zeros((n_bands, n_cols), dtype=np.bool_)
    for k in range(n_bands):
        lo = edges[k]
        hi = edges[k + 1]
        for j in range(n_cols):
            e = 0.0
            ef = 0.0
            for i in range(lo, hi):
                e += energy[i, j]
                ef += energy[i, j] * freqs[i]
            if e > 0.0:
                inst_f[k, j] = ef / e
                inst_a[k, j] = np.sqrt(e)
                valid[k, j] = True
    return inst_f, inst_a, valid


def band_centroid_np(energy, freqs, edges):
    n_bands = edges.shape[0] - 1
    n_cols = energy.shape[1]
    inst_f = np.zeros((n_bands, n_cols))
    inst_a = np.zeros((n_bands, n_cols))
    valid = np.zeros((n_bands, n_cols), dtype=bool)
    weighted = energy * freqs[:, None]
    for k in range(n_bands):
        lo, hi = edges[k], edges[k + 1]
        # sequential sums keep the accumulation order of the compiled kernel
        e = np.zeros(n_cols)
        ef = np.zeros(n_cols)
        for i in range(lo, hi):
            e = e + energy[i]
            ef = ef + weighted[i]
        ok = e > 0.0
        inst_f[k, ok] = ef[ok] / e[ok]
        inst_a[k, ok] = np.sqrt(e[ok])
        valid[k] = ok
    return inst_f, inst_a, valid


# --- delta deposit -----------------------------------------------------------

@njit
def deposit_nb(amp, bins, n_out):
    n_bands, n_cols = amp.shape
    out = np.zeros((n_out, n_cols))
    for k in range(n_bands):
        for j in range(n_cols):
            b = bins[k, j]
            if b >= 0:
                out[b, j] += amp[k, j]
    return out


def deposit_np(amp, bins, n_out):
    n_bands, n_cols = amp.shape
    out = np.zeros((n_out, n_cols))
    cols = np.arange(n_cols)
    for k in range(n_bands):
        b = bins[k]
        ok = b >= 0
        out[b[ok], cols[ok]] += amp[k, ok]
    return out


# --- mid-ranks ---------------------------------------------------------------

@njit
def midranks_nb(sorted_values, order):
    n = sorted_values.shape[0]
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        r = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def midranks_np(sorted_values, order):
    n = sorted_values.shape[0]
    starts = np.flatnonzero(np.r_[True, sorted_values[1:] != sorted_values[:-1]])
    ends = np.r_[starts[1:], n] - 1
    run_rank = 0.5 * (starts + ends) + 1.0
    sizes = ends - starts + 1
    ranks = np.empty(n)
    ranks[order] = np.repeat(run_rank, sizes)
    return ranks


# --- channel fusion ----------------------------------------------------------

@njit
def _sorted_sum(buf, n):
    # insertion sort in place, then ascending accumulation
    for a in range(1, n):
        v = buf[a]
        b = a - 1
        while b >= 0 and buf[b] > v:
            buf[b + 1] = buf[b]
            b -= 1
        buf[b + 1] = v
    total = 0.0
    for a in range(n):
        total += buf[a]
    return total


@njit
def fuse_nb(freq, amp, valid):
    """Weighted IF and root-sum-square IA over the channel axis.

    Sums run over values sorted ascending, so channel order never matters.
    """
    n_ch, n_b, n_t = freq.shape
    multi_if = np.zeros((n_b, n_t))
    multi_ia = np.zeros((n_b, n_t))
    w = np.empty(n_ch)
    buf = np.empty(n_ch)
    for k in range(n_b):
        for j in range(n_t):
            ref = np.inf
            for c in range(n_ch):
                if valid[c, k, j]:
                    w[c] = amp[c, k, j] * amp[c, k, j]
                else:
                    w[c] = 0.0
                buf[c] = w[c]
                if w[c] > 0.0 and freq[c, k, j] < ref:
                    ref = freq[c, k, j]
            w_sum = _sorted_sum(buf, n_ch)
            if not w_sum > 0.0:
                continue
            for c in range(n_ch):
                if w[c] > 0.0:
                    buf[c] = w[c] * (freq[c, k, j] - ref)
                else:
                    buf[c] = 0.0
            d_sum = _sorted_sum(buf, n_ch)
            multi_if[k, j] = ref + d_sum / w_sum
            multi_ia[k, j] = np.sqrt(w_sum)
    return multi_if, multi_ia


def fuse_np(freq, amp, valid):
    w = np.where(valid, amp * amp, 0.0)
    w_sum = np.zeros(w.shape[1:])
    for row in np.sort(w, axis=0):
        w_sum = w_sum + row
    active = w_sum > 0
    ref = np.where(w > 0, freq, np.inf).min(axis=0)
    ref = np.where(active, ref, 0.0)
    dev = np.where(w > 0, w * (freq - ref[None]), 0.0)
    d_sum = np.zeros(w.shape[1:])
    for row in np.sort(dev, axis=0):
        d_sum = d_sum + row
    multi_if = np.where(active, ref + d_sum / np.where(active, w_sum, 1.0), 0.0)
    multi_ia = np.where(active, np.sqrt(w_sum), 0.0)
    return multi_if, multi_ia


if USE_NUMBA:
    squeeze = squeeze_nb
    fuse = fuse_nb
    scatter_columns = scatter_columns_nb
    band_centroid = band_centroid_nb
    deposit = deposit_nb
    midranks = midranks_nb
else:
    squeeze = squeeze_np
    fuse = fuse_np
    scatter_columns = scatter_columns_np
    band_centroid = band_centroid_np
    deposit = deposit_np
    midranks = midranks_np
