"""Embedded analytic checks run by ``msstemg selftest``."""

import math
import sys

import numpy as np

from .dataio import SegmentationSpec, segment_array
from .features import TfDistribution, moment_features
from .msst import msst_array
from .signal import (BANDPASS_DEFAULT, NOTCH_DEFAULT, MultichannelSignal, apply_filter_zero_phase,
                     design_filter, fft_forward)
from .sst import WaveletSpec, cwt, linear_axis, phase_transform, synchrosqueeze
from .stats import chisq_survival, kruskal_wallis, rank_with_ties

# (x, df, Q) with Q from a 50-digit evaluation of the regularized upper
# incomplete gamma function
CHISQ_TABLE = (
    (0.5, 1, 0.47950012218695346),
    (3.84, 1, 0.050043521248705103),
    (10.0, 1, 0.0015654022580025497),
    (5.99, 2, 0.050036627086586283),
    (7.2, 2, 0.027323722447292558),
    (20.0, 5, 0.0012497305630313754),
    (92.19, 9, 5.9134046916918027e-16),
    (113.69, 9, 2.6025176645983704e-20),
    (95.49, 9, 1.2809626023322918e-16),
    (50.02, 9, 1.0679503015985662e-07),
    (150.0, 20, 6.285681673933381e-22),
)

FS = 2000.0


def _tone(f, n=500, fs=FS):
    return np.cos(2 * np.pi * f * np.arange(n) / fs)


def check_fft_impulse():
    return np.allclose(fft_forward([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)


def check_fft_parseval():
    x = np.random.default_rng(1).standard_normal(64) + 1j * np.random.default_rng(2).standard_normal(64)
    X = fft_forward(x)
    return math.isclose(np.sum(np.abs(x) ** 2), np.sum(np.abs(X) ** 2) / 64, rel_tol=1e-10)


def check_bandpass():
    f = design_filter(BANDPASS_DEFAULT, FS)
    h = np.abs(f.response([250.0, 1.0]))
    return 0.99 <= h[0] <= 1.01 and 20 * np.log10(h[1]) < -60


def check_notch():
    f = design_filter(NOTCH_DEFAULT, FS)
    # 6 s tone; the notch rings for ~0.22 s, so drop 0.5 s at each end
    sig = MultichannelSignal(_tone(50.0, 12000), FS)
    y = apply_filter_zero_phase(sig, f).samples[0, 1000:-1000]
    return np.sqrt(np.mean(y ** 2)) < 0.05 * np.sqrt(0.5)


def check_cwt_ridge():
    W = cwt(_tone(100.0), FS, WaveletSpec())
    ridge = W.freq_axis_hz[np.abs(W.coefficients).argmax(axis=0)][100:401]
    return bool(np.all(np.abs(np.log2(ridge / 100.0)) <= 1.0 / 16))


def check_phase_transform():
    W = cwt(_tone(100.0), FS, WaveletSpec())
    pt = phase_transform(W)
    k = np.abs(W.coefficients).argmax(axis=0)
    f = pt.freq_hz[k, np.arange(W.shape[1])][100:401]
    return bool(np.all((f >= 98) & (f <= 102)))


def check_sst_concentration():
    W = cwt(_tone(100.0), FS, WaveletSpec())
    T = synchrosqueeze(W, phase_transform(W), linear_axis())
    mag = np.abs(T.coefficients)
    k = int(np.abs(T.freq_axis_hz - 100.0).argmin())
    frac = mag[k - 2:k + 3].sum(axis=0) / mag.sum(axis=0)
    return bool(np.all(frac[100:401] >= 0.85))


def _four_tones():
    x = np.tile(_tone(100.0), (4, 1))
    x[1] *= 0.5
    x[2] += 0.3 * _tone(300.0)
    return x


def check_msst_identical():
    one = msst_array(_tone(100.0)[None, :], FS)
    four = msst_array(np.tile(_tone(100.0), (4, 1)), FS)
    return bool(np.array_equal(one > 0, four > 0) and np.allclose(four, 2 * one, rtol=1e-12, atol=0))


def check_msst_permutation():
    x = _four_tones()
    return bool(np.array_equal(msst_array(x, FS), msst_array(x[[2, 0, 3, 1]], FS)))


def check_msst_scaling():
    x = _four_tones()
    return bool(np.array_equal(msst_array(4.0 * x, FS), 4.0 * msst_array(x, FS)))


def check_moment_delta():
    P = np.zeros((3, 4))
    P[1, 2] = 1.0
    d = TfDistribution(P, np.array([50.0, 100.0, 150.0]), np.array([0.0, 0.05, 0.1, 0.15]))
    mean, var, skew, kurt, _ = moment_features(d)
    return math.isclose(mean, 10.0, rel_tol=1e-12) and var == 0 and skew == 0 and kurt == 0


def check_moment_symmetry():
    P = np.outer([1.0, 2.0, 1.0], [1.0, 3.0, 3.0, 1.0])
    d = TfDistribution(P / P.sum(), np.array([100.0, 200.0, 300.0]), np.arange(4) / FS)
    return abs(moment_features(d)[2]) < 1e-9


def check_kw_hand_example():
    r = kruskal_wallis([1, 2, 3, 4, 5, 6, 7, 8, 9], ["a"] * 3 + ["b"] * 3 + ["c"] * 3)
    return r.H == 7.2 and abs(r.p_value - math.exp(-3.6)) < 1e-12


def check_midranks():
    return bool(np.array_equal(rank_with_ties([5, 5, 9]), [1.5, 1.5, 3.0]))


def check_chisq_closed_form():
    return math.isclose(chisq_survival(2 * math.log(2), 2), 0.5, rel_tol=1e-12)


def check_segmentation():
    win = segment_array(np.zeros((4, 12000)), FS, SegmentationSpec())
    return win.shape == (76, 4, 500)


def check_rank_invariance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(60)
    g = np.repeat(list("XEF"), 20)
    z = (x - x.mean()) / x.std(ddof=1)
    return kruskal_wallis(x, g) == kruskal_wallis(z, g)


def make_chisq_check(table):
    def check_chisq_table():
        return all(math.isclose(chisq_survival(x, df), q, rel_tol=1e-9) for x, df, q in table)
    return check_chisq_table


def checks(chisq_table=CHISQ_TABLE):
    return [
        ("fft impulse", check_fft_impulse),
        ("fft parseval", check_fft_parseval),
        ("band-pass response", check_bandpass),
        ("notch rejection", check_notch),
        ("cwt tone ridge", check_cwt_ridge),
        ("phase transform tone", check_phase_transform),
        ("sst concentration", check_sst_concentration),
        ("msst identical channels", check_msst_identical),
        ("msst channel permutation", check_msst_permutation),
        ("msst scaling", check_msst_scaling),
        ("moment delta guards", check_moment_delta),
        ("moment symmetry", check_moment_symmetry),
        ("kruskal-wallis hand example", check_kw_hand_example),
        ("mid-ranks", check_midranks),
        ("chi-square closed form", check_chisq_closed_form),
        ("chi-square oracle table", make_chisq_check(chisq_table)),
        ("segmentation count", check_segmentation),
        ("z-score rank invariance", check_rank_invariance),
    ]


def run_selftest(chisq_table=CHISQ_TABLE, stream=None):
    """Run every check and print a pass/fail table; returns True when all pass."""
    stream = stream or sys.stdout
    items = checks(chisq_table)
    width = max(len(name) for name, _ in items)
    ok = True
    for name, fn in items:
        try:
            passed = bool(fn())
            detail = ""
        except Exception as exc:  # a crashing check is a failed check
            passed = False
            detail = f"  ({type(exc).__name__}: {exc})"
        ok &= passed
        print(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}{detail}", file=stream)
    print(f"{sum(1 for _ in items)} checks, {'all passed' if ok else 'FAILURES'}", file=stream)
    return ok
