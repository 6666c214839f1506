"""Acceptance criteria 1-10, one test each, with a PASS/FAIL line per criterion."""

import filecmp
import math
import os
import time

import mpmath
import numpy as np
import pytest

from msstemg.config import PipelineConfig, with_overrides
from msstemg.dataio import SegmentationSpec, segment_array, synth_trial
from msstemg.features import (FEATURES, GESTURES, FeatureRecord, TfDistribution,
                              features_from_matrix, moment_features, read_feature_csv,
                              zscore_columns)
from msstemg.msst import BandEstimates, msst_array, multivariate_fuse
from msstemg.pipeline import run_pipeline
from msstemg.signal import design_filter, prefilter
from msstemg.sst import TimeFrequencyMatrix, WaveletSpec, linear_axis, sst
from msstemg.stats import (Scenario, chisq_isf, chisq_survival, kruskal_wallis, pairwise_kw,
                           read_pvalue_csv, scenario_runner, write_pvalue_csv)

from conftest import FS, linear_chirp, tone

mpmath.mp.dps = 50

SMALL = dict(synthetic=True, synth_subjects=2, synth_repetitions=1, synth_duration_s=2.5)


@pytest.fixture
def verdict(record_property):
    def report(number, name, ok, detail=""):
        line = f"criterion {number:>2} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        record_property("acceptance", line)
        assert ok, line
    return report


def best_time(fn, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def q_oracle(x, df):
    return float(mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(x) / 2, mpmath.inf, regularized=True))


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acc") / "w1"
    cfg = PipelineConfig(out=str(out), **SMALL)
    run_pipeline(cfg)
    return cfg, out


def test_01_segmentation_count(verdict):
    x = np.zeros((4, 12000))
    win, dt = best_time(lambda: segment_array(x, FS, SegmentationSpec()))
    ok = win.shape == (76, 4, 500) and dt < 1e-3
    verdict(1, "segmentation count", ok, f"{win.shape[0]} windows of {win.shape[2]}, {dt * 1e3:.3f} ms")


def test_02_chi_square_engine(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for p in (5.9155e-16, 2.5985e-20, 1.2819e-16, 1.0664e-07):
        x = chisq_isf(p, 9)
        worst = max(worst, abs(chisq_survival(x, 9) - p) / p)
    dt = time.perf_counter() - t0
    grid = [(x, df) for df in range(1, 21) for x in np.geomspace(0.1, 150.0, 30)]
    ours = [chisq_survival(x, df) for x, df in grid]
    oracle_err = max(abs(q - q_oracle(x, df)) / q_oracle(x, df) for (x, df), q in zip(grid, ours))
    ok = worst < 1e-3 and oracle_err < 1e-9 and dt < 1.0
    verdict(2, "chi-square engine", ok,
            f"isf round trip {worst:.1e}, oracle rel err {oracle_err:.1e}, {dt:.3f} s")


def test_03_kw_hand_example(verdict):
    r = kruskal_wallis([1, 2, 3, 4, 5, 6, 7, 8, 9], ["a"] * 3 + ["b"] * 3 + ["c"] * 3)
    oracle = q_oracle(7.2, 2)
    ok = r.H == 7.2 and abs(r.p_value - oracle) < 1e-6
    verdict(3, "Kruskal-Wallis hand example", ok, f"H = {r.H!r}, p = {r.p_value:.6f}")


def test_04_msst_identities(verdict, rng):
    f = rng.uniform(5, 500, (32, 500))
    a = rng.uniform(0, 2, (32, 500))
    one = BandEstimates(f, a, a > 0)
    f1, a1 = multivariate_fuse([one])
    f4, a4 = multivariate_fuse([one] * 4)
    ident = np.array_equal(f4, f1) and np.allclose(a4, 2 * a1, rtol=1e-12, atol=0)
    x = np.tile(tone(100.0), (4, 1))
    m1 = msst_array(x[:1], FS)
    m4 = msst_array(x, FS)
    ident &= np.array_equal(m1 > 0, m4 > 0) and np.allclose(m4, 2 * m1, rtol=1e-12, atol=0)

    y = rng.standard_normal((4, 500))
    base = msst_array(y, FS)
    perm = all(np.array_equal(base, msst_array(y[p], FS)) for p in ([1, 0, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]))

    s3 = msst_array(3.0 * y, FS)
    rel = np.abs(s3 - 3.0 * base).max() / np.abs(3.0 * base).max()
    scale = np.array_equal(s3 > 0, base > 0) and np.allclose(s3, 3.0 * base, rtol=1e-12, atol=0)
    scale &= np.array_equal(msst_array(4.0 * y, FS), 4.0 * base)
    verdict(4, "MSST identities", ident and perm and scale,
            f"identical={ident}, permutation={perm}, x3 max rel dev {rel:.1e}, x4 bitwise")


def test_05_sst_localization(verdict):
    axis = linear_axis()
    t0 = time.perf_counter()
    T = sst(tone(100.0), FS, WaveletSpec(), axis)
    mag = np.abs(T.coefficients)
    k = int(np.abs(axis - 100.0).argmin())
    frac = (mag[k - 2:k + 3].sum(axis=0) / mag.sum(axis=0))[25:475]
    x, f_true = linear_chirp(50.0, 200.0, n=2000)
    C = sst(x, FS, WaveletSpec(), axis)
    ridge = axis[np.abs(C.coefficients).argmax(axis=0)]
    err = np.abs(ridge - f_true)[200:1800].max()
    dt = time.perf_counter() - t0
    ok = frac.min() >= 0.85 and err <= 5.0 and dt < 5.0
    verdict(5, "SST localization", ok,
            f"min interior mass {frac.min():.3f}, chirp ridge error {err:.2f} Hz, {dt:.2f} s")


def test_06_moment_guards(verdict):
    P = np.zeros((3, 4))
    P[1, 2] = 1.0
    f = np.array([50.0, 100.0, 150.0])
    t = np.array([0.0, 0.05, 0.1, 0.15])
    delta = moment_features(TfDistribution(P, f, t))[:4]
    ok_delta = math.isclose(delta[0], t[2] * f[1], rel_tol=1e-12) and delta[1:] == (0.0, 0.0, 0.0)
    S = np.outer([1.0, 2.0, 1.0], [1.0, 3.0, 3.0, 1.0])
    skew = moment_features(TfDistribution(S / S.sum(), np.array([100.0, 200.0, 300.0]),
                                          np.arange(4) / FS))[2]
    verdict(6, "moment guards and symmetry", ok_delta and abs(skew) < 1e-9,
            f"delta features {delta}, symmetric skewness {skew:.1e}")


def test_07_rank_invariance(verdict, small_run, tmp_path):
    _, out = small_run
    raw = read_feature_csv(out / "features.csv")
    z = zscore_columns(raw)
    same = True
    for f in FEATURES:
        a, b = tmp_path / f"raw_{f}.csv", tmp_path / f"z_{f}.csv"
        write_pvalue_csv(a, *pairwise_kw(raw, f)[:2])
        write_pvalue_csv(b, *pairwise_kw(z, f)[:2])
        same &= filecmp.cmp(a, b, shallow=False)
        same &= filecmp.cmp(b, out / f"pairwise_{f}.csv", shallow=False)
    verdict(7, "rank invariance", same, "pairwise CSVs byte-identical for raw and z-scored features")


def null_pool(n_trials, seed=2024):
    """Features of one central window from each of ``n_trials`` independent null trials."""
    cfg = PipelineConfig(synthetic=True)
    filters = [design_filter(s, FS) for s in cfg.filter_specs()]
    axis = cfg.out_axis()
    t = np.arange(500) / FS
    feats = np.empty((n_trials, 4))
    for i in range(n_trials):
        sig = prefilter(synth_trial(seed, i + 1, "X", 1, "null", 2.5), filters)
        win = segment_array(sig.samples, FS, cfg.segmentation())
        M = msst_array(np.ascontiguousarray(win[win.shape[0] // 2]), FS)
        feats[i] = features_from_matrix(TimeFrequencyMatrix(M, axis, t, FS))[:4]
    return feats


def test_08_null_calibration(verdict):
    t0 = time.perf_counter()
    pool = null_pool(1000)
    rng = np.random.default_rng(8)
    runs, per_group = 200, 10
    hits = dict.fromkeys(FEATURES, 0)
    for r in range(runs):
        idx = rng.choice(len(pool), size=per_group * len(GESTURES), replace=False)
        table = [FeatureRecord(1 + k // per_group, GESTURES[k // per_group], 1, k, *pool[i])
                 for k, i in enumerate(idx)]
        report = scenario_runner(table, Scenario("inter"))
        for f in FEATURES:
            hits[f] += report.results[f][0].p_value < 0.05
    dt = time.perf_counter() - t0
    rates = {f: hits[f] / runs for f in FEATURES}
    ok = all(0.01 <= v <= 0.10 for v in rates.values()) and dt < 120
    verdict(8, "null calibration", ok,
            ", ".join(f"{f} {100 * v:.1f}%" for f, v in rates.items()) + f", {dt:.0f} s")


def test_09_dataset_structure(verdict, tmp_path):
    manifest = os.environ.get("MSSTEMG_DATASET_MANIFEST")
    if manifest:
        cfg = PipelineConfig(manifest=manifest, out=str(tmp_path / "data"))
        source = "user dataset"
    else:
        cfg = PipelineConfig(out=str(tmp_path / "data"), **dict(SMALL, synth_mode="gesture"))
        source = "synthetic stand-in; set MSSTEMG_DATASET_MANIFEST for real data"
    out = run_pipeline(cfg)
    import json
    with open(os.path.join(out, "kw_summary.txt")) as fh:
        summary = json.load(fh)
    overall = [t for t in summary["tests"]]
    n_pairs = 0
    ok = len(overall) == 4 and all(t["df"] == 9 and len(t["groups"]) == 10 for t in overall)
    for f in FEATURES:
        g, P = read_pvalue_csv(os.path.join(out, f"pairwise_{f}.csv"))
        n_pairs += len(np.triu_indices(len(g), 1)[0])
        ok &= len(g) == 10
    ok &= n_pairs == 180
    verdict(9, "dataset output structure", ok, f"4 overall + {n_pairs} pairwise p-values, {source}")


def test_10_determinism(verdict, small_run, tmp_path):
    cfg, out = small_run
    other = tmp_path / "w3"
    run_pipeline(with_overrides(cfg, workers=3, out=str(other)))
    cmp = filecmp.dircmp(out, other)
    _, mismatch, errors = filecmp.cmpfiles(out, other, cmp.common_files, shallow=False)
    ok = not (cmp.left_only or cmp.right_only or mismatch or errors)
    verdict(10, "determinism", ok, f"{len(cmp.common_files)} files identical for workers 1 and 3")
