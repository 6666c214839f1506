import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from msstemg import _accel, kernels
from msstemg.sst import WaveletSpec, cwt_batch, linear_axis, scale_weights

from conftest import FS

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

AXIS = np.ascontiguousarray(linear_axis())


def test_nearest_index_agrees(rng):
    f = np.concatenate([rng.uniform(-10, 520, 2000), AXIS, AXIS[:-1] + np.diff(AXIS) / 2,
                        [AXIS[0] - 0.5 * (AXIS[1] - AXIS[0]), AXIS[-1] + 0.5 * (AXIS[1] - AXIS[0])]])
    lo, hi, inv = kernels._axis_limits(AXIS)
    got = np.array([kernels._nearest_index(v, AXIS, lo, hi, inv) for v in f])
    np.testing.assert_array_equal(got, kernels.nearest_index_np(f, AXIS))


def test_squeeze_agrees(rng):
    wav = WaveletSpec()
    W = np.ascontiguousarray(cwt_batch(rng.standard_normal((1, 500)), FS, wav)[0])
    w = scale_weights(wav.scales(), wav.voices_per_octave)
    a = kernels.squeeze_nb(W, w, FS, 1e-8, AXIS)
    b = kernels.squeeze_np(W, w, FS, 1e-8, AXIS)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15 * np.abs(b).max())


@given(arrays(np.float64, (6, 9), elements=st.floats(-5, 5)),
       arrays(np.int64, (6, 9), elements=st.integers(-1, 4)))
def test_scatter_agrees(v, bins):
    vals = np.ascontiguousarray(v + 1j * v[::-1])
    np.testing.assert_allclose(kernels.scatter_columns_nb(vals, bins, 5),
                               kernels.scatter_columns_np(vals, bins, 5), rtol=1e-14, atol=1e-14)


@given(arrays(np.float64, (16, 7), elements=st.floats(0, 100)))
def test_band_centroid_agrees(E):
    freqs = np.linspace(5, 500, 16)
    edges = np.array([0, 3, 8, 16])
    for x, y in zip(kernels.band_centroid_nb(E, freqs, edges), kernels.band_centroid_np(E, freqs, edges)):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-13)


@given(arrays(np.float64, (5, 4, 6), elements=st.floats(5, 500)),
       arrays(np.float64, (5, 4, 6), elements=st.floats(0, 100)))
def test_fuse_agrees_bitwise(f, a):
    valid = a > 0
    for x, y in zip(kernels.fuse_nb(f, a, valid), kernels.fuse_np(f, a, valid)):
        np.testing.assert_array_equal(x, y)


@given(arrays(np.float64, (4, 10), elements=st.floats(0, 10)),
       arrays(np.int64, (4, 10), elements=st.integers(-1, 7)))
def test_deposit_agrees(amp, bins):
    np.testing.assert_allclose(kernels.deposit_nb(amp, bins, 8), kernels.deposit_np(amp, bins, 8),
                               rtol=1e-14, atol=0)


@given(arrays(np.float64, st.integers(1, 50), elements=st.integers(0, 6).map(float)))
def test_midranks_agree(v):
    order = np.argsort(v, kind="mergesort")
    s = np.ascontiguousarray(v[order])
    np.testing.assert_array_equal(kernels.midranks_nb(s, order), kernels.midranks_np(s, order))


SNIPPET = """
import sys, numpy as np
from msstemg import backend
from msstemg.msst import msst_array
x = np.random.default_rng(5).standard_normal((4, 500))
np.save(sys.argv[1], msst_array(x, 2000.0))
print(backend())
"""


def test_env_flag_selects_numpy_backend(tmp_path):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, MSSTEMG_DISABLE_NUMBA=flag)
        path = tmp_path / f"m{flag}.npy"
        res = subprocess.run([sys.executable, "-c", SNIPPET, str(path)], env=env,
                             capture_output=True, text=True, check=True)
        out[flag] = (res.stdout.strip(), np.load(path))
    assert out["0"][0] == "numba" and out["1"][0] == "numpy"
    np.testing.assert_allclose(out["0"][1], out["1"][1], rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(out["0"][1] > 0, out["1"][1] > 0)


def test_benchmark_script_runs():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    res = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
                          "--repeat", "1"], capture_output=True, text=True, check=True)
    lines = res.stdout.strip().splitlines()
    assert lines[0].startswith("kernel") and len(lines) == 7
