"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on inputs shaped like one 250 ms, 4-channel analysis window.
The last section times a whole MSST window in two subprocesses, one per value
of MSSTEMG_DISABLE_NUMBA, since the flag is read at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from msstemg import kernels
from msstemg.msst import BandPartition
from msstemg.sst import WaveletSpec, cwt_batch, linear_axis, scale_weights

FS = 2000.0


def best_of(fn, repeat):
    fn()  # warm-up; also triggers JIT compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases():
    rng = np.random.default_rng(0)
    wav = WaveletSpec()
    axis = np.ascontiguousarray(linear_axis())
    W = np.ascontiguousarray(cwt_batch(rng.standard_normal((1, 500)), FS, wav)[0])
    w = scale_weights(wav.scales(), wav.voices_per_octave)
    E = rng.random((256, 500))
    edges = BandPartition.equal_width(256, 32).band_edges
    f = rng.uniform(5, 500, (4, 32, 500))
    a = rng.random((4, 32, 500))
    valid = a > 0.05
    amp = rng.random((32, 500))
    bins = rng.integers(-1, 256, (32, 500))
    vals = rng.integers(0, 50, 3800).astype(float)
    order = np.argsort(vals, kind="mergesort")
    sv = np.ascontiguousarray(vals[order])
    return [
        ("squeeze (1 channel)", lambda: kernels.squeeze_nb(W, w, FS, 1e-8, axis),
         lambda: kernels.squeeze_np(W, w, FS, 1e-8, axis)),
        ("band_centroid", lambda: kernels.band_centroid_nb(E, axis, edges),
         lambda: kernels.band_centroid_np(E, axis, edges)),
        ("fuse (4 channels)", lambda: kernels.fuse_nb(f, a, valid),
         lambda: kernels.fuse_np(f, a, valid)),
        ("deposit", lambda: kernels.deposit_nb(amp, bins, 256),
         lambda: kernels.deposit_np(amp, bins, 256)),
        ("midranks (3800 values)", lambda: kernels.midranks_nb(sv, order),
         lambda: kernels.midranks_np(sv, order)),
    ]


WINDOW_SNIPPET = """
import sys, time
import numpy as np
from msstemg.msst import msst_array
x = np.random.default_rng(1).standard_normal((4, 500))
msst_array(x, 2000.0)
best = float("inf")
for _ in range(int(sys.argv[1])):
    t0 = time.perf_counter()
    msst_array(x, 2000.0)
    best = min(best, time.perf_counter() - t0)
print(best)
"""


def window_time(disable, repeat):
    env = dict(os.environ, MSSTEMG_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WINDOW_SNIPPET, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    print(f"{'kernel':<24}{'numba ms':>10}{'numpy ms':>10}{'speed-up':>10}")
    for name, nb, npy in kernel_cases():
        t_nb, t_np = best_of(nb, args.repeat), best_of(npy, args.repeat)
        print(f"{name:<24}{1e3 * t_nb:>10.3f}{1e3 * t_np:>10.3f}{t_np / t_nb:>10.1f}")
    t_nb, t_np = window_time(False, args.repeat), window_time(True, args.repeat)
    print(f"{'MSST window (4 x 500)':<24}{1e3 * t_nb:>10.3f}{1e3 * t_np:>10.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
