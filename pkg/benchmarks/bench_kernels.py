"""Compare the numba and pure-numpy kernel backends.

The backend is fixed at import time by ENSC_USE_NUMBA, so each backend runs
in its own interpreter.  Compilation happens in an untimed warm-up call.

    python benchmarks/bench_kernels.py [--repeats 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from ensc import _kernels
from ensc.core import ElasticNetProblem, normalize_columns
from ensc.orgen import orgen_solve
from ensc.elastic_net import _solve_arrays, InnerSolverConfig

repeats = int(sys.argv[1])
rng = np.random.default_rng(0)
out = {"backend": _kernels.BACKEND}

# raw proximal gradient loop on a small dense problem (kernel-bound)
A = normalize_columns(rng.standard_normal((50, 400))).matrix
b = rng.standard_normal(50); b /= np.linalg.norm(b)
cfg = InnerSolverConfig(polish=False, tolerance=1e-13)
_solve_arrays(A, b, 0.5, 20.0, cfg)
t = []
for _ in range(repeats):
    t0 = time.perf_counter(); _solve_arrays(A, b, 0.5, 20.0, cfg); t.append(time.perf_counter() - t0)
out["apg_small"] = min(t)

# full ORGEN solve (BLAS-bound outer products dominate)
big = normalize_columns(rng.standard_normal((100, 20000)))
b2 = rng.standard_normal(100); b2 /= np.linalg.norm(b2)
p = ElasticNetProblem(b2, big, 0.9, 50.0)
orgen_solve(p)
t = []
for _ in range(repeats):
    t0 = time.perf_counter(); orgen_solve(p); t.append(time.perf_counter() - t0)
out["orgen_N20000"] = min(t)

scores = rng.random(200000); cand = np.arange(200000, dtype=np.int64)
_kernels.top_n(scores, cand, 3000)
t = []
for _ in range(repeats):
    t0 = time.perf_counter(); _kernels.top_n(scores, cand, 3000); t.append(time.perf_counter() - t0)
out["top_n_200000"] = min(t)
print(json.dumps(out))
"""


def run(flag, repeats):
    env = dict(os.environ, ENSC_USE_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeats)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    numba_res = run("1", args.repeats)
    numpy_res = run("0", args.repeats)
    print(f"{'case':<16}{'numpy [s]':>12}{numba_res['backend'] + ' [s]':>14}{'speedup':>10}")
    for key in ("apg_small", "orgen_N20000", "top_n_200000"):
        a, b = numpy_res[key], numba_res[key]
        print(f"{key:<16}{a:>12.4f}{b:>14.4f}{a / b:>9.2f}x")


if __name__ == "__main__":
    main()
