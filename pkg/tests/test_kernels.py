import json
import os
import subprocess
import sys

import numpy as np
import pytest

SCRIPT = r"""
import json, numpy as np
from ensc import _kernels
from ensc.core import ElasticNetProblem, normalize_columns
from ensc.elastic_net import solve_full
from ensc.orgen import orgen_solve
rng = np.random.default_rng(7)
out = {"backend": _kernels.BACKEND, "runs": []}
for lam in (0.3, 0.9, 1.0):
    A = normalize_columns(rng.standard_normal((20, 400)))
    b = rng.standard_normal(20); b /= np.linalg.norm(b)
    p = ElasticNetProblem(b, A, lam, 40.0)
    full = solve_full(p)
    sol, trace = orgen_solve(p)
    out["runs"].append({"full": full.coefficients.tolist(), "orgen": sol.coefficients.tolist(),
                        "outer": trace.outer_iterations})
print(json.dumps(out))
"""


def _run(flag):
    env = dict(os.environ, ENSC_USE_NUMBA=flag)
    r = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                       text=True, check=True)
    return json.loads(r.stdout)


def test_numpy_fallback_selected_by_flag():
    assert _run("0")["backend"] == "numpy"


def test_backends_agree():
    pytest.importorskip("numba")
    jit, ref = _run("1"), _run("0")
    assert jit["backend"] == "numba"
    for a, b in zip(jit["runs"], ref["runs"]):
        np.testing.assert_allclose(a["full"], b["full"], atol=1e-9)
        np.testing.assert_allclose(a["orgen"], b["orgen"], atol=1e-9)
        assert a["outer"] == b["outer"]
