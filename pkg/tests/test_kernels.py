import os
import subprocess
import sys

import numpy as np
import pytest

from momentpoly import _pykernels, kernels
from momentpoly.orbit import sample_array, OrbitProblem

cython = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def test_min_norm_point_simplex():
    x, w = _pykernels.min_norm_point(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(x, [0.5, 0.5]) and np.isclose(w.sum(), 1)
    x, _ = kernels.min_norm_point(np.array([[1.0, 1.0], [2.0, 0.0]]))
    assert np.allclose(x, [1, 1])


@cython
def test_backends_agree_on_projection():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        V = rng.standard_normal((15, d))
        X = 3 * rng.standard_normal((20, d))
        pc, dc = kernels.project_points(V, X)
        pp, dp = _pykernels.project_points(V, X)
        assert np.allclose(dc, dp, atol=1e-9)
        assert np.allclose(pc, pp, atol=1e-7)


@cython
@pytest.mark.parametrize("spectra", [[[1, 0], [1, 0]], [[2, 1, 0], [2, 1, 0]], [[3, 1, 0, -1], [2, 1, 0, -2], [1, 0, -1, -3]]])
def test_backends_agree_on_flow(spectra):
    p = OrbitProblem(spectra)
    A = sample_array(p, 5, 1)[0]
    c = kernels.double_bracket_descent(A, tol=1e-10)
    q = _pykernels.double_bracket_descent(A, 0.1, 1e-10, 100000, 0.5, 1.5, 10.0, True)
    assert c[4] and q[4]
    assert np.allclose(np.linalg.eigvalsh(c[0].sum(0)), np.linalg.eigvalsh(q[0].sum(0)), atol=1e-7)
    assert np.allclose(c[1][-1], q[1][-1], atol=1e-10)


def test_pure_python_switch():
    code = "from momentpoly import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, MOMENTPOLY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
