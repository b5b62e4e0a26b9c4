import os
import subprocess
import sys

import numpy as np
import pytest

from polyharm import _kernels, balls
from polyharm.groups import Heisenberg, Lattice

needs_numba = pytest.mark.skipif("numba" not in _kernels.IMPLEMENTATIONS, reason="numba not installed")


@pytest.fixture(scope="module")
def graph():
    b = balls.enumerate_ball(Heisenberg(), radius=5)
    return b


@needs_numba
def test_backends_agree(graph):
    nb, npy = _kernels.IMPLEMENTATIONS["numba"], _kernels.IMPLEMENTATIONS["numpy"]
    rng = np.random.default_rng(1)
    ptr, idx = graph.indptr, graph.indices
    deg = np.diff(ptr).astype(np.float64)
    x = rng.standard_normal((graph.n, 3))
    np.testing.assert_allclose(nb["dirichlet_matvec"](ptr, idx, deg, x), npy["dirichlet_matvec"](ptr, idx, deg, x),
                               rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(nb["graph_laplacian"](ptr, idx, x), npy["graph_laplacian"](ptr, idx, x),
                               rtol=1e-13, atol=1e-13)
    m = graph.size(3)
    np.testing.assert_allclose(nb["graph_laplacian"](ptr[:m + 1], idx, x), npy["graph_laplacian"](ptr[:m + 1], idx, x),
                               rtol=1e-13, atol=1e-13)
    src = np.arange(0, graph.n, 37)
    assert np.array_equal(nb["bfs_many"](ptr, idx, src, -1), npy["bfs_many"](ptr, idx, src, -1))
    assert np.array_equal(nb["bfs_many"](ptr, idx, src, 2), npy["bfs_many"](ptr, idx, src, 2))
    vals = rng.integers(-5, 6, size=(graph.n, 2)).astype(np.float64)
    assert np.array_equal(nb["ball_layer_sums"](ptr, idx, src, vals, 3), npy["ball_layer_sums"](ptr, idx, src, vals, 3))
    F = rng.standard_normal((4, graph.n))
    np.testing.assert_allclose(nb["gram_prefix"](F, m), npy["gram_prefix"](F, m), rtol=1e-12)
    rhs = rng.standard_normal(graph.n)
    x0 = np.zeros(graph.n)
    np.testing.assert_allclose(nb["gauss_seidel"](ptr, idx, deg * 2, rhs, x0, 3),
                               npy["gauss_seidel"](ptr, idx, deg * 2, rhs, x0, 3), rtol=1e-12)


def test_ball_layer_sums_counts_ball_sizes():
    b = balls.enumerate_ball(Lattice(2), radius=6)
    ones = np.ones((b.n, 1))
    out = _kernels.ball_layer_sums(b.indptr, b.indices, np.array([0]), ones, 6)
    assert out[0, :, 0].tolist() == [2 * t * t + 2 * t + 1 for t in range(7)]


def _run(code, backend):
    env = dict(os.environ, POLYHARM_BACKEND=backend)
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


def test_numpy_backend_end_to_end():
    code = (
        "from polyharm import _kernels, dimension, harmonic, balls\n"
        "from polyharm.groups import Lattice\n"
        "assert _kernels.BACKEND == 'numpy'\n"
        "e = dimension.estimate_dimension(Lattice(2), 2, (4, 6))\n"
        "b = balls.enumerate_ball(Lattice(2), radius=11)\n"
        "s = harmonic.solve_dirichlet(b, 10, lambda x: x[:, 0]**2 - x[:, 1]**2, tol=1e-11)\n"
        "print(e.ranks[-1], s.residual <= 1e-11)\n"
    )
    res = _run(code, "numpy")
    assert res.returncode == 0, res.stderr
    assert res.stdout.split() == ["5", "True"]


def test_unknown_backend_rejected():
    res = _run("import polyharm._kernels", "cuda")
    assert res.returncode != 0
    assert "POLYHARM_BACKEND" in res.stderr
