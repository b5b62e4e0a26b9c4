"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba path is used when numba imports and ``POLYHARM_BACKEND`` is not
``numpy``. Both flavours take CSR graphs as ``(indptr, indices)`` int arrays
and must agree to rounding; ``benchmarks/bench_kernels.py`` times them
against each other.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

try:
    import numba
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_REQUESTED = os.environ.get("POLYHARM_BACKEND", "numba").strip().lower()
if _REQUESTED not in ("numba", "numpy"):
    raise ImportError(f"POLYHARM_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}")

BACKEND = "numba" if (numba is not None and _REQUESTED == "numba") else "numpy"


# --------------------------------------------------------------------------
# numpy reference implementations
# --------------------------------------------------------------------------

def _csr(indptr, indices, n_cols=None):
    n = len(indptr) - 1
    data = np.ones(len(indices), dtype=np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(n, n if n_cols is None else n_cols))


def np_dirichlet_matvec(indptr, indices, deg, x):
    """``deg * x - A x`` where ``A`` is the interior-restricted adjacency."""
    A = _csr(indptr, indices)
    if x.ndim == 1:
        return deg * x - A @ x
    return deg[:, None] * x - A @ x


def np_graph_laplacian(indptr, indices, x):
    """``sum_{j ~ i} (x_j - x_i)`` for the rows in ``indptr`` (may be a prefix)."""
    A = _csr(indptr, indices[:indptr[-1]], n_cols=len(x))
    deg = np.diff(indptr).astype(np.float64)
    m = len(deg)
    if x.ndim == 2:
        deg = deg[:, None]
    return A @ x - deg * x[:m]


def np_gauss_seidel(indptr, indices, deg, rhs, x, sweeps):
    # Plain Python loop; sequential dependence rules out vectorising.
    x = x.copy()
    n = len(deg)
    for _ in range(sweeps):
        for i in range(n):
            s = rhs[i]
            for k in range(indptr[i], indptr[i + 1]):
                s += x[indices[k]]
            x[i] = s / deg[i]
    return x


def np_bfs_many(indptr, indices, sources, maxdepth):
    """Distances (int32, -1 beyond ``maxdepth``) from each source to every vertex."""
    A = _csr(indptr, indices)
    limit = np.inf if maxdepth < 0 else float(maxdepth)
    out = np.empty((len(sources), len(indptr) - 1), dtype=np.int32)
    chunk = max(1, 2_000_000 // max(1, len(indptr) - 1))
    for lo in range(0, len(sources), chunk):
        src = np.asarray(sources[lo:lo + chunk])
        d = csgraph.dijkstra(A, directed=False, unweighted=True, indices=src, limit=limit)
        d[~np.isfinite(d)] = -1
        out[lo:lo + chunk] = d.astype(np.int32)
    return out


def np_ball_layer_sums(indptr, indices, sources, values, maxdepth):
    """Cumulative sums of ``values`` (n, m) over radius-t balls, t = 0..maxdepth."""
    n_src = len(sources)
    m = values.shape[1]
    out = np.zeros((n_src, maxdepth + 1, m), dtype=np.float64)
    chunk = max(1, 2_000_000 // max(1, len(indptr) - 1))
    for lo in range(0, n_src, chunk):
        d = np_bfs_many(indptr, indices, sources[lo:lo + chunk], maxdepth)
        rows, cols = np.nonzero(d >= 0)
        depth = d[rows, cols]
        layer = np.zeros((d.shape[0], maxdepth + 1, m))
        np.add.at(layer, (rows, depth), values[cols])
        out[lo:lo + chunk] = np.cumsum(layer, axis=1)
    return out


def np_gram_prefix(F, m):
    """``F[:, :m] @ F[:, :m].T`` accumulated in extended precision."""
    G = F[:, :m].astype(np.longdouble)
    return (G @ G.T).astype(np.float64)


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

if numba is not None:
    _JIT = dict(nogil=True, cache=True)

    @njit(**_JIT)
    def _nb_dirichlet_matvec_2d(indptr, indices, deg, x, out):
        n, m = x.shape
        for i in range(n):
            for c in range(m):
                s = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    s += x[indices[k], c]
                out[i, c] = deg[i] * x[i, c] - s
        return out

    @njit(**_JIT)
    def _nb_graph_laplacian_2d(indptr, indices, x, out):
        n = indptr.shape[0] - 1
        m = x.shape[1]
        for i in range(n):
            d = indptr[i + 1] - indptr[i]
            for c in range(m):
                s = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    s += x[indices[k], c]
                out[i, c] = s - d * x[i, c]
        return out

    @njit(**_JIT)
    def _nb_gauss_seidel(indptr, indices, deg, rhs, x, sweeps):
        n = deg.shape[0]
        for _ in range(sweeps):
            for i in range(n):
                s = rhs[i]
                for k in range(indptr[i], indptr[i + 1]):
                    s += x[indices[k]]
                x[i] = s / deg[i]
        return x

    @njit(**_JIT)
    def _nb_bfs_into(indptr, indices, source, maxdepth, dist, queue):
        dist[source] = 0
        queue[0] = source
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            dv = dist[v]
            if maxdepth >= 0 and dv >= maxdepth:
                continue
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    queue[tail] = w
                    tail += 1
        return tail

    @njit(**_JIT)
    def _nb_bfs_many(indptr, indices, sources, maxdepth):
        n = indptr.shape[0] - 1
        out = np.full((sources.shape[0], n), -1, dtype=np.int32)
        queue = np.empty(n, dtype=np.int64)
        for s in range(sources.shape[0]):
            _nb_bfs_into(indptr, indices, sources[s], maxdepth, out[s], queue)
        return out

    @njit(**_JIT)
    def _nb_ball_layer_sums(indptr, indices, sources, values, maxdepth):
        n = indptr.shape[0] - 1
        m = values.shape[1]
        out = np.zeros((sources.shape[0], maxdepth + 1, m))
        dist = np.full(n, -1, dtype=np.int32)
        queue = np.empty(n, dtype=np.int64)
        for s in range(sources.shape[0]):
            tail = _nb_bfs_into(indptr, indices, sources[s], maxdepth, dist, queue)
            for t in range(tail):
                v = queue[t]
                dv = dist[v]
                for c in range(m):
                    out[s, dv, c] += values[v, c]
                dist[v] = -1
            for t in range(1, maxdepth + 1):
                for c in range(m):
                    out[s, t, c] += out[s, t - 1, c]
        return out

    @njit(**_JIT)
    def _nb_gram_prefix(F, m):
        # Neumaier-compensated dot products, fixed summation order
        k = F.shape[0]
        G = np.empty((k, k))
        for a in range(k):
            for b in range(a, k):
                s = 0.0
                comp = 0.0
                for i in range(m):
                    term = F[a, i] * F[b, i]
                    t = s + term
                    if abs(s) >= abs(term):
                        comp += (s - t) + term
                    else:
                        comp += (term - t) + s
                    s = t
                G[a, b] = s + comp
                G[b, a] = s + comp
        return G


def nb_dirichlet_matvec(indptr, indices, deg, x):
    x2 = x if x.ndim == 2 else x[:, None]
    out = _nb_dirichlet_matvec_2d(indptr, indices, deg, np.ascontiguousarray(x2), np.empty_like(x2, dtype=np.float64))
    return out if x.ndim == 2 else out[:, 0]


def nb_graph_laplacian(indptr, indices, x):
    x2 = x if x.ndim == 2 else x[:, None]
    out = _nb_graph_laplacian_2d(indptr, indices, np.ascontiguousarray(x2, dtype=np.float64),
                                 np.empty((len(indptr) - 1, x2.shape[1])))
    return out if x.ndim == 2 else out[:, 0]


def nb_gauss_seidel(indptr, indices, deg, rhs, x, sweeps):
    return _nb_gauss_seidel(indptr, indices, deg, rhs, x.astype(np.float64).copy(), sweeps)


def nb_bfs_many(indptr, indices, sources, maxdepth):
    return _nb_bfs_many(indptr, indices, np.asarray(sources, dtype=np.int64), maxdepth)


def nb_ball_layer_sums(indptr, indices, sources, values, maxdepth):
    return _nb_ball_layer_sums(indptr, indices, np.asarray(sources, dtype=np.int64),
                               np.ascontiguousarray(values, dtype=np.float64), maxdepth)


def nb_gram_prefix(F, m):
    return _nb_gram_prefix(np.ascontiguousarray(F, dtype=np.float64), m)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

IMPLEMENTATIONS = {
    "numpy": dict(
        dirichlet_matvec=np_dirichlet_matvec,
        graph_laplacian=np_graph_laplacian,
        gauss_seidel=np_gauss_seidel,
        bfs_many=np_bfs_many,
        ball_layer_sums=np_ball_layer_sums,
        gram_prefix=np_gram_prefix,
    ),
}
if numba is not None:
    IMPLEMENTATIONS["numba"] = dict(
        dirichlet_matvec=nb_dirichlet_matvec,
        graph_laplacian=nb_graph_laplacian,
        gauss_seidel=nb_gauss_seidel,
        bfs_many=nb_bfs_many,
        ball_layer_sums=nb_ball_layer_sums,
        gram_prefix=nb_gram_prefix,
    )

_active = IMPLEMENTATIONS[BACKEND]
dirichlet_matvec = _active["dirichlet_matvec"]
graph_laplacian = _active["graph_laplacian"]
gauss_seidel = _active["gauss_seidel"]
bfs_many = _active["bfs_many"]
ball_layer_sums = _active["ball_layer_sums"]
gram_prefix = _active["gram_prefix"]
