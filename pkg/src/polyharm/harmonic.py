"""Discrete Laplacian ``L u(x) = sum_{y~x} (u(y) - u(x))`` and the Dirichlet problem on balls."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .balls import CayleyBall, boundary

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(eq=False)
class ScalarField:
    ball: CayleyBall
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.ball.n,):
            raise ValueError(f"field has {self.values.shape} values, ball has {self.ball.n} vertices")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def from_function(cls, ball: CayleyBall, fn) -> "ScalarField":
        """``fn`` maps an ``(n, k)`` coordinate array to ``n`` values."""
        return cls(ball, np.asarray(fn(ball.vertices), dtype=np.float64))

    def restrict(self, radius: int) -> "ScalarField":
        sub = self.ball.truncate(radius)
        return ScalarField(sub, self.values[:sub.n])

    def __mul__(self, alpha: float) -> "ScalarField":
        return ScalarField(self.ball, alpha * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class HarmonicCheck:
    ok: bool
    worst_vertex: int
    worst_value: float

    def __bool__(self):
        return self.ok


@dataclass(eq=False)
class DirichletSolution:
    field: ScalarField
    interior_radius: int
    residual: float
    tolerance: float
    iterations: int
    method: str


def laplacian(field: ScalarField, x: int) -> float:
    ball = field.ball
    nbrs = ball.neighbors(x)
    if len(nbrs) != len(ball.generators):
        raise ValueError(f"vertex {x} has neighbours outside the ball")
    u = field.values
    return float(u[nbrs].sum() - len(nbrs) * u[x])


def laplacian_on(field: ScalarField, r: int) -> np.ndarray:
    """``L u`` at every vertex of ``B(r)``; needs ``r <= radius - 1``."""
    ball = field.ball
    if r > ball.radius - 1:
        raise ValueError(f"Laplacian on B({r}) needs a ball of radius >= {r + 1}")
    m = ball.size(r)
    # rows of B(r) keep every neighbour, so the graph Laplacian is exact there
    return _kernels.graph_laplacian(ball.indptr[:m + 1], ball.indices, field.values)


def is_harmonic(field: ScalarField, interior_radius: int, tol: float = 0.0) -> HarmonicCheck:
    if interior_radius > field.ball.radius - 1:
        raise ValueError("interior radius must be at most radius - 1")
    lap = laplacian_on(field, interior_radius)
    worst = int(np.argmax(np.abs(lap)))
    val = float(lap[worst])
    return HarmonicCheck(abs(val) <= tol, worst, val)


def default_tolerance(boundary_values: np.ndarray) -> float:
    scale = float(np.max(np.abs(boundary_values))) if len(boundary_values) else 0.0
    return max(1e-12 * scale, 1e-14)


@dataclass
class _System:
    indptr: np.ndarray
    indices: np.ndarray
    deg: np.ndarray
    rhs: np.ndarray


def _interior_system(ball: CayleyBall, r: int, g: np.ndarray) -> _System:
    m = ball.size(r)
    n_b = ball.size(r + 1)
    ptr = ball.indptr[:m + 1]
    cols = ball.indices[:ptr[-1]]
    rows = np.repeat(np.arange(m), np.diff(ptr))
    inner = cols < m
    counts = np.bincount(rows[inner], minlength=m)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = cols[inner].astype(np.int64)
    full = np.zeros((n_b,) + g.shape[1:])
    full[m:n_b] = g
    rhs = np.zeros((m,) + g.shape[1:])
    np.add.at(rhs, rows[~inner], full[cols[~inner]])
    deg = np.full(m, float(len(ball.generators)))
    return _System(indptr, indices, deg, rhs)


def graph_system(indptr, indices, interior: np.ndarray, full_values: np.ndarray) -> tuple[_System, np.ndarray]:
    """Dirichlet system on an arbitrary graph: unknowns are ``interior`` vertices.

    ``full_values`` carries the boundary data on the remaining vertices (its
    interior entries are ignored). Returns the system and the interior index
    array in the order of the unknowns.
    """
    n = len(indptr) - 1
    unknown = np.flatnonzero(interior)
    pos = np.full(n, -1, dtype=np.int64)
    pos[unknown] = np.arange(len(unknown))
    counts = np.diff(indptr)[unknown]
    rows = np.repeat(np.arange(len(unknown)), counts)
    starts = indptr[unknown]
    cols = indices[np.concatenate([np.arange(a, a + c) for a, c in zip(starts, counts)])] \
        if len(unknown) else np.zeros(0, dtype=np.int64)
    inner = pos[cols] >= 0
    new_counts = np.bincount(rows[inner], minlength=len(unknown))
    sub_ptr = np.concatenate([[0], np.cumsum(new_counts)]).astype(np.int64)
    sub_idx = pos[cols[inner]]
    g = full_values if full_values.ndim == 2 else full_values[:, None]
    rhs = np.zeros((len(unknown), g.shape[1]))
    np.add.at(rhs, rows[~inner], g[cols[~inner]])
    return _System(sub_ptr, sub_idx, counts.astype(np.float64), rhs), unknown


def solve_graph_dirichlet(indptr, indices, interior: np.ndarray, full_values: np.ndarray,
                          tol: float | None = None) -> np.ndarray:
    """Harmonic extension on a general graph (degree may vary); returns all vertex values.

    Interior values are clamped into the range of the boundary data.
    """
    g = np.asarray(full_values, dtype=np.float64)
    squeeze = g.ndim == 1
    g = g[:, None] if squeeze else g
    interior = np.asarray(interior, dtype=bool)
    sys, unknown = graph_system(indptr, indices, interior, g)
    bd = g[~interior]
    tols = np.array([default_tolerance(bd[:, c]) if tol is None else tol for c in range(g.shape[1])])
    x0 = np.broadcast_to(bd.mean(axis=0), (len(unknown), g.shape[1])).copy()
    x, iters, ok = _cg(sys, x0, tols, 20 * len(unknown) + 1000)
    if not ok:
        x, _, ok = _gauss_seidel(sys, x, tols, 20 * len(unknown) + 1000)
        if not ok:
            raise SolverError("graph Dirichlet solve did not converge")
    out = g.copy()
    out[unknown] = np.clip(x, bd.min(axis=0), bd.max(axis=0))
    return out[:, 0] if squeeze else out


def _residual(sys: _System, x: np.ndarray) -> np.ndarray:
    return sys.rhs - _kernels.dirichlet_matvec(sys.indptr, sys.indices, sys.deg, x)


def _cg(sys: _System, x: np.ndarray, tol: np.ndarray, max_iter: int) -> tuple[np.ndarray, int, bool]:
    """Block CG (independent columns) with restarts on the true residual."""
    total = 0
    best = np.inf
    stalls = 0
    while total < max_iter:
        r = _residual(sys, x)
        res = np.abs(r).max(axis=0)
        if np.all(res <= tol):
            return x, total, True
        worst = float(np.max(res / tol))
        if worst > 0.5 * best:
            stalls += 1
            if stalls >= 3:
                return x, total, False
        else:
            stalls = 0
        best = min(best, worst)
        p = r.copy()
        rr = np.einsum("ij,ij->j", r, r)
        inner = min(max_iter - total, 4 * int(np.sqrt(len(x))) + 200)
        for _ in range(inner):
            Ap = _kernels.dirichlet_matvec(sys.indptr, sys.indices, sys.deg, p)
            pAp = np.einsum("ij,ij->j", p, Ap)
            alpha = np.divide(rr, pAp, out=np.zeros_like(rr), where=pAp > 0)
            x = x + alpha * p
            r = r - alpha * Ap
            total += 1
            if np.all(np.abs(r).max(axis=0) <= 0.05 * tol):
                break
            rr_new = np.einsum("ij,ij->j", r, r)
            beta = np.divide(rr_new, rr, out=np.zeros_like(rr), where=rr > 0)
            p = r + beta * p
            rr = rr_new
    r = _residual(sys, x)
    return x, total, bool(np.all(np.abs(r).max(axis=0) <= tol))


def _gauss_seidel(sys: _System, x: np.ndarray, tol: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, int, bool]:
    sweeps = 0
    x = x.copy()
    while sweeps < max_sweeps:
        for c in range(x.shape[1]):
            x[:, c] = _kernels.gauss_seidel(sys.indptr, sys.indices, sys.deg, sys.rhs[:, c], x[:, c], 20)
        sweeps += 20
        if np.all(np.abs(_residual(sys, x)).max(axis=0) <= tol):
            return x, sweeps, True
    return x, sweeps, False


def solve_dirichlet_many(ball: CayleyBall, r: int, boundary_values: np.ndarray, tol=None,
                         max_iter: int | None = None, method: str = "cg") -> list[DirichletSolution]:
    """Solve ``L u = 0`` on ``B(r)`` for each column of boundary data on ``∂B(r)``.

    Fields live on ``B(r+1)``. Interior values are clamped into the boundary
    range afterwards so the maximum principle holds exactly, not just to
    rounding; the reported residual is measured after the clamp.
    """
    if not 0 <= r < ball.radius:
        raise ValueError(f"interior radius {r} needs a ball of radius >= {r + 1}")
    g = np.asarray(boundary_values, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    n_bdry = len(boundary(ball, r))
    if g.shape[0] != n_bdry:
        raise ValueError(f"boundary data has {g.shape[0]} values, ∂B({r}) has {n_bdry} vertices")
    if not np.all(np.isfinite(g)):
        raise ValueError("boundary data must be finite")
    sub = ball.truncate(r + 1)
    m = sub.size(r)
    tols = np.array([default_tolerance(g[:, c]) if tol is None else float(tol) for c in range(g.shape[1])])
    lo, hi = g.min(axis=0), g.max(axis=0)

    if r == 0:
        # L u(center) = 0 forces the mean of the neighbours
        x = g.mean(axis=0, keepdims=True)
        iters, method_used = 0, "direct"
    else:
        sys = _interior_system(sub, r, g)
        x0 = np.broadcast_to(g.mean(axis=0), (m, g.shape[1])).copy()
        cap = max_iter if max_iter is not None else 20 * m + 1000
        method_used = method
        if method == "cg":
            x, iters, ok = _cg(sys, x0, tols, cap)
            if not ok:
                log.warning("CG stalled after %d iterations; falling back to Gauss-Seidel", iters)
                x, more, ok = _gauss_seidel(sys, x, tols, cap)
                iters += more
                method_used = "cg+gauss-seidel"
        elif method == "gauss-seidel":
            x, iters, ok = _gauss_seidel(sys, x0, tols, cap)
        else:
            raise ValueError(f"unknown method {method!r}")
        x = np.clip(x, lo, hi)

    out = []
    for c in range(g.shape[1]):
        vals = np.concatenate([x[:, c], g[:, c]])
        field = ScalarField(sub, vals)
        res = float(np.abs(laplacian_on(field, r)).max())
        if res > tols[c]:
            raise SolverError(f"Dirichlet solve did not reach tolerance {tols[c]:.3g} (residual {res:.3g})", res)
        out.append(DirichletSolution(field, r, res, float(tols[c]), iters, method_used))
    return out


def solve_dirichlet(ball: CayleyBall, r: int, boundary_values, tol=None, max_iter=None,
                    method: str = "cg") -> DirichletSolution:
    """Harmonic extension into ``B(r)`` of data given on ``∂B(r)``.

    ``boundary_values`` is an array aligned with ``boundary(ball, r)`` or a
    callable on the coordinate array of those vertices.
    """
    if callable(boundary_values):
        idx = boundary(ball, r).indices
        boundary_values = np.asarray(boundary_values(ball.vertices[idx]), dtype=np.float64)
    return solve_dirichlet_many(ball, r, np.asarray(boundary_values, dtype=np.float64), tol, max_iter, method)[0]


def harnack_ratio(field: ScalarField, n: int) -> float:
    """``max / min`` of a positive field over ``B(n)``."""
    if np.any(field.values <= 0):
        raise ValueError("Harnack ratio needs a strictly positive field")
    vals = field.values[:field.ball.size(n)]
    return float(vals.max() / vals.min())
