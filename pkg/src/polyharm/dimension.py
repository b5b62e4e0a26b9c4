"""Dimension of spaces of polynomial-growth harmonic functions.

Two independent routes:

* numerical: harmonic extensions of monomial boundary data from a big ball,
  restricted to an inner ball, counted by the numerical rank of their Gram
  matrix ``A_R(u, v) = sum_{B(R)} u v``;
* exact (Z^D only): the null space of the Laplacian acting on polynomials of
  degree <= d, by fraction-free elimination over the integers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, balls, groups
from .harmonic import ScalarField, solve_dirichlet_many
from .inequalities import monomial_exponents, monomial_values

log = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-8
DEFAULT_SCHEDULE = (8, 12, 16, 20)
BUFFER = 3


class BelowR1(ValueError):
    """The Gram matrix at the requested radius is not positive definite."""


# --------------------------------------------------------------------------
# Gram matrices
# --------------------------------------------------------------------------

@dataclass(eq=False)
class GramMatrix:
    fields: list[ScalarField]
    R: int
    entries: np.ndarray

    def __post_init__(self):
        E = self.entries
        if not np.allclose(E, E.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(E).max()))):
            raise ValueError("Gram matrix is not symmetric")
        ev = np.linalg.eigvalsh(E) if len(E) else np.zeros(0)
        eps = 1e-10 * float(np.trace(E))
        if len(ev) and ev[0] < -eps:
            raise ValueError(f"Gram matrix is not positive semidefinite (min eigenvalue {ev[0]:.3g})")
        self.eigenvalues = ev

    @property
    def k(self) -> int:
        return len(self.entries)


def gram(fields: list[ScalarField], R: int) -> GramMatrix:
    """``A_R(u_i, u_j)`` summed over ``B_p(R)``, compensated accumulation."""
    if not fields:
        raise ValueError("no fields")
    ball = fields[0].ball
    for f in fields[1:]:
        if f.ball is not ball and not f.ball.same_as(ball):
            raise ValueError("fields live on different balls")
    if R > ball.radius:
        raise ValueError(f"R={R} exceeds the ball radius {ball.radius}")
    F = np.stack([f.values for f in fields])
    return GramMatrix(list(fields), R, _kernels.gram_prefix(F, ball.size(R)))


def numerical_rank(g: GramMatrix | np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Eigenvalues above ``rel_tol * lambda_max``; zero matrix has rank 0."""
    ev = g.eigenvalues if isinstance(g, GramMatrix) else np.linalg.eigvalsh(np.asarray(g, dtype=float))
    if len(ev) == 0:
        return 0
    lam_max = float(ev[-1])
    if lam_max <= 0:
        return 0
    return int(np.sum(ev > rel_tol * lam_max))


# --------------------------------------------------------------------------
# exact oracle
# --------------------------------------------------------------------------

@dataclass
class PolynomialTable:
    D: int
    d: int
    exponents: list[tuple[int, ...]]
    matrix: list[list[int]]  # column alpha expands L(x^alpha) in the monomial basis


def _second_difference(k: int) -> dict[int, int]:
    """``(x+1)^k + (x-1)^k - 2 x^k`` as ``{power: coefficient}``."""
    return {k - j: 2 * math.comb(k, j) for j in range(2, k + 1, 2)}


def polynomial_table(D: int, d: int) -> PolynomialTable:
    if D < 1 or d < 0:
        raise ValueError("need D >= 1 and d >= 0")
    exps = monomial_exponents(D, d)
    pos = {a: i for i, a in enumerate(exps)}
    M = [[0] * len(exps) for _ in exps]
    for col, alpha in enumerate(exps):
        for i in range(D):
            for power, coef in _second_difference(alpha[i]).items():
                beta = alpha[:i] + (power,) + alpha[i + 1:]
                M[pos[beta]][col] += coef
    return PolynomialTable(D, d, exps, M)


def bareiss_rank(matrix: list[list[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    A = [list(map(int, row)) for row in matrix]
    if not A or not A[0]:
        return 0
    n_rows, n_cols = len(A), len(A[0])
    rank = 0
    prev = 1
    for c in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if A[r][c] != 0), None)
        if pivot is None:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        p = A[rank][c]
        for r in range(rank + 1, n_rows):
            a = A[r][c]
            row_r, row_p = A[r], A[rank]
            for j in range(c, n_cols):
                # exact by Sylvester's identity
                row_r[j] = (p * row_r[j] - a * row_p[j]) // prev
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


def symbolic_kernel_dim(D: int, d: int) -> int:
    """Exact ``dim {p : deg p <= d, L p = 0}`` on Z^D with the standard generators."""
    table = polynomial_table(D, d)
    return len(table.exponents) - bareiss_rank(table.matrix)


# --------------------------------------------------------------------------
# numerical estimate
# --------------------------------------------------------------------------

def candidate_fields(spec, d: int, R_outer: int, R_inner: int, generators=None,
                     cache_dir=None, memory_cap=balls.DEFAULT_MEMORY_CAP) -> list[ScalarField]:
    """Harmonic extensions of the monomials ``x^alpha``, ``|alpha| <= d``, restricted to ``B(R_inner)``.

    Monomials are in the group's integer coordinates, unscaled: the rank
    threshold is relative to the largest eigenvalue, and rescaling columns
    moves the boundary-layer directions closer to it.
    """
    if R_outer < BUFFER * R_inner:
        raise ValueError(f"R_outer={R_outer} must be >= {BUFFER} * R_inner={R_inner}")
    ball = balls.cached_ball(spec, generators, None, R_outer + 1, cache_dir, memory_cap)
    bidx = balls.boundary(ball, R_outer).indices
    coords = ball.vertices[bidx]
    exps = monomial_exponents(groups.dim(spec), d)
    data = np.stack([monomial_values(coords, a) for a in exps], axis=1)
    sols = solve_dirichlet_many(ball, R_outer, data)
    return [s.field.restrict(R_inner) for s in sols]


@dataclass
class DimensionEstimate:
    spec: groups.GroupSpec
    d: int
    schedule: list[int]
    ranks: list[int]
    eigenvalues: list[list[float]]
    rel_tol: float
    n_candidates: int
    saturated: bool
    saturated_rank: int | None
    oracle: int | None
    notes: list[str] = field(default_factory=list)

    @property
    def first_definite_R(self) -> int | None:
        """First radius where the full candidate Gram matrix is numerically positive definite."""
        for R, ev in zip(self.schedule, self.eigenvalues):
            if ev and ev[0] > self.rel_tol * ev[-1]:
                return R
        return None

    def ranks_at(self, rel_tol: float) -> list[int]:
        return [numerical_rank(np.diag(ev), rel_tol) if len(ev) else 0 for ev in map(np.asarray, self.eigenvalues)]

    def as_dict(self) -> dict:
        return {
            "spec": groups.spec_to_dict(self.spec),
            "d": self.d,
            "schedule": self.schedule,
            "ranks": self.ranks,
            "saturated": self.saturated,
            "saturated_rank": self.saturated_rank,
            "first_definite_R": self.first_definite_R,
            "oracle": self.oracle if self.oracle is not None else "no oracle",
            "rel_tol": self.rel_tol,
            "n_candidates": self.n_candidates,
            "notes": self.notes,
        }


def has_oracle(spec, generators=None) -> bool:
    return isinstance(spec, groups.Lattice) and (
        generators is None or generators.convention == groups.GENERATOR_CONVENTION)


def check_schedule(spec, d: int, schedule) -> None:
    schedule = list(schedule)
    if len(schedule) < 2:
        raise ValueError("schedule needs at least two radii")
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise ValueError("schedule must be positive and strictly increasing")
    n_cand = math.comb(groups.dim(spec) + d, d)
    if n_cand >= 10**6:
        raise ValueError(f"schedule insufficient for degree {d}: {n_cand} candidates")
    smallest = balls.enumerate_ball(spec, radius=schedule[0]).n
    if n_cand > smallest:
        raise ValueError(f"schedule insufficient for degree {d}: {n_cand} candidates exceed "
                         f"|B({schedule[0]})| = {smallest}")


def estimate_dimension(spec, d: int, schedule=DEFAULT_SCHEDULE, rel_tol: float = DEFAULT_REL_TOL,
                       generators=None, cache_dir=None, memory_cap=balls.DEFAULT_MEMORY_CAP) -> DimensionEstimate:
    """Numerical rank of candidate Gram matrices along the schedule of inner radii."""
    schedule = [int(r) for r in schedule]
    check_schedule(spec, d, schedule)
    ranks, spectra = [], []
    n_cand = 0
    for R in schedule:
        fields = candidate_fields(spec, d, BUFFER * R, R, generators, cache_dir, memory_cap)
        n_cand = len(fields)
        g = gram(fields, R)
        spectra.append([float(x) for x in g.eigenvalues])
        ranks.append(numerical_rank(g, rel_tol))
        log.info("d=%d R=%d rank=%d", d, R, ranks[-1])
    saturated = ranks[-1] == ranks[-2]
    notes = []
    if not saturated:
        notes.append(f"unsaturated: ranks {ranks[-2]} and {ranks[-1]} on the last two radii")
    oracle = symbolic_kernel_dim(spec.D, d) if has_oracle(spec, generators) else None
    if oracle is None:
        notes.append("no oracle")
    return DimensionEstimate(spec, d, schedule, ranks, spectra, rel_tol, n_cand, saturated,
                             ranks[-1] if saturated else None, oracle, notes)


# --------------------------------------------------------------------------
# energy probe
# --------------------------------------------------------------------------

@dataclass
class EnergyProbe:
    beta: float
    R: int
    k: int
    ratio: float

    def lower_bound(self, d: int, D: int, delta: float) -> float:
        """``k * beta^{-(2d + D + delta)}``."""
        return self.k * self.beta ** (-(2 * d + D + delta))


def energy_probe(fields: list[ScalarField], R: int, beta: float, rel_tol: float = DEFAULT_REL_TOL) -> EnergyProbe:
    """Trace of ``A_R`` in an ``A_{beta R}``-orthonormal basis of the span of ``fields``.

    Equals ``tr(G_{beta R}^{-1} G_R)``, so it does not depend on the basis.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    R_big = int(math.floor(beta * R))
    g_big = gram(fields, R_big)
    ev = g_big.eigenvalues
    if ev[0] <= rel_tol * ev[-1]:
        raise BelowR1(f"A_{R_big} is not positive definite on the span (R below R1(K))")
    g_small = gram(fields, R).entries
    L = np.linalg.cholesky(g_big.entries)
    X = np.linalg.solve(L, g_small)
    M = np.linalg.solve(L, X.T)
    return EnergyProbe(float(beta), R, len(fields), float(np.trace(M)))
