"""Measured constants for the Poincaré and mean value inequalities on Cayley balls.

Measured values are lower bounds on the optimal constants: a finite battery
of test fields can only witness how large the constant must be.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import balls, groups
from .balls import CayleyBall
from .harmonic import ScalarField, is_harmonic, solve_dirichlet_many

DEFAULT_SEED = 0x4841524D


@dataclass
class InequalityReport:
    kind: str
    scales: list[int]
    constants: list[float]
    field_ids: list[str]
    rows: list[tuple[int, float, str]] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    label: str = "lower bound on the optimal constant"

    def as_csv(self) -> str:
        lines = ["scale,constant,field_id"]
        lines += [f"{s},{c!r},{fid}" for s, c, fid in self.rows]
        return "\n".join(lines) + "\n"


def edge_energy(ball: CayleyBall, values: np.ndarray, radius: int) -> float:
    """``sum (u(x) - u(y))^2`` over unordered edges with both ends in ``B(radius)``."""
    m = ball.size(radius)
    ptr = ball.indptr[:m + 1]
    cols = ball.indices[:ptr[-1]]
    rows = np.repeat(np.arange(m), np.diff(ptr))
    keep = (cols < m) & (rows < cols)
    diff = values[rows[keep]] - values[cols[keep]]
    return float(math.fsum(diff * diff))


def poincare_constant(field: ScalarField, n: int) -> float:
    """Smallest ``C`` with ``sum_{B(n)} (u - mean)^2 <= C n^2 sum_{edges in B(3n)} (du)^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ball = field.ball
    if ball.radius < 3 * n:
        raise ValueError(f"field must be defined on B({3 * n})")
    u = field.values[:ball.size(n)]
    lhs = math.fsum((u - u.mean()) ** 2)
    rhs = edge_energy(ball, field.values, 3 * n)
    if rhs == 0.0:
        # a connected ball carries no nonconstant field of zero energy
        assert lhs == 0.0, "zero edge energy with nonzero variance on a connected ball"
        return 0.0
    return lhs / (n * n * rhs)


def mean_value_constant(field: ScalarField, R: int, tol: float | None = None) -> float:
    """``u(p)^2 |B_p(R)| / sum_{B_p(R)} u^2`` for ``p`` the ball's centre; NaN when u = 0 on the ball."""
    ball = field.ball
    check_r = min(R, ball.radius - 1)
    if check_r >= 0:
        scale = max(1.0, float(np.abs(field.values).max()))
        tol = 1e-9 * scale if tol is None else tol
        chk = is_harmonic(field, check_r, tol)
        if not chk:
            raise ValueError(f"field is not harmonic on B({check_r}): L u = {chk.worst_value:.3g} "
                             f"at vertex {chk.worst_vertex}")
    u = field.values[:ball.size(R)]
    denom = math.fsum(u * u)
    if denom == 0.0:
        return math.nan
    return float(u[0] ** 2 * len(u) / denom)


def monomial_exponents(k: int, d: int, min_degree: int = 0) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree in ``[min_degree, d]``, graded then lexicographic (descending)."""
    out = []
    for deg in range(min_degree, d + 1):
        out.extend(sorted((a for a in itertools.product(range(deg + 1), repeat=k) if sum(a) == deg),
                          reverse=True))
    return out


def monomial_values(coords: np.ndarray, alpha) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    out = np.ones(len(coords))
    for i, a in enumerate(alpha):
        if a:
            out = out * coords[:, i] ** a
    return out


def monomial_name(alpha) -> str:
    parts = [f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a]
    return "*".join(parts) or "1"


def _battery_fields(spec, n: int, kinds, n_random: int, seed: int) -> tuple[CayleyBall, list[tuple[str, ScalarField]]]:
    ball = balls.enumerate_ball(spec, radius=3 * n + 1)
    items: list[tuple[str, ScalarField]] = []
    if "monomials" in kinds:
        for alpha in monomial_exponents(groups.dim(spec), 2, min_degree=1):
            items.append((f"mono:{monomial_name(alpha)}", ScalarField(ball, monomial_values(ball.vertices, alpha))))
    if "dirichlet" in kinds and n_random > 0:
        nb = ball.size(3 * n + 1) - ball.size(3 * n)
        rng = np.random.default_rng([seed, n])
        data = rng.standard_normal((nb, n_random))
        sols = solve_dirichlet_many(ball, 3 * n, data)
        for i, s in enumerate(sols):
            items.append((f"dirichlet:{i}", s.field))
    return ball, items


def battery(spec, scales, kinds=("monomials", "dirichlet"), n_random: int = 4,
            seed: int = DEFAULT_SEED, jobs: int = 1) -> dict[str, InequalityReport]:
    """Poincaré and mean-value constants over a fixed battery of test fields, per scale."""
    kinds = tuple(kinds)
    if not kinds or not set(kinds) <= {"monomials", "dirichlet"}:
        raise ValueError(f"battery must be a nonempty subset of monomials/dirichlet, got {kinds!r}")
    scales = [int(s) for s in scales]
    if not scales:
        raise ValueError("no scales given")

    def one_scale(n):
        _, items = _battery_fields(spec, n, kinds, n_random, seed)
        if not items:
            raise ValueError("empty battery")
        pc, mv = [], []
        for fid, f in items:
            pc.append((n, poincare_constant(f, n), fid))
            harm = is_harmonic(f, n, 1e-9 * max(1.0, float(np.abs(f.values).max())))
            if harm:
                c = mean_value_constant(f, n)
                if not math.isnan(c):
                    mv.append((n, c, fid))
        return pc, mv

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one_scale, scales))
    else:
        results = [one_scale(n) for n in scales]

    reports = {}
    for kind, pick in (("poincare", 0), ("mean_value", 1)):
        rows = [row for res in results for row in res[pick]]
        consts, ids = [], []
        for n, res in zip(scales, results):
            per = res[pick]
            if per:
                best = max(per, key=lambda t: t[1])
                consts.append(best[1])
                ids.append(best[2])
            else:
                consts.append(math.nan)
                ids.append("")
        reports[kind] = InequalityReport(kind, scales, consts, ids, rows, seed)
    return reports
