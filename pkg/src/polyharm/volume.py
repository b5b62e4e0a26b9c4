"""Growth-function statistics: doubling, Pansu ratios, degree fit, RVC threshold."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import balls
from .groups import GroupSpec


@dataclass(frozen=True)
class GrowthSeries:
    spec: GroupSpec
    generators: balls.GeneratingSet
    beta: tuple[int, ...]
    D_nominal: int | None = None

    def __post_init__(self):
        if not self.beta or self.beta[0] != 1:
            raise ValueError("beta(0) must be 1")
        s = len(self.generators)
        for n in range(1, len(self.beta)):
            prev, cur = self.beta[n - 1], self.beta[n]
            if cur <= prev:
                raise ValueError(f"growth series not strictly increasing at n={n}")
            if cur > prev * (s + 1):
                raise ValueError(f"beta({n}) exceeds the BFS expansion bound")

    @property
    def n_max(self) -> int:
        return len(self.beta) - 1


@dataclass
class VolumeReport:
    doubling: list[float]
    pansu: list[float]
    theta_for_R0: dict[str, int]
    D_hat: float
    D_rounded: int
    C1: float
    C2: float
    pansu_tail_mean: float
    pansu_tail_variation: float
    notes: list[str] = field(default_factory=list)


def growth_function(spec: GroupSpec, generators=None, n_max: int = 1, D_nominal=None,
                    cache_dir=None, memory_cap: int = balls.DEFAULT_MEMORY_CAP,
                    center=None) -> GrowthSeries:
    """``beta(n) = |B_center(n)|`` for ``n = 0..n_max`` from one BFS."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    generators = generators or balls.generating_set(spec)
    ball = balls.cached_ball(spec, generators, center, n_max, cache_dir, memory_cap)
    beta = tuple(int(ball.size(n)) for n in range(n_max + 1))
    return GrowthSeries(spec, generators, beta, D_nominal)


def doubling_ratios_exact(series: GrowthSeries) -> list[Fraction]:
    """``beta(2n)/beta(n)`` for ``1 <= n <= n_max/2`` as exact rationals."""
    return [Fraction(series.beta[2 * n], series.beta[n]) for n in range(1, series.n_max // 2 + 1)]


def doubling_constants(series: GrowthSeries) -> list[float]:
    return [float(r) for r in doubling_ratios_exact(series)]


def pansu_ratios(series: GrowthSeries, D: int) -> tuple[list[float], float]:
    """Ratios ``beta(n)/n^D`` for ``n >= 1`` and their max-min spread over the last quarter."""
    if D < 1:
        raise ValueError("D must be >= 1")
    ratios = [series.beta[n] / n**D for n in range(1, series.n_max + 1)]
    tail = ratios[-max(1, len(ratios) // 4):]
    return ratios, max(tail) - min(tail)


def estimate_degree(series: GrowthSeries, window: tuple[int, int]) -> tuple[float, int]:
    """OLS slope of ``log beta(n)`` against ``log n`` over the window, and its rounding."""
    lo, hi = window
    if lo < 2 or hi > series.n_max or lo > hi:
        raise ValueError(f"window {window} must lie inside [2, {series.n_max}]")
    if hi - lo + 1 < 4:
        raise ValueError("degree window needs at least 4 points")
    n = np.arange(lo, hi + 1, dtype=float)
    y = np.log(np.array(series.beta[lo:hi + 1], dtype=float))
    slope = float(np.polyfit(np.log(n), y, 1)[0])
    return slope, int(round(slope))


def _as_fraction(theta) -> Fraction:
    if isinstance(theta, Fraction):
        return theta
    if isinstance(theta, float):
        # decimal text of the float, not its binary expansion
        return Fraction(repr(theta))
    return Fraction(theta)


def rvc_violations(series: GrowthSeries, D: int, theta) -> list[tuple[int, int]]:
    """All pairs ``1 <= r <= R <= n_max/2`` breaking ``beta(R)/beta(r) <= (1+θ)(R/r)^D``."""
    factor = 1 + _as_fraction(theta)
    top = series.n_max // 2
    beta = series.beta
    bad = []
    for R in range(1, top + 1):
        for r in range(1, R + 1):
            # beta(R) r^D <= (1+θ) R^D beta(r), cross-multiplied
            if beta[R] * r**D > factor * (R**D * beta[r]):
                bad.append((r, R))
    return bad


def rvc_threshold(series: GrowthSeries, D: int, theta) -> int:
    """Smallest ``R0 >= 1`` for which the comparison holds on the whole grid up to ``n_max/2``.

    The pair ``r = R`` always holds, so ``R0 = n_max // 2`` means the grid
    leaves nothing to test; compare against that before trusting a large value.
    """
    theta_f = _as_fraction(theta)
    if not 0 < theta_f:
        raise ValueError("theta must be positive")
    bad = rvc_violations(series, D, theta_f)
    if not bad:
        return 1
    return max(r for r, _ in bad) + 1


def volume_report(series: GrowthSeries, D: int, thetas=("0.1", "0.5", "1", "10"),
                  window: tuple[int, int] | None = None) -> VolumeReport:
    ratios, variation = pansu_ratios(series, D)
    if window is None:
        window = (max(2, series.n_max // 4), series.n_max)
    notes = ["Pansu limit reported as last-quarter mean; convergence is not asserted.",
             "settling thresholds for the Pansu ratio are calibration choices"]
    try:
        D_hat, D_round = estimate_degree(series, window)
    except ValueError as exc:
        D_hat, D_round = float("nan"), D
        notes.append(f"degree not fitted: {exc}")
    tail = ratios[-max(1, len(ratios) // 4):]
    if D_round != D and D_hat == D_hat:
        notes.append(f"fitted degree {D_round} differs from declared D={D}")
    return VolumeReport(
        doubling=doubling_constants(series),
        pansu=ratios,
        theta_for_R0={str(t): rvc_threshold(series, D, t) for t in thetas},
        D_hat=D_hat,
        D_rounded=D_round,
        C1=min(ratios),
        C2=max(ratios),
        pansu_tail_mean=float(np.mean(tail)),
        pansu_tail_variation=variation,
        notes=notes,
    )

