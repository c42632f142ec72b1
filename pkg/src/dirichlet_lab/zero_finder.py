"""Real zeros of one series path on a window [s_lo, s_hi].

The LIL forces the boundary path to oscillate between positive and
negative excursions all the way down to 0, so it has infinitely many real
zeros in every right neighborhood of 0; they accumulate at triple-log
speed, hence slowly.  The machinery here is deliberately plain: a
sign-change scan on a log-spaced grid (zeros pile up toward 0), bisection
refinement, and seed-ensemble counting statistics.

One honesty rule: while refining, the path must be evaluated with the
cutoff frozen at bracket creation.  Adaptive truncation would make the
evaluated function discontinuous in s and break the sign logic.  The
frozen cutoff's tail-variance bound acts as the evaluation noise floor;
brackets whose endpoint values sit within 5x that floor are reported as
unresolved rather than refined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytics, series_engine
from .errors import (ConvergenceError, DomainError, EvaluationError,
                     FeasibilityError)
from .innovations import InnovationSpec, SeedContext

NOISE_FLOOR_FACTOR = 5.0


@dataclass(frozen=True)
class ZeroBracket:
    """A sign change: f(s_left) and f(s_right) have opposite signs.

    A degenerate bracket (s_left == s_right) records an exact grid zero.
    """

    s_left: float
    s_right: float
    f_left: float
    f_right: float

    def __post_init__(self):
        if self.s_left > self.s_right:
            raise DomainError("bracket endpoints out of order")
        if self.s_left < self.s_right and not (self.f_left * self.f_right < 0.0):
            raise DomainError("bracket endpoints must straddle zero")

    @property
    def degenerate(self) -> bool:
        return self.s_left == self.s_right


def brackets_from_values(grid: np.ndarray, values: np.ndarray) -> list:
    """Sign-change brackets between adjacent grid points."""
    if not np.all(np.isfinite(values)):
        raise EvaluationError("path evaluation returned a non-finite value")
    out = []
    for i in range(len(grid) - 1):
        f0, f1 = float(values[i]), float(values[i + 1])
        if f0 == 0.0:
            out.append(ZeroBracket(float(grid[i]), float(grid[i]), 0.0, 0.0))
        elif f0 * f1 < 0.0:
            out.append(ZeroBracket(float(grid[i]), float(grid[i + 1]),
                                   f0, f1))
    if float(values[-1]) == 0.0:
        out.append(ZeroBracket(float(grid[-1]), float(grid[-1]), 0.0, 0.0))
    return out


def scan(path_fn, s_lo: float, s_hi: float, n_grid: int) -> list:
    """Bracket every sign change of path_fn on a log-spaced grid.

    Grid coarseness is the caller's risk: zeros closer together than the
    local spacing cancel in pairs and go uncounted.
    """
    if not (0.0 < s_lo < s_hi):
        raise DomainError("need 0 < s_lo < s_hi")
    if n_grid < 2:
        raise DomainError("need at least two grid points")
    grid = np.geomspace(s_lo, s_hi, n_grid)
    values = np.array([float(path_fn(float(s))) for s in grid])
    return brackets_from_values(grid, values)


def refine(path_fn, bracket: ZeroBracket, tol: float,
           max_iter: int = 200) -> float:
    """Bisection root inside a bracket, to width <= tol."""
    if not (tol > 0.0):
        raise DomainError("tol must be positive")
    if bracket.degenerate:
        return bracket.s_left
    lo, hi = bracket.s_left, bracket.s_right
    f_lo = bracket.f_left
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        f_mid = float(path_fn(mid))
        if not math.isfinite(f_mid):
            raise EvaluationError("path evaluation returned a non-finite "
                                  "value during refinement")
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    raise ConvergenceError(
        f"bisection did not reach tol={tol:g} in {max_iter} iterations",
        best=ZeroBracket(lo, hi, f_lo, float(path_fn(hi))))


# ---------------------------------------------------------------------------
# Ensemble zero counting
# ---------------------------------------------------------------------------

@dataclass
class WindowCounts:
    """Zero-count statistics for one window over many seeds."""

    s_lo: float
    s_hi: float
    counts: np.ndarray
    unresolved: np.ndarray
    cutoff_n: int
    noise_floor: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def sd(self) -> float:
        return float(np.std(self.counts, ddof=1)) if len(self.counts) > 1 \
            else 0.0


def _frozen_cutoff(s_lo: float, rel_tol: float, n_max: int):
    scale = analytics.kernel_sum_enclosure(-0.5, s_lo, s_lo, 1 << 14).mid
    plan = series_engine.plan_truncation(-0.5, s_lo, rel_tol, scale, n_max)
    return plan


def path_values_on_grid(spec: InnovationSpec, contexts, grid: np.ndarray,
                        cutoff_n: int) -> np.ndarray:
    """Series values on a grid with one frozen cutoff for all points.

    Returns (len(contexts), len(grid)): one row per noise path, all rows
    sharing a single weight pass.  The frozen cutoff keeps each row a
    continuous function of s.
    """
    contexts = list(contexts)
    values, _ = series_engine.evaluate_ensemble(
        -0.5, grid, spec, contexts[0], len(contexts), rel_tol=0.5,
        cutoffs=cutoff_n, contexts=contexts)
    return values


def zero_count_experiment(spec: InnovationSpec, seeds, windows,
                          n_grid: int, rel_tol: float = 0.05,
                          n_max: int = series_engine.N_MAX_DEFAULT) -> list:
    """Zero counts of the boundary path per window, across seeds.

    Each seed is a master seed mapped to an independent noise path; for
    each window the path is scanned on a log-spaced grid with the cutoff
    frozen at the window's deepest point.  counts tallies every sign
    change of the evaluated (truncated) path; unresolved sub-tallies the
    brackets whose endpoint values sit within 5x the truncation noise
    floor, where the corresponding zero of the full series cannot be
    located by refinement.
    """
    if n_grid < 2:
        raise DomainError("need at least two grid points")
    seeds = [int(x) for x in seeds]
    results = []
    for s_lo, s_hi in windows:
        if not (0.0 < s_lo < s_hi):
            raise DomainError("window must satisfy 0 < s_lo < s_hi")
        try:
            plan = _frozen_cutoff(s_lo, rel_tol, n_max)
        except FeasibilityError as exc:
            raise FeasibilityError(
                f"window [{s_lo}, {s_hi}] infeasible: {exc}",
                n_max=n_max) from exc
        noise = spec.sigma * math.sqrt(plan.tail_variance_bound)
        grid = np.geomspace(s_lo, s_hi, n_grid)
        rows = path_values_on_grid(spec, [SeedContext(sd) for sd in seeds],
                                   grid, plan.cutoff_n)
        counts = np.zeros(len(seeds), dtype=np.int64)
        unresolved = np.zeros(len(seeds), dtype=np.int64)
        for i in range(len(seeds)):
            counts[i], unresolved[i] = _count_brackets(grid, rows[i], noise)
        results.append(WindowCounts(s_lo, s_hi, counts, unresolved,
                                    plan.cutoff_n, noise))
    return results


def _count_brackets(grid, values, noise_floor) -> tuple[int, int]:
    total = 0
    murky = 0
    for br in brackets_from_values(grid, values):
        total += 1
        if not br.degenerate and max(abs(br.f_left), abs(br.f_right)) \
                < NOISE_FLOOR_FACTOR * noise_floor:
            murky += 1
    return total, murky
