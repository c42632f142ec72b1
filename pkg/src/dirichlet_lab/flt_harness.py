"""Functional-limit-theorem experiments.

Boundary case: on the time scale where the exponent is exp(-t s_big), the
series normalized by s_big^(-1/2) has covariance approaching
min(t1, t2) as s_big grows, i.e. the paths approach Brownian motion.  The
harness simulates feasible scales by direct summation (one shared noise
path per replicate across the whole time grid) and leaves the deep-scale
covariance statement to certified analytics, which need no sampling.

Smooth case (log-weight exponent alpha > -1/2): the limit process is the
stochastic integral sigma int_0^inf y^alpha e^-ty dB(y), simulated here on
a uniform mesh whose first cell carries its exact variance so negative
alpha stays integrable.

No finite experiment certifies weak convergence; these runs quantify the
distance at a fixed scale and verify its trend, nothing stronger.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc
from scipy.stats import kstest

from . import analytics, series_engine
from .ensemble import PathEnsemble
from .errors import DomainError, FeasibilityError, InsufficientSampleError
from .innovations import InnovationSpec, SeedContext, noise_block

# Mesh increments for the limit-process simulator live at this index
# offset, in a region disjoint from both series indices and MVN draws.
LIMIT_INDEX_BASE = 1 << 41


@dataclass
class StatReport:
    """Empirical moments of an ensemble against a reference covariance."""

    empirical_cov: np.ndarray
    std_errors: np.ndarray
    reference_cov: np.ndarray
    ks_stats: list
    increment_corr: np.ndarray

    def max_deviation_in_se(self) -> float:
        dev = np.abs(self.empirical_cov - self.reference_cov)
        return float(np.max(dev / np.maximum(self.std_errors, 1e-300)))


def max_usable_s_big(t_max: float, rel_tol: float,
                     n_max: int = series_engine.N_MAX_DEFAULT) -> float:
    """Largest s_big whose deepest exponent exp(-t_max s_big) is feasible."""
    lo, hi = 0.5, 0.5
    while _feasible(math.exp(-t_max * hi * 2.0), rel_tol, n_max) and hi < 64.0:
        hi *= 2.0
    hi *= 2.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _feasible(math.exp(-t_max * mid), rel_tol, n_max):
            lo = mid
        else:
            hi = mid
    return lo


def _feasible(s: float, rel_tol: float, n_max: int) -> bool:
    try:
        scale = analytics.kernel_sum_enclosure(-0.5, s, s, 1 << 14).mid
        series_engine.plan_truncation(-0.5, s, rel_tol, scale, n_max)
        return True
    except FeasibilityError:
        return False


def simulate_flt_boundary(s_big: float, t_grid, n_rep: int,
                          spec: InnovationSpec, ctx: SeedContext,
                          rel_tol: float,
                          n_max: int = series_engine.N_MAX_DEFAULT,
                          workers: int = 1) -> PathEnsemble:
    """Replicates of t -> s_big^(-1/2) X(exp(-t s_big)) on t_grid.

    Each replicate is one noise path shared across the whole grid; time
    points must be distinct and lie in (0, 1].  Infeasible scales raise
    with the maximal usable s_big for this grid attached.
    """
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size == 0 or np.any(t_grid <= 0.0) or np.any(t_grid > 1.0):
        raise DomainError("time grid must lie in (0, 1]")
    if np.any(np.diff(t_grid) == 0.0):
        raise DomainError("duplicate time points are not allowed")
    if not (s_big > 0.0):
        raise DomainError("s_big must be positive")
    exponents = np.exp(-t_grid * s_big)
    t0 = time.perf_counter()
    try:
        values, plans = series_engine.evaluate_ensemble(
            -0.5, exponents, spec, ctx, n_rep, rel_tol, n_max, workers)
    except FeasibilityError as exc:
        usable = max_usable_s_big(float(t_grid[-1]), rel_tol, n_max)
        raise FeasibilityError(
            f"s_big={s_big:g} infeasible for this grid at rel_tol="
            f"{rel_tol:g}; maximum usable s_big is about {usable:.2f} "
            f"({exc})", max_usable=usable, n_max=n_max) from exc
    values = values / math.sqrt(s_big)
    return PathEnsemble(
        t_grid, values,
        normalization=f"series / sqrt(s_big={s_big:g})",
        meta={
            "s_big": s_big,
            "family": spec.family,
            "sigma": spec.sigma,
            "master_seed": ctx.master_seed,
            "stream_id": ctx.stream_id,
            "rel_tol": rel_tol,
            "cutoffs": [p.cutoff_n for p in plans],
            "tail_bounds": [p.tail_variance_bound for p in plans],
            "wall_seconds": time.perf_counter() - t0,
        })


def limit_weight_matrix(alpha: float, t_grid, y_max: float,
                        n_steps: int) -> np.ndarray:
    """(n_steps, d) mesh weights for the discretized limit integral.

    Cell j >= 1 contributes y_j^alpha e^(-t y_j) sqrt(dy) at its left
    endpoint; cell 0 contributes the square root of its exact variance
    int_0^dy y^(2 alpha) e^(-2ty) dy, which keeps alpha in (-1/2, 0)
    integrable.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    dy = y_max / n_steps
    y = np.arange(n_steps, dtype=np.float64) * dy
    w = np.empty((n_steps, t_grid.size))
    a = 1.0 + 2.0 * alpha
    for i, t in enumerate(t_grid):
        w[1:, i] = y[1:] ** alpha * np.exp(-t * y[1:]) * math.sqrt(dy)
        cell0 = gammainc(a, 2.0 * t * dy) * gamma_fn(a) / (2.0 * t) ** a
        w[0, i] = math.sqrt(cell0)
    return w


def discretized_limit_cov(alpha: float, t_grid, y_max: float, n_steps: int,
                          sigma: float = 1.0) -> np.ndarray:
    """Exact covariance of the mesh discretization (no sampling)."""
    w = limit_weight_matrix(alpha, t_grid, y_max, n_steps)
    return sigma * sigma * (w.T @ w)


def simulate_limit_alpha(alpha: float, t_grid, n_rep: int, y_max: float,
                         n_steps: int, sigma: float,
                         ctx: SeedContext) -> PathEnsemble:
    """Replicates of the limit process sigma int y^alpha e^-ty dB(y).

    One Brownian mesh per replicate is shared by all time points, so the
    ensemble is pathwise in t.  Requires y_max * min(t) >= 20 (truncation
    negligibility) and n_steps >= 1000.  sigma = 0 is allowed as a
    degenerate test hook and yields the all-zero ensemble.
    """
    if alpha <= -0.5:
        raise DomainError("alpha must exceed -1/2")
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size == 0 or np.any(t_grid <= 0.0):
        raise DomainError("time grid must be positive")
    if np.any(np.diff(t_grid) == 0.0):
        raise DomainError("duplicate time points are not allowed")
    if y_max * float(t_grid[0]) < 20.0:
        raise DomainError("need y_max * min(t) >= 20 for negligible "
                          "truncation")
    if n_steps < 1000:
        raise DomainError("need n_steps >= 1000")
    if sigma < 0.0:
        raise DomainError("sigma must be nonnegative")
    t0 = time.perf_counter()
    if sigma == 0.0:
        values = np.zeros((n_rep, t_grid.size))
    else:
        w = limit_weight_matrix(alpha, t_grid, y_max, n_steps)
        unit = InnovationSpec("gaussian", 1.0)
        values = np.empty((n_rep, t_grid.size))
        chunk = 256
        for base in range(0, n_rep, chunk):
            rows = min(chunk, n_rep - base)
            z = np.empty((rows, n_steps))
            for r in range(rows):
                z[r] = noise_block(unit, ctx.stream(base + r),
                                   LIMIT_INDEX_BASE,
                                   LIMIT_INDEX_BASE + n_steps)
            values[base:base + rows] = sigma * (z @ w)
    return PathEnsemble(
        t_grid, values,
        normalization=f"limit process, sigma={sigma:g}",
        meta={
            "alpha": alpha,
            "y_max": y_max,
            "n_steps": n_steps,
            "master_seed": ctx.master_seed,
            "stream_id": ctx.stream_id,
            "wall_seconds": time.perf_counter() - t0,
        })


def _jackknife_cov_se(x: np.ndarray) -> np.ndarray:
    """Delete-one jackknife standard errors for the covariance entries."""
    n, d = x.shape
    mean = x.mean(axis=0)
    outer_sum = x.T @ x
    # delete-r mean and covariance, vectorized over r
    mean_r = (n * mean[None, :] - x) / (n - 1)
    xxT = np.einsum("ri,rj->rij", x, x)
    s_r = outer_sum[None, :, :] - xxT
    cov_r = (s_r - (n - 1) * np.einsum("ri,rj->rij", mean_r, mean_r)) \
        / (n - 2)
    cov_bar = cov_r.mean(axis=0)
    var_jack = (n - 1) / n * np.sum((cov_r - cov_bar) ** 2, axis=0)
    return np.sqrt(var_jack)


def compare_fdd(ens: PathEnsemble, reference: np.ndarray) -> StatReport:
    """Empirical covariance vs. a reference matrix, with standard errors.

    Includes a per-coordinate Kolmogorov-Smirnov test against the normal
    law with the reference variance and the lag-1 correlation of grid
    increments (near zero for a process with independent increments).
    Needs at least 100 replicates.
    """
    x = ens.values
    if x.shape[0] < 100:
        raise InsufficientSampleError(
            f"need >= 100 replicates, got {x.shape[0]}")
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != (x.shape[1], x.shape[1]):
        raise DomainError("reference dimension must match the grid")
    emp = np.cov(x, rowvar=False, ddof=1)
    emp = np.atleast_2d(emp)
    se = _jackknife_cov_se(x)
    ks = []
    for i in range(x.shape[1]):
        ref_var = reference[i, i]
        if ref_var <= 0.0 or np.std(x[:, i]) == 0.0:
            ks.append((1.0, 0.0))  # degenerate: flag with p = 0
            continue
        res = kstest(x[:, i], "norm", args=(0.0, math.sqrt(ref_var)))
        ks.append((float(res.statistic), float(res.pvalue)))
    if x.shape[1] >= 3:
        inc = np.diff(x, axis=1)
        corr = np.empty(inc.shape[1] - 1)
        for i in range(inc.shape[1] - 1):
            corr[i] = np.corrcoef(inc[:, i], inc[:, i + 1])[0, 1]
    else:
        corr = np.empty(0)
    return StatReport(emp, se, reference, ks, corr)
