"""Evaluation of the random series partial sums with certified truncation.

The object of study is

    S_N(alpha, s) = sum_{k=2}^{N} (log k)^alpha k^-(1/2+s) eta_k,

one fixed noise path evaluated across whole grids of exponents s.  Three
commitments shape the implementation:

  * Determinism.  Sums are accumulated over fixed k-blocks of 2^16 terms;
    each block is reduced by numpy pairwise summation and the block sums
    are combined in index order with Kahan compensation.  The reduction
    tree never depends on the worker count, so results are bit-identical
    for 1, 2 or 8 workers.
  * Shared transcendentals.  log k is computed once per block and reused
    by every grid exponent (the kernel is exp(-(1/2+s) log k)); ensembles
    additionally reuse the weight blocks across replicates.
  * Honest truncation.  Cutoffs come from certified tail-variance bounds
    (exponential-integral or incomplete-gamma brackets) and are rounded up
    to powers of two so that all grid points share block boundaries.  If
    no cutoff below the cap can be certified, the engine refuses with the
    minimal log N estimate rather than return a silently biased value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .analytics import Enclosure, exp_integral_e1, invert_e1
from .errors import DomainError, FeasibilityError
from .innovations import InnovationSpec, SeedContext, draw_block

BLOCK = 1 << 16
N_MAX_DEFAULT = 1 << 33
_TERM_CAP = 1 << 40


@dataclass(frozen=True)
class SeriesParams:
    """Exponent pair (alpha, s) plus the innovation law."""

    alpha: float
    s_exponent: float
    spec: InnovationSpec

    def __post_init__(self):
        if not (self.s_exponent > 0.0):
            raise DomainError("s must be positive (a.s. convergence region)")
        if self.alpha < -0.5:
            raise DomainError("alpha below -1/2 is out of scope")


@dataclass(frozen=True)
class TruncationPlan:
    """Cutoff N with a certified bound on the dropped tail variance."""

    cutoff_n: int
    tail_variance_bound: float
    target: str


@dataclass(frozen=True)
class PathEvaluation:
    """One eta-path evaluated over a grid of exponents."""

    grid: tuple
    values: np.ndarray
    plans: tuple
    ctx: SeedContext


def _tail_bound_hi(alpha: float, s: float, n: int) -> float:
    """Certified upper bound on sum_{k>N} (log k)^(2 alpha) k^-(1+2s)."""
    if alpha == -0.5:
        return exp_integral_e1(2.0 * s * math.log(n)).hi
    return analytics._tail_integral(2.0 * alpha, 2.0 * s,
                                    math.log(2.0 * s), n).hi


def _required_log_n(alpha: float, s: float, target: float) -> float:
    """Smallest log N at which the tail bound reaches target."""
    if alpha == -0.5:
        return invert_e1(target) / (2.0 * s)
    lo, hi = math.log(4.0), 4.0
    while _tail_bound_hi(alpha, s, int(math.exp(hi)) + 1) > target:
        hi *= 2.0
        if hi > 1e4:
            return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _tail_bound_hi(alpha, s, max(4, int(math.exp(mid)))) > target:
            lo = mid
        else:
            hi = mid
    return hi


def plan_truncation(alpha: float, s: float, rel_tol: float,
                    variance_scale: float,
                    n_max: int = N_MAX_DEFAULT) -> TruncationPlan:
    """Smallest power-of-two cutoff certified to rel_tol * variance_scale.

    Raises FeasibilityError (with the minimal log N estimate attached)
    when every cutoff up to n_max fails; for small s the bound forces
    log N of order const/s, so refusal is the honest outcome.
    """
    if not (0.0 < rel_tol < 1.0):
        raise DomainError("rel_tol must lie in (0, 1)")
    if not (variance_scale > 0.0):
        raise DomainError("variance_scale must be positive")
    if not (s > 0.0):
        raise DomainError("s must be positive")
    if alpha < -0.5:
        raise DomainError("alpha below -1/2 is out of scope")
    target = rel_tol * variance_scale
    p = 2
    if alpha > 0.0:
        p = max(p, math.ceil(math.log2(
            analytics._monotone_floor(alpha, 2.0 * s))))
    while (1 << p) <= n_max:
        n = 1 << p
        bound = _tail_bound_hi(alpha, s, n)
        if bound <= target:
            return TruncationPlan(n, bound,
                                  f"tail variance <= {rel_tol:g} * "
                                  f"{variance_scale:.6g}")
        p += 1
    need = _required_log_n(alpha, s, target)
    raise FeasibilityError(
        f"no cutoff up to n_max={n_max} certifies tail variance "
        f"<= {target:.3g} at (alpha={alpha}, s={s}); needs log N of about "
        f"{need:.1f} (N ~ e^{need:.0f})",
        required_log_n=need, n_max=n_max)


def _block_ranges(n: int):
    """Half-open k-ranges partitioning [2, n] on fixed 2^16 boundaries."""
    for b in range(0, n + 1, BLOCK):
        lo = max(2, b)
        hi = min(n + 1, b + BLOCK)
        if lo < hi:
            yield lo, hi


def _weights(alpha: float, s: float, lk: np.ndarray) -> np.ndarray:
    """(log k)^alpha k^-(1/2+s) from precomputed lk = log k."""
    return np.exp(alpha * np.log(lk) - (0.5 + s) * lk)


def _kahan(acc: float, comp: float, x: float) -> tuple[float, float]:
    y = x - comp
    t = acc + y
    return t, (t - acc) - y


def partial_sum(params: SeriesParams, n: int, ctx: SeedContext,
                workers: int = 1, eta_scale: float = 1.0) -> float:
    """Compensated sum of terms k = 2..n for one noise path.

    eta_scale multiplies every innovation; it exists for tests (a zero
    path must sum to exactly zero) and for exact scale-equivariance
    checks.  Results are independent of the worker count.
    """
    if n < 2:
        raise DomainError("partial sums start at n = 2")
    if n > _TERM_CAP:
        raise FeasibilityError(f"term count {n} exceeds the resource cap "
                               f"{_TERM_CAP}", n_max=_TERM_CAP)
    alpha, s = params.alpha, params.s_exponent

    def block_sum(rng):
        lo, hi = rng
        k = np.arange(lo, hi, dtype=np.float64)
        w = _weights(alpha, s, np.log(k))
        eta = draw_block(params.spec, ctx, lo, hi)
        if eta_scale != 1.0:
            eta = eta * eta_scale
        return float(np.sum(w * eta))

    ranges = list(_block_ranges(n))
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(block_sum, ranges))
    else:
        sums = [block_sum(r) for r in ranges]
    acc, comp = 0.0, 0.0
    for v in sums:
        acc, comp = _kahan(acc, comp, v)
    return acc


def _grid_plans(alpha, s_grid, rel_tol, n_max, scale_terms=1 << 16):
    """Per-point truncation plans; the tolerance scale is each point's own
    variance midpoint.  Re-raises infeasibility naming the grid point."""
    plans = []
    for i, s in enumerate(s_grid):
        scale = analytics.kernel_sum_enclosure(alpha, s, s, scale_terms).mid
        try:
            plans.append(plan_truncation(alpha, s, rel_tol, scale, n_max))
        except FeasibilityError as exc:
            raise FeasibilityError(
                f"grid point {i} (s={s:.6g}) infeasible: {exc}",
                required_log_n=exc.required_log_n, n_max=n_max,
                grid_index=i, grid_point=s) from exc
    return plans


def evaluate_path(alpha: float, s_grid, spec: InnovationSpec,
                  ctx: SeedContext, rel_tol: float,
                  n_max: int = N_MAX_DEFAULT, workers: int = 1,
                  eta_scale: float = 1.0) -> PathEvaluation:
    """One eta-path evaluated at every exponent of s_grid.

    All points consume the identical innovation sequence; each point is
    truncated at its own certified cutoff.  Bit-identical to partial_sum
    at the same cutoff, and across worker counts.
    """
    s_grid = [float(s) for s in s_grid]
    if not s_grid:
        raise DomainError("s_grid must be nonempty")
    if any(not (s > 0.0) for s in s_grid):
        raise DomainError("grid exponents must be positive")
    plans = _grid_plans(alpha, s_grid, rel_tol, n_max)
    n_all = max(p.cutoff_n for p in plans)
    ranges = list(_block_ranges(n_all))

    def block_part(rng):
        lo, hi = rng
        k = np.arange(lo, hi, dtype=np.float64)
        lk = np.log(k)
        eta = draw_block(spec, ctx, lo, hi)
        if eta_scale != 1.0:
            eta = eta * eta_scale
        out = np.zeros(len(s_grid))
        for i, s in enumerate(s_grid):
            stop = plans[i].cutoff_n + 1
            if lo >= stop:
                continue
            if stop >= hi:
                out[i] = float(np.sum(_weights(alpha, s, lk) * eta))
            else:
                m = stop - lo
                out[i] = float(np.sum(_weights(alpha, s, lk[:m]) * eta[:m]))
        return out

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block_part, ranges))
    else:
        parts = [block_part(r) for r in ranges]
    values = np.zeros(len(s_grid))
    for i in range(len(s_grid)):
        acc, c = 0.0, 0.0
        for part in parts:
            acc, c = _kahan(acc, c, float(part[i]))
        values[i] = acc
    return PathEvaluation(tuple(s_grid), values, tuple(plans), ctx)


# ---------------------------------------------------------------------------
# Ensembles: many replicate paths over one grid
# ---------------------------------------------------------------------------

_REP_CHUNK = 128


def evaluate_ensemble(alpha: float, s_grid, spec: InnovationSpec,
                      ctx: SeedContext, n_rep: int, rel_tol: float,
                      n_max: int = N_MAX_DEFAULT, workers: int = 1,
                      cutoffs=None, contexts=None) -> tuple[np.ndarray, tuple]:
    """Replicate r uses stream ctx.stream_id + r; returns (values, plans).

    values has shape (n_rep, len(s_grid)).  Weight blocks are computed
    once and shared by all replicates; replicates are processed in fixed
    chunks of 128 streams so the arithmetic (and hence the output) does
    not depend on the worker count.  Rows agree with evaluate_path in
    law and in seed, but the matrix-product reduction may round
    differently in the last bits; pathwise contracts use evaluate_path.

    contexts, when given, overrides the stream mapping: row r is drawn
    from contexts[r] (independent master seeds share one weight pass).
    """
    s_grid = [float(s) for s in s_grid]
    if not s_grid or any(not (s > 0.0) for s in s_grid):
        raise DomainError("s_grid must be nonempty and positive")
    if contexts is not None:
        contexts = list(contexts)
        n_rep = len(contexts)
    if n_rep < 1:
        raise DomainError("need n_rep >= 1")
    if cutoffs is None:
        plans = _grid_plans(alpha, s_grid, rel_tol, n_max)
    else:
        if np.isscalar(cutoffs):
            cutoffs = [int(cutoffs)] * len(s_grid)
        plans = tuple(TruncationPlan(int(c), float("nan"), "frozen cutoff")
                      for c in cutoffs)
    stops = [p.cutoff_n + 1 for p in plans]
    n_all = max(p.cutoff_n for p in plans)
    ranges = list(_block_ranges(n_all))
    d = len(s_grid)
    n_chunks = (n_rep + _REP_CHUNK - 1) // _REP_CHUNK

    def row_ctx(r):
        if contexts is not None:
            return contexts[min(r, n_rep - 1)]  # padding rows reuse the last
        return ctx.stream(r)

    def run_chunk(ci):
        base = ci * _REP_CHUNK
        rows = _REP_CHUNK  # padded; surplus rows discarded at the end
        totals = np.zeros((rows, d))
        comps = np.zeros((rows, d))
        eta = np.empty((rows, BLOCK))
        for lo, hi in ranges:
            k = np.arange(lo, hi, dtype=np.float64)
            lk = np.log(k)
            wmat = np.empty((hi - lo, d))
            for i, s in enumerate(s_grid):
                m = min(hi, stops[i]) - lo
                if m <= 0:
                    wmat[:, i] = 0.0
                else:
                    wmat[:m, i] = _weights(alpha, s, lk[:m])
                    wmat[m:, i] = 0.0
            e = eta[:, : hi - lo]
            for r in range(rows):
                e[r] = draw_block(spec, row_ctx(base + r), lo, hi)
            x = e @ wmat
            y = x - comps
            t = totals + y
            comps = (t - totals) - y
            totals = t
        return totals

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_chunk, range(n_chunks)))
    else:
        chunks = [run_chunk(ci) for ci in range(n_chunks)]
    values = np.vstack(chunks)[:n_rep]
    return values, tuple(plans)


# ---------------------------------------------------------------------------
# Summation-by-parts identity
# ---------------------------------------------------------------------------

def parts_identity_residual(s: float, m: int, spec: InnovationSpec,
                            ctx: SeedContext, quad_tol: float = 1e-12,
                            eta_scale: float = 1.0) -> float:
    """Residual of the summation-by-parts identity for the boundary weight.

    With phi(x) = (log x)^(-1/2) x^-(1/2+s) and T_j the running noise sum
    (T_1 = 0 by the convention eta_1 = 0, under which the identity is
    exact), the direct sum over k = 2..m equals

        phi(m) T_m + int_{3/2}^{m} (-phi'(x)) T_floor(x) dx,

    where -phi'(x) = ((log x)^(-3/2)/2 + (1/2+s)(log x)^(-1/2)) x^-(3/2+s).
    T is constant on unit intervals, so the integral is evaluated piece by
    piece with per-interval quadrature tolerance quad_tol.  The returned
    absolute difference is pure quadrature and rounding error.
    """
    if m < 3:
        raise DomainError("need m >= 3")
    if not (s > 0.0):
        raise DomainError("s must be positive")
    from scipy.integrate import quad

    eta = draw_block(spec, ctx, 2, m + 1)
    if eta_scale != 1.0:
        eta = eta * eta_scale
    k = np.arange(2, m + 1, dtype=np.float64)
    lk = np.log(k)
    direct = float(np.sum(_weights(-0.5, s, lk) * eta))
    t_run = np.cumsum(eta)  # T_2, ..., T_m

    def neg_phi_prime(x):
        lx = math.log(x)
        return (0.5 * lx**-1.5 + (0.5 + s) * lx**-0.5) * x ** -(1.5 + s)

    boundary = math.log(m) ** -0.5 * m ** -(0.5 + s) * float(t_run[-1])
    integral = 0.0
    for j in range(2, m):
        piece, _ = quad(neg_phi_prime, j, j + 1, epsabs=quad_tol,
                        epsrel=0.0, limit=100)
        integral += float(t_run[j - 2]) * piece
    return abs(direct - (boundary + integral))
