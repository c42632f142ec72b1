"""Iterated-logarithm diagnostics for the boundary series.

The normalized trajectory is

    s -> (2 sigma^2 log(1/s) logloglog(1/s))^(-1/2) X(s),

whose limit set as s -> 0+ is the whole interval [-1, 1] almost surely.
That statement lives at triple-log depth: the normalized marginal standard
deviation decays like (2 logloglog(1/s))^(-1/2), so values near +-1 need
depths far beyond any summation.  For Gaussian innovations the exact-law
sampler reaches those depths (only log(1/s) enters), and this module
checks what is honestly checkable: marginal SDs against the closed
formula, mass concentration inside [-1, 1] where the formula says it must
concentrate, monotone running extremes, and the decay of the proof's
clipped and windowed series fragments.

Depth convention: trajectories carry L = log(1/s) per point, ascending
(s descending); s itself underflows the double range at L > 745 while
every quantity we need stays a smooth function of L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytics, gaussian_exact, series_engine
from .errors import DomainError, FeasibilityError, InsufficientSampleError
from .innovations import (InnovationSpec, SeedContext, draw_block,
                          truncated_abs_moment, truncated_signed_moment)

_DEFAULT_RHO = 0.05
_DEFAULT_GAMMA = 0.25


@dataclass(frozen=True)
class TruncationEvent:
    """One clipping event: does |eta_k| exceed its (k, s) threshold."""

    k: int
    log_inv_s: float
    rho: float
    threshold: float
    fired: bool

    @property
    def s(self) -> float:
        return math.exp(-self.log_inv_s)


@dataclass
class Trajectory:
    """One noise path along a descending-s grid, normalized for the LIL."""

    log_inv_s: np.ndarray  # ascending; s_points = exp(-log_inv_s) descend
    raw: np.ndarray
    normalized: np.ndarray
    running_sup: np.ndarray
    running_inf: np.ndarray
    route: str

    @property
    def s_points(self) -> np.ndarray:
        return np.exp(-self.log_inv_s)


def clip_threshold(k, log_inv_s: float, rho: float, g_mid: float):
    """Threshold of the clipping event at index k and depth L = log(1/s):

        (rho / loglog(1/s)) * sqrt(k^(1+2s) log k * g / logloglog(1/s)).
    """
    if not (log_inv_s > math.e):
        raise DomainError("clipping events need s < exp(-e)")
    if not (rho > 0.0):
        raise DomainError("rho must be positive")
    k = np.asarray(k, dtype=np.float64)
    s = math.exp(-log_inv_s)  # 0.0 beyond L ~ 745; k^(2s) is then 1
    log3 = math.log(math.log(log_inv_s))
    lk = np.log(k)
    inside = np.exp((1.0 + 2.0 * s) * lk) * lk * g_mid / log3
    out = (rho / math.log(log_inv_s)) * np.sqrt(inside)
    return out if out.ndim else float(out)


def truncation_event(spec: InnovationSpec, ctx: SeedContext, k: int,
                     rho: float, log_inv_s: float,
                     direct_terms: int = 1 << 18) -> TruncationEvent:
    g_mid = analytics.boundary_variance_enclosure_log(log_inv_s,
                                                      direct_terms).mid
    thr = clip_threshold(k, log_inv_s, rho, g_mid)
    eta = draw_block(spec, ctx, k, k + 1)[0]
    return TruncationEvent(k, log_inv_s, rho, float(thr),
                           bool(abs(eta) > thr))


def _as_depths(s_points=None, log_inv_s=None) -> np.ndarray:
    if (s_points is None) == (log_inv_s is None):
        raise DomainError("give exactly one of s_points or log_inv_s")
    if s_points is not None:
        arr = np.asarray([float(v) for v in s_points])
        if np.any(arr <= 0.0):
            raise DomainError("s points must be positive")
        depths = -np.log(arr)
    else:
        depths = np.asarray([float(v) for v in log_inv_s])
    if np.any(depths <= math.e):
        raise DomainError("LIL depths need s < exp(-e), i.e. log(1/s) > e")
    if depths.size > 1 and np.any(np.diff(depths) <= 0.0):
        raise DomainError("depths must be strictly increasing "
                          "(s strictly descending)")
    return depths


def normalized_marginal_sd(log_inv_s: float,
                           direct_terms: int = 1 << 20) -> float:
    """Closed formula for the SD of one normalized trajectory value:
    (2 logloglog(1/s))^(-1/2) * sqrt(variance_sum / log(1/s))."""
    g_mid = analytics.boundary_variance_enclosure_log(log_inv_s,
                                                      direct_terms).mid
    return analytics.normalizer_log("lil", log_inv_s) * math.sqrt(g_mid)


def _trajectory_from_raw(depths, raw, sigma, route) -> Trajectory:
    f = np.array([analytics.normalizer_log("lil", L) for L in depths])
    normalized = f * raw / sigma
    return Trajectory(depths, raw, normalized,
                      np.maximum.accumulate(normalized),
                      np.minimum.accumulate(normalized), route)


def trajectory_ensemble(spec: InnovationSpec, ctx: SeedContext, n_rep: int,
                        s_points=None, log_inv_s=None, policy: str = "auto",
                        rel_tol: float = 0.01,
                        n_max: int = series_engine.N_MAX_DEFAULT,
                        direct_terms: int = 1 << 20,
                        workers: int = 1) -> list[Trajectory]:
    """n_rep independent trajectories, replicate r on stream + r.

    policy "summation" forces direct summation (all points must be
    feasible), "exact" forces the joint Gaussian route (gaussian spec
    only), "auto" sums when every point is feasible and otherwise falls
    back to the exact route.  A trajectory is never mixed-route: cross-s
    correlations are part of the object under study.
    """
    depths = _as_depths(s_points, log_inv_s)
    if policy not in ("auto", "summation", "exact"):
        raise DomainError(f"unknown engine policy {policy!r}")
    route = policy
    if policy == "auto":
        route = "summation" if _all_feasible(depths, rel_tol, n_max) \
            else "exact"
    if route == "summation":
        s_vals = np.exp(-depths)
        if np.any(s_vals <= 0.0):
            raise FeasibilityError("depths underflow the summable range")
        out = []
        for r in range(n_rep):
            pe = series_engine.evaluate_path(-0.5, s_vals, spec,
                                             ctx.stream(r), rel_tol, n_max,
                                             workers)
            out.append(_trajectory_from_raw(depths, pe.values, spec.sigma,
                                            "summation"))
        return out
    if spec.family != "gaussian":
        raise FeasibilityError(
            "deep points are unreachable by summation and the exact joint "
            "law is available for gaussian innovations only")
    fc = gaussian_exact.build_cov(gaussian_exact.CovGrid.lil_log(depths),
                                  spec.sigma, direct_terms)
    ens = gaussian_exact.sample_ensemble(fc, n_rep, ctx)
    return [_trajectory_from_raw(depths, ens.values[r], spec.sigma, "exact")
            for r in range(n_rep)]


def _all_feasible(depths, rel_tol, n_max) -> bool:
    for L in depths:
        s = math.exp(-L)
        if s <= 0.0:
            return False
        try:
            scale = analytics.boundary_variance_enclosure_log(L, 1 << 14).mid
            series_engine.plan_truncation(-0.5, s, rel_tol, scale, n_max)
        except FeasibilityError:
            return False
    return True


def normalized_trajectory(spec: InnovationSpec, ctx: SeedContext,
                          s_points=None, log_inv_s=None,
                          policy: str = "auto", rel_tol: float = 0.01,
                          n_max: int = series_engine.N_MAX_DEFAULT,
                          direct_terms: int = 1 << 20,
                          workers: int = 1) -> Trajectory:
    """One consistent path (single omega) across all depths."""
    return trajectory_ensemble(spec, ctx, 1, s_points, log_inv_s, policy,
                               rel_tol, n_max, direct_terms, workers)[0]


@dataclass
class CoverageReport:
    """Histogram of normalized values against the limit set [-1, 1]."""

    counts: np.ndarray
    bin_edges: np.ndarray
    fraction_inside: float
    n_values: int
    max_abs: float
    n_exceed: int


def limit_set_coverage(trajectories, bins: int = 60) -> CoverageReport:
    """Pooled histogram over [-1.5, 1.5] plus the [-1, 1] mass fraction.

    The +-1 endpoints are asymptotic suprema, approached at triple-log
    speed; at reachable depths nearly all mass must sit strictly inside.
    Requires at least 100 trajectories.
    """
    trajectories = list(trajectories)
    if len(trajectories) < 100:
        raise InsufficientSampleError("need at least 100 trajectories")
    vals = np.concatenate([t.normalized for t in trajectories])
    counts, edges = np.histogram(vals, bins=bins, range=(-1.5, 1.5))
    inside = float(np.mean(np.abs(vals) <= 1.0))
    return CoverageReport(counts, edges, inside, vals.size,
                          float(np.max(np.abs(vals))),
                          int(np.sum(np.abs(vals) > 1.0)))


@dataclass
class TruncationDiagnostics:
    fired_count: int
    fired_weighted_sum: float
    fired_weighted_expectation: float
    expectation_remainder_bound: float


def truncation_diagnostics(spec: InnovationSpec, ctx: SeedContext,
                           rho: float, k_max: int, s: float = None,
                           log_inv_s: float = None,
                           direct_terms: int = 1 << 18
                           ) -> TruncationDiagnostics:
    """Clipping-event census over the indices past the negligible head.

    Counts fired events for k in (M(s), k_max], the pathwise clipped sum
    sum w_k |eta_k| 1{fired} and its expectation analogue
    sum w_k E[|eta| 1{|eta| > thr_k}], where w_k = (log k)^(-1/2)
    k^(-1/2-s).  The expectation sum carries a certified bound on its
    k > k_max remainder (Markov on the threshold plus the E1 tail).

    For bounded innovations and small enough s every threshold exceeds
    the essential bound and all three numbers are exactly zero.
    """
    depths = _as_depths(s_points=[s] if s is not None else None,
                        log_inv_s=[log_inv_s] if log_inv_s is not None
                        else None)
    L = float(depths[0])
    m_head = analytics.head_cutoff_log(L)
    if k_max < m_head + 1:
        raise DomainError(f"k_max must be at least M+1 = {m_head + 1}")
    g_mid = analytics.boundary_variance_enclosure_log(L, direct_terms).mid
    s_val = math.exp(-L)
    fired_count = 0
    path_sum = 0.0
    expect_sum = 0.0
    chunk = 1 << 16
    for lo in range(m_head + 1, k_max + 1, chunk):
        hi = min(k_max, lo + chunk - 1)
        k = np.arange(lo, hi + 1, dtype=np.float64)
        lk = np.log(k)
        w = np.exp(-0.5 * np.log(lk) - (0.5 + s_val) * lk)
        thr = clip_threshold(k, L, rho, g_mid)
        eta = draw_block(spec, ctx, lo, hi + 1)
        fired = np.abs(eta) > thr
        fired_count += int(np.sum(fired))
        path_sum += float(np.sum(w * np.abs(eta) * fired))
        expect_sum += float(np.sum(w * truncated_abs_moment(spec, thr)))
    bound = spec.abs_bound()
    if bound is not None and \
            clip_threshold(k_max + 1, L, rho, g_mid) >= bound:
        # thresholds increase in k, so no event past k_max can fire
        remainder = 0.0
    else:
        log3 = math.log(math.log(L))
        tail = analytics.exp_integral_e1_log(
            math.log(2.0) - L + math.log(math.log(k_max))).hi
        remainder = (spec.sigma ** 2 * (math.log(L) / rho)
                     * math.sqrt(log3 / g_mid) * tail)
    return TruncationDiagnostics(fired_count, path_sum, expect_sum,
                                 float(remainder))


# ---------------------------------------------------------------------------
# Fragment decay
# ---------------------------------------------------------------------------

FRAGMENT_KINDS = ("head_raw", "head_clipped", "tail_variance")


def _default_n1(L: float) -> int:
    return int(math.floor(math.sqrt(L)))


def _default_loglog_n2(L: float) -> float:
    # N2 = exp(e^L / L):  loglog N2 = L - log L, so loglog N2 / L -> 1 and
    # s log N2 = 1/L -> 0, the two conditions a valid far window must meet
    return L - math.log(L)


def fragment_decay(kind: str, spec: InnovationSpec, ctx: SeedContext,
                   s_list=None, log_inv_s_list=None, rho: float = 1.0,
                   m_fn=None, n1_fn=None, loglog_n2_fn=None,
                   direct_terms: int = 1 << 18) -> np.ndarray:
    """Normalized magnitude of a series fragment, one value per depth.

    head_raw        f(s) |sum_{k=2}^{M(s)} w_k eta_k|, the negligible head
    head_clipped    same over k <= N1(s) with clipped-and-centered
                    innovations at level rho
    tail_variance   f(s) sigma sqrt(variance of the k > N2(s) tail), a
                    deterministic certified value (the only way to reach
                    N2, which is doubly exponential in log(1/s))

    The cutoff families are pluggable: m_fn and n1_fn map L = log(1/s) to
    an index, loglog_n2_fn maps L to loglog N2(s) (the far window is too
    large to address directly).  Defaults: floor(L/log L), floor(sqrt(L)),
    and L - log L.
    """
    if kind not in FRAGMENT_KINDS:
        raise DomainError(f"unknown fragment kind {kind!r}")
    depths = _as_depths(s_list, log_inv_s_list)
    m_fn = m_fn or analytics.head_cutoff_log
    n1_fn = n1_fn or _default_n1
    loglog_n2_fn = loglog_n2_fn or _default_loglog_n2
    out = np.empty(depths.size)
    for i, L in enumerate(depths):
        f = analytics.normalizer_log("lil", L)
        s_val = math.exp(-L)
        if kind == "tail_variance":
            enc = analytics.exp_integral_e1_log(
                math.log(2.0) - L + loglog_n2_fn(L))
            out[i] = f * spec.sigma * math.sqrt(max(enc.mid, 0.0))
            continue
        cutoff = m_fn(L) if kind == "head_raw" else n1_fn(L)
        if cutoff < 2:
            out[i] = 0.0
            continue
        k = np.arange(2, cutoff + 1, dtype=np.float64)
        lk = np.log(k)
        w = np.exp(-0.5 * np.log(lk) - (0.5 + s_val) * lk)
        eta = draw_block(spec, ctx, 2, cutoff + 1)
        if kind == "head_clipped":
            g_mid = analytics.boundary_variance_enclosure_log(
                L, direct_terms).mid
            thr = clip_threshold(k, L, rho, g_mid)
            eta = np.where(np.abs(eta) <= thr, eta, 0.0) \
                + truncated_signed_moment(spec, thr)
        out[i] = f * abs(float(np.sum(w * eta)))
    return out
