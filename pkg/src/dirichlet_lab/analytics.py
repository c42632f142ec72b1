"""Certified computation of every deterministic quantity in the laboratory.

All infinite sums handled here have eventually monotone decreasing terms,
so a partial sum plus the integral bracket

    integral over [N+1, inf) <= tail <= integral over [N, inf)

yields a rigorous two-sided enclosure at any parameter depth.  The tail
integrals reduce, after the change of variables y = e * log x, either to
the exponential integral E1 (log-weight exponent -1/2, the boundary case)
or to an upper incomplete gamma function (exponents above -1/2).

Parameters are routinely so deep that s itself underflows double
precision: the double-exponential grids exp(-exp(n^(1 +- gamma))) leave
the float range at n = 4 already.  Everything in this module therefore
also exists in log form, taking log(1/s) or log(exponent) instead of the
bare value; the E1 evaluator accepts the log of its argument so that tail
brackets stay meaningful when the argument underflows.

Contents:

  Enclosure                   certified interval [lo, hi]
  exp_integral_e1[_log]       E1(x) = integral of e^-y / y over [x, inf)
  kernel_sum_enclosure[_log]  sum_{k>=2} (log k)^(2 alpha) k^-(1+e)
  boundary_variance_enclosure the above with alpha = -1/2, e = 2s (the
                              variance of the boundary series, unit sigma)
  normalizer[_log]            closed-form normalizers (LIL, boundary FLT,
                              smooth-case LIL)
  schedule / head_cutoff      double-exponential parameter grids and the
                              negligible-head cutoff floor(L / log L)
  chaining_bound_check        dyadic increment energy vs. its bound
  i_concave_gap               concavity gap of I(y) = int_0^y (1-e^-x)/x
  lindeberg_term              the triangular-array Lindeberg sum
  decreasing_kernel_check     monotonicity of x^-1 e^-x (e^-ax - e^-bx)^2
  limit_process_cov           covariance of the smooth-case limit process
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .errors import DomainError, FeasibilityError
from .innovations import InnovationSpec, truncated_second_moment

_EULER = float(np.euler_gamma)
_EPS = float(np.finfo(np.float64).eps)
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Enclosure:
    """A certified interval: the exact value lies in [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


def _widen(value: float, margin: float) -> Enclosure:
    return Enclosure(value - margin, value + margin)


# ---------------------------------------------------------------------------
# Exponential integral E1 with certified error
# ---------------------------------------------------------------------------

def _e1_series(x: float, neg_log_x: float) -> Enclosure:
    """E1 for 0 <= x < 1 via -gamma - log x + sum (-1)^(n+1) x^n / (n n!).

    The series alternates with strictly decreasing term magnitudes for
    x < 1, so the truncation error is bounded by the first omitted term.
    neg_log_x is supplied by the caller: in the deep regime -log x is known
    exactly even when x itself has underflowed to zero.
    """
    total = 0.0
    abs_total = 0.0
    power = 1.0  # x^n / n!
    n = 0
    while True:
        n += 1
        power *= x / n
        term = power / n
        total += term if (n % 2 == 1) else -term
        abs_total += term
        nxt = power * x / ((n + 1) * (n + 1))
        if nxt < 1e-18 * (1.0 + abs_total) or n > 400:
            break
    value = neg_log_x - _EULER + total
    margin = (nxt + x * 1e-300  # truncation; underflowed-x guard
              + 8.0 * _EPS * (abs(neg_log_x) + _EULER + abs_total)
              + 4.0 * np.spacing(abs(value) + 1.0))
    return _widen(value, margin)


def _e1_contfrac(x: float) -> Enclosure:
    """E1 for x >= 1 via the even continued fraction, modified Lentz."""
    if x > 700.0:
        # e^-x underflow region: 0 < E1(x) <= e^-x < e^-700
        return Enclosure(0.0, math.exp(-700.0))
    tiny = 1e-300
    f = x + 1.0
    c = f
    d = 0.0
    rel = 1.0
    for n in range(1, 300):
        an = -float(n) * float(n)
        bn = x + 2.0 * n + 1.0
        d = bn + an * d
        if d == 0.0:
            d = tiny
        c = bn + an / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        rel = abs(delta - 1.0)
        if rel < 1e-16:
            break
    value = math.exp(-x) / f
    margin = value * (64.0 * _EPS + 4.0 * rel) + 5e-324
    return _widen(value, margin)


def exp_integral_e1(x: float) -> Enclosure:
    """Certified enclosure of E1(x) = int_x^inf y^-1 e^-y dy, x > 0.

    Width is far below 1e-12 * (1 + |value|) everywhere.
    """
    if not (x > 0.0):
        raise DomainError("E1 requires x > 0")
    if x < 1.0:
        return _e1_series(x, -math.log(x))
    return _e1_contfrac(x)


def exp_integral_e1_log(log_x: float) -> Enclosure:
    """E1(exp(log_x)); usable when the argument underflows (log_x << -745)."""
    if not math.isfinite(log_x):
        raise DomainError("log argument must be finite")
    if log_x < 0.0:
        return _e1_series(math.exp(log_x), -log_x)
    return _e1_contfrac(math.exp(log_x))


def invert_e1(target: float) -> float:
    """x with E1(x) = target (midpoint sense); target > 0.  E1 decreases."""
    if not (target > 0.0):
        raise DomainError("target must be positive")
    hi = 1.0
    while exp_integral_e1(hi).mid > target and hi < 700.0:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 1e-12
    while exp_integral_e1(lo).mid < target and lo > 1e-290:
        lo /= 4.0
    for _ in range(200):
        m = math.sqrt(lo * hi)
        if exp_integral_e1(m).mid > target:
            lo = m
        else:
            hi = m
        if hi / lo < 1.0 + 1e-14:
            break
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# Kernel sums  sum_{k>=2} (log k)^(2 alpha) k^-(1+e)
# ---------------------------------------------------------------------------

def _direct_kernel_sum(two_alpha: float, e: float, n_terms: int) -> tuple[float, float]:
    """Partial sum over k = 2..n_terms plus a rounding margin.

    Summation is chunked; each chunk uses numpy pairwise summation and the
    chunks are combined in fixed order, so the result is reproducible and
    the naive (depth * eps * mass) rounding bound applies with depth
    log2(n) + chunks.
    """
    total = 0.0
    for lo in range(2, n_terms + 1, _CHUNK):
        hi = min(n_terms, lo + _CHUNK - 1)
        k = np.arange(lo, hi + 1, dtype=np.float64)
        lk = np.log(k)
        total += float(np.sum(np.exp(two_alpha * np.log(lk) - (1.0 + e) * lk)))
    depth = math.log2(max(n_terms, 4)) + 8.0
    margin = depth * _EPS * total
    # if e is denormal, (1 + e) rounds it away; each term is then off by a
    # relative e * log k, bounded in total by e * log(N) * mass
    if 0.0 < e < 1e-16:
        margin += total * min(e * math.log(n_terms + 1), 1.0)
    return total, margin


def _tail_integral(two_alpha: float, e: float, log_e: float,
                   from_n: int) -> Enclosure:
    """Enclosure of int_{from_n}^inf (log x)^(2 alpha) x^-(1+e) dx.

    With y = e log x this is e^-(1+2 alpha) Gamma(1 + 2 alpha, e log N);
    the boundary exponent 2 alpha = -1 gives E1(e log N) exactly.
    """
    if two_alpha == -1.0:
        return exp_integral_e1_log(log_e + math.log(math.log(from_n)))
    a = 1.0 + two_alpha
    if e <= 0.0:
        raise DomainError("tail integral needs a representable exponent "
                          "for log-weight powers above -1/2")
    x0 = e * math.log(from_n)
    value = gammaincc(a, x0) * gamma_fn(a) / e**a
    return _widen(value, 1e-12 * value + 5e-324)


def _monotone_floor(alpha: float, e: float) -> int:
    """Smallest N with (log x)^(2 alpha) x^-(1+e) decreasing on [N, inf)."""
    if alpha <= 0.0:
        return 3
    return int(math.ceil(math.exp(2.0 * alpha / (1.0 + e)))) + 1


def kernel_sum_enclosure(alpha: float, e1_exp: float, e2_exp: float,
                         direct_terms: int = 1 << 20) -> Enclosure:
    """Enclosure of sum_{k>=2} (log k)^(2 alpha) k^-(1 + e1_exp + e2_exp).

    This is the covariance of the series at a pair of exponents (unit
    innovation variance).  Requires e1_exp + e2_exp > 0; at zero the sum
    diverges for every alpha >= -1/2.
    """
    if alpha < -0.5:
        raise DomainError("log-weight exponent below -1/2 is out of scope")
    if e1_exp < 0.0 or e2_exp < 0.0:
        raise DomainError("exponents must be nonnegative")
    e = e1_exp + e2_exp
    if e <= 0.0:
        raise DomainError("exponent sum must be positive: the series "
                          "diverges at zero exponent")
    return _kernel_sum_impl(alpha, e, math.log(e), direct_terms)


def kernel_sum_enclosure_log(alpha: float, log_e: float,
                             direct_terms: int = 1 << 20) -> Enclosure:
    """kernel_sum_enclosure with the exponent sum given as log(e).

    The log form keeps tail brackets certified when e underflows double
    precision (deep grids); only the boundary weight alpha = -1/2 needs
    that regime, and the incomplete-gamma route rejects it.
    """
    if not math.isfinite(log_e):
        raise DomainError("log exponent must be finite")
    e = math.exp(log_e)  # may underflow to 0.0; handled downstream
    return _kernel_sum_impl(alpha, e, log_e, direct_terms)


def _kernel_sum_impl(alpha, e, log_e, direct_terms):
    two_alpha = 2.0 * alpha
    n = max(int(direct_terms), 16, _monotone_floor(alpha, e))
    direct, margin = _direct_kernel_sum(two_alpha, e, n)
    if two_alpha == -1.0:
        tail_hi = exp_integral_e1_log(log_e + math.log(math.log(n)))
        tail_lo = exp_integral_e1_log(log_e + math.log(math.log(n + 1)))
    else:
        tail_hi = _tail_integral(two_alpha, e, log_e, n)
        tail_lo = _tail_integral(two_alpha, e, log_e, n + 1)
    return Enclosure(direct - margin + tail_lo.lo, direct + margin + tail_hi.hi)


def boundary_variance_enclosure(s: float, direct_terms: int = 1 << 20) -> Enclosure:
    """Variance sum_{k>=2} (log k)^-1 k^-(1+2s) of the boundary series.

    Grows like log(1/s) as s tends to 0; unit innovation variance.
    """
    if not (s > 0.0):
        raise DomainError("s must be positive")
    if direct_terms < 2:
        raise DomainError("need at least two direct terms")
    return kernel_sum_enclosure(-0.5, s, s, direct_terms)


def boundary_variance_enclosure_log(log_inv_s: float,
                                    direct_terms: int = 1 << 20) -> Enclosure:
    """Boundary variance with depth given as log(1/s); any depth works."""
    return kernel_sum_enclosure_log(-0.5, math.log(2.0) - log_inv_s,
                                    direct_terms)


# ---------------------------------------------------------------------------
# Normalizers
# ---------------------------------------------------------------------------

NORMALIZER_KINDS = ("lil", "lil_variance", "alpha_lil", "flt")


def normalizer_log(kind: str, log_inv_s: float, alpha: float | None = None,
                   sigma: float = 1.0, direct_terms: int = 1 << 20) -> float:
    """Closed-form normalizers, with depth passed as L = log(1/s).

      lil           (2 L logloglog(1/s))^(-1/2)     [needs L > e]
      lil_variance  same with the exact variance sum replacing L
      flt           L^(-1/2)                        [needs L > 0]

    alpha_lil is defined only for representable s; use normalizer().
    """
    if kind in ("lil", "lil_variance"):
        if not (log_inv_s > math.e):
            raise DomainError("LIL normalizer needs s < exp(-e)")
        log3 = math.log(math.log(log_inv_s))
        if kind == "lil":
            return 1.0 / math.sqrt(2.0 * log_inv_s * log3)
        g_mid = boundary_variance_enclosure_log(log_inv_s, direct_terms).mid
        return 1.0 / math.sqrt(2.0 * g_mid * log3)
    if kind == "flt":
        if not (log_inv_s > 0.0):
            raise DomainError("boundary FLT normalizer needs s < 1")
        return 1.0 / math.sqrt(log_inv_s)
    if kind == "alpha_lil":
        raise DomainError("alpha_lil requires a representable s; "
                          "call normalizer()")
    raise DomainError(f"unknown normalizer kind {kind!r}")


def normalizer(kind: str, s: float, alpha: float | None = None,
               sigma: float = 1.0, direct_terms: int = 1 << 20) -> float:
    """Normalizers as functions of s itself.

    alpha_lil(s) = (2^(2 alpha) / (sigma^2 Gamma(1+2 alpha))
                    * s^(1+2 alpha) / loglog(1/s))^(1/2), for s < 1/e and
    alpha > -1/2; the remaining kinds defer to normalizer_log.
    """
    if not (s > 0.0):
        raise DomainError("s must be positive")
    if kind == "alpha_lil":
        if alpha is None or alpha <= -0.5:
            raise DomainError("alpha_lil needs alpha > -1/2")
        L = -math.log(s)
        if not (L > 1.0):
            raise DomainError("alpha_lil needs s < exp(-1)")
        num = 2.0 ** (2.0 * alpha) * s ** (1.0 + 2.0 * alpha)
        den = sigma * sigma * gamma_fn(1.0 + 2.0 * alpha) * math.log(L)
        return math.sqrt(num / den)
    return normalizer_log(kind, -math.log(s), alpha, sigma, direct_terms)


# ---------------------------------------------------------------------------
# Parameter schedules
# ---------------------------------------------------------------------------

SCHEDULE_VARIANTS = ("slow_grid", "fast_grid", "v")


def schedule(variant: str, gamma: float, n: int) -> float:
    """Double-exponential grids s_n = exp(-exp(n^(1 -+ gamma))).

    Returned in log-log form (the value loglog(1/s_n), exact in double
    precision) because s_n itself underflows at n = 4 already:

      slow_grid  loglog(1/s_n) = n^(1-gamma), gamma in (0, 1/2); points
                 thin slowly enough for dyadic chaining between neighbors
      fast_grid  loglog(1/s_n) = n^(1+gamma), gamma > 0; points thin fast
                 enough that disjoint index windows give independence
      v          the chaining coordinate v_n = 1/log(1/s_n), returned as
                 the value exp(-n^(1-gamma)) itself

    Use s_value() to materialize s_n when it is representable.
    """
    if n < 1:
        raise DomainError("schedule index n must be >= 1")
    if variant == "slow_grid":
        if not (0.0 < gamma < 0.5):
            raise DomainError("slow_grid needs gamma in (0, 1/2)")
        return float(n) ** (1.0 - gamma)
    if variant == "v":
        if not (0.0 <= gamma < 0.5):
            raise DomainError("v needs gamma in [0, 1/2)")
        return math.exp(-(float(n) ** (1.0 - gamma)))
    if variant == "fast_grid":
        if not (gamma > 0.0):
            raise DomainError("fast_grid needs gamma > 0")
        return float(n) ** (1.0 + gamma)
    raise DomainError(f"unknown schedule variant {variant!r}")


def s_value(loglog_inv_s: float) -> float:
    """exp(-exp(x)); underflows honestly to 0.0 beyond x ~ 6.6."""
    return math.exp(-math.exp(min(loglog_inv_s, 710.0)))


def head_cutoff_log(log_inv_s: float) -> int:
    """floor(L / log L): indices up to here contribute negligibly."""
    if not (log_inv_s > 1.0):
        raise DomainError("head cutoff needs log(1/s) > 1")
    return int(math.floor(log_inv_s / math.log(log_inv_s)))


def head_cutoff(s: float) -> int:
    """Negligible-head cutoff floor(log(1/s) / loglog(1/s)), s < 1/e."""
    if not (0.0 < s < math.exp(-1.0)):
        raise DomainError("head cutoff needs s in (0, 1/e)")
    return head_cutoff_log(-math.log(s))


def flt_head_cutoff(s_big: float) -> int:
    """Negligible-head cutoff floor(sqrt(s)) for the large-s form."""
    if not (s_big > 0.0):
        raise DomainError("s_big must be positive")
    return int(math.floor(math.sqrt(s_big)))


def grid_summability_exponents(gamma: float, rho: float,
                               delta: float) -> tuple[float, float]:
    """The two summability exponents controlling the grid arguments.

    First entry must exceed 1 for the upper-bound grid (slow_grid with
    clipping level rho) and the second must stay below 1 for the
    lower-bound grid (fast_grid with window parameter delta).  Diagnostics
    only; nothing else consumes these.
    """
    upper = (1.0 - gamma) * (1.0 + gamma) ** 2 \
        * (2.0 - math.exp(2.0 * math.sqrt(2.0) * (1.0 + gamma) * rho))
    lower = (1.0 + gamma) * (1.0 - delta * delta / 8.0)
    return upper, lower


# ---------------------------------------------------------------------------
# Dyadic chaining increments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainingConfig:
    """One dyadic increment: level j, position m, between grid points
    n and n+1 (lil mode) or on the unit time interval (flt mode, which
    additionally needs the large parameter s_big)."""

    gamma: float
    n: int
    j: int
    m: int
    s_big: float | None = None

    def __post_init__(self):
        if not (0.0 < self.gamma < 0.5):
            raise DomainError("gamma must lie in (0, 1/2)")
        if self.n < 2:
            raise DomainError("grid index n must be >= 2")
        if self.j < 0:
            raise DomainError("dyadic level j must be >= 0")
        if not (1 <= self.m <= 2**self.j):
            raise DomainError("position m must lie in [1, 2^j]")


@dataclass(frozen=True)
class ChainingCheck:
    a_value: Enclosure
    bound: float
    satisfied: bool


def _increment_energy(start_k: int, log_a: float, log_b: float,
                      direct_terms: int) -> Enclosure:
    """Enclosure of sum_{k>=start_k} (k log k)^-1 (k^-a - k^-b)^2.

    Exponents arrive as logs; a >= b is arranged internally.  The summand
    is decreasing in k beyond k = 3 (it is x^-1 e^-x (e^-ax - e^-bx)^2 at
    x = log k, a product of decreasing positive factors there), so the
    monotone integral bracket applies; the integral reduces to E1 terms.
    """
    if log_a < log_b:
        log_a, log_b = log_b, log_a
    n = max(int(direct_terms), start_k + 16, 16)
    if log_a == log_b:
        return Enclosure(0.0, 0.0)
    direct = 0.0
    for lo in range(start_k, n + 1, _CHUNK):
        hi = min(n, lo + _CHUNK - 1)
        k = np.arange(lo, hi + 1, dtype=np.float64)
        lk = np.log(k)
        b_lk = math.exp(log_b) * lk
        # a - b = e^log_b * expm1(log_a - log_b), stable at any depth
        d_lk = (math.exp(log_b) * math.expm1(log_a - log_b)) * lk
        diff = np.exp(-b_lk) * np.expm1(-d_lk)
        direct += float(np.sum(diff * diff / (k * lk)))
    margin = (math.log2(n) + 8.0) * _EPS * max(direct, 1e-300)
    log_ln = math.log(math.log(n))
    log_ln1 = math.log(math.log(n + 1))
    log2 = math.log(2.0)
    log_ab = float(np.logaddexp(log_a, log_b))
    hi_int = (exp_integral_e1_log(log2 + log_a + log_ln).hi
              + exp_integral_e1_log(log2 + log_b + log_ln).hi
              - 2.0 * exp_integral_e1_log(log_ab + log_ln).lo)
    lo_int = (exp_integral_e1_log(log2 + log_a + log_ln1).lo
              + exp_integral_e1_log(log2 + log_b + log_ln1).lo
              - 2.0 * exp_integral_e1_log(log_ab + log_ln1).hi)
    lo_val = max(0.0, direct - margin + min(lo_int, hi_int))
    hi_val = direct + margin + max(hi_int, 0.0)
    return Enclosure(min(lo_val, hi_val), hi_val)


def chaining_bound_check(cfg: ChainingConfig, mode: str = "lil",
                         direct_terms: int = 1 << 17) -> ChainingCheck:
    """Compare one dyadic increment energy against its certified bound.

    lil mode: nodes t_{j,m} = v_{n+1} + 2^-j m (v_n - v_{n+1}) with
    v_n = exp(-n^(1-gamma)), exponents exp(-1/t), start index one past the
    negligible head; bound 2^-j (v_n - v_{n+1}) / v_{n+1}^2.

    flt mode: nodes t_{j,m} = 2^-j m on [0, 1], exponents exp(-t s_big),
    start index floor(sqrt(s_big)) + 1; bound 2^-j s_big.
    """
    if mode == "lil":
        v_n = schedule("v", cfg.gamma, cfg.n)
        v_n1 = schedule("v", cfg.gamma, cfg.n + 1)
        step = 2.0 ** (-cfg.j) * (v_n - v_n1)
        t_hi = v_n1 + step * cfg.m
        t_lo = v_n1 + step * (cfg.m - 1)
        log_a = -1.0 / t_hi
        log_b = -1.0 / t_lo
        start = head_cutoff_log(math.exp((cfg.n + 1) ** (1.0 - cfg.gamma))) + 1
        bound = step / (v_n1 * v_n1)
    elif mode == "flt":
        if cfg.s_big is None or cfg.s_big <= 0.0:
            raise DomainError("flt mode needs s_big > 0")
        t_hi = 2.0 ** (-cfg.j) * cfg.m
        t_lo = 2.0 ** (-cfg.j) * (cfg.m - 1)
        log_a = -t_hi * cfg.s_big
        log_b = -t_lo * cfg.s_big
        start = flt_head_cutoff(cfg.s_big) + 1
        bound = 2.0 ** (-cfg.j) * cfg.s_big
    else:
        raise DomainError(f"unknown chaining mode {mode!r}")
    start = max(start, 2)
    a_value = _increment_energy(start, log_a, log_b, direct_terms)
    return ChainingCheck(a_value, bound, a_value.hi <= bound)


# ---------------------------------------------------------------------------
# Concavity gap of I
# ---------------------------------------------------------------------------

def _one_minus_exp_over_x(x: float) -> float:
    # integrand of I, extended by its limit 1 at x = 0
    if x == 0.0:
        return 1.0
    return -math.expm1(-x) / x


def _i_transform(y: float, tol: float) -> float:
    if y == 0.0:
        return 0.0
    val, _ = quad(_one_minus_exp_over_x, 0.0, y, epsabs=tol, epsrel=0.0,
                  limit=200)
    return val


def i_concave_gap(a: float, b: float, quad_tol: float = 1e-12) -> float:
    """I(2a) + I(2b) - 2 I(a+b) with I(y) = int_0^y x^-1 (1 - e^-x) dx.

    The integrand is the Laplace transform of a uniform law, hence
    decreasing, hence I is concave and the true gap is <= 0; the returned
    value can exceed 0 only by the quadrature tolerance.
    """
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise DomainError("a and b must lie in [0, 1]")
    t = quad_tol / 4.0
    return _i_transform(2.0 * a, t) + _i_transform(2.0 * b, t) \
        - 2.0 * _i_transform(a + b, t)


# ---------------------------------------------------------------------------
# Lindeberg sum
# ---------------------------------------------------------------------------

def lindeberg_term(s_big: float, t: float, eps: float, spec: InnovationSpec,
                   tol: float = 1e-12) -> float:
    """Triangular-array Lindeberg sum for the boundary FLT at scale s_big.

    Computes (1/s) sum_{k>=2} (log k)^-1 k^-(1+2q) E[eta^2 1{|eta| > a_k}]
    with q = exp(-t s_big) and a_k = eps sqrt(s) (log k)^(1/2) k^(1/2+q).
    The sum is truncated once the certified remainder (monotone threshold
    times the E1 tail bracket) drops below tol; for bounded families it
    terminates exactly.
    """
    if not (s_big > 0.0 and t > 0.0 and eps > 0.0):
        raise DomainError("s_big, t, eps must be positive")
    if t * s_big > 700.0:
        raise DomainError("exponent exp(-t s_big) underflows; sum diverges "
                          "from the representable side")
    q = math.exp(-t * s_big)
    root_s = math.sqrt(s_big)
    total = 0.0
    k_lo = 2
    chunk = 1 << 14
    while k_lo < (1 << 26):
        k_hi = min(k_lo + chunk - 1, 1 << 26)
        k = np.arange(k_lo, k_hi + 1, dtype=np.float64)
        lk = np.log(k)
        w = np.exp(-(1.0 + 2.0 * q) * lk) / lk
        a_k = eps * root_s * np.sqrt(lk) * np.exp((0.5 + q) * lk)
        total += float(np.sum(w * truncated_second_moment(spec, a_k)))
        a_last = eps * root_s * math.sqrt(math.log(k_hi)) \
            * math.exp((0.5 + q) * math.log(k_hi))
        rem = truncated_second_moment(spec, a_last) \
            * exp_integral_e1(2.0 * q * math.log(k_hi)).hi
        if rem <= tol * s_big:
            return total / s_big
        k_lo = k_hi + 1
        chunk = min(chunk * 2, _CHUNK)
    raise FeasibilityError(
        f"Lindeberg sum did not certify remainder < {tol} within 2^26 terms "
        f"(s_big={s_big}, t={t}, eps={eps})")


# ---------------------------------------------------------------------------
# Monotone kernel check and the smooth-case limit covariance
# ---------------------------------------------------------------------------

def decreasing_kernel_check(a: float, b: float, grid) -> bool:
    """True if x -> x^-1 e^-x (e^-ax - e^-bx)^2 is nonincreasing on grid.

    grid must be ascending with all entries > 1 (the claim holds on
    (1, inf) only).  A few ulps of slack absorb rounding ties.
    """
    if not (a > 0.0 and b > 0.0) or a == b:
        raise DomainError("need positive a != b")
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0.0):
        raise DomainError("grid must be ascending with at least two points")
    if np.any(x <= 1.0):
        raise DomainError("grid entries must exceed 1")
    mn, mx = (a, b) if a < b else (b, a)
    h = np.exp(-(1.0 + 2.0 * mn) * x) * np.expm1(-(mx - mn) * x) ** 2 / x
    slack = 4.0 * _EPS * h[:-1] + 1e-300
    return bool(np.all(h[1:] <= h[:-1] + slack))


def limit_process_cov(alpha: float, t1: float, t2: float,
                      sigma: float = 1.0) -> float:
    """Covariance sigma^2 Gamma(1+2 alpha) / (t1+t2)^(1+2 alpha) of the
    smooth-case limit process sigma int y^alpha e^-ty dB(y)."""
    if alpha <= -0.5:
        raise DomainError("limit process needs alpha > -1/2")
    if not (t1 > 0.0 and t2 > 0.0):
        raise DomainError("t1, t2 must be positive")
    return sigma * sigma * gamma_fn(1.0 + 2.0 * alpha) \
        / (t1 + t2) ** (1.0 + 2.0 * alpha)
