"""Innovation laws and indexable white noise driving the random series.

The series under study is built from an i.i.d. sequence eta_2, eta_3, ...
with E[eta] = 0 and E[eta^2] = sigma^2.  Pathwise experiments evaluate one
fixed realization of that sequence at many exponents, many cutoffs and on
any number of workers, so the value attached to index k must never depend
on evaluation order or on how many draws happened before.  We therefore
produce eta_k as a pure function of (master_seed, stream_id, k): a Philox
4x64 counter generator is keyed on (master_seed, stream_id) and index k is
mapped to word k mod 4 of counter block k div 4.  Every family consumes
exactly one 64-bit word per index, so indexing never drifts.

Families (each rescaled internally so the variance is sigma^2 exactly):

  rademacher             +sigma or -sigma with probability 1/2
  gaussian               N(0, sigma^2) via the inverse CDF
  centered_uniform       uniform on [-sigma*sqrt(3), sigma*sqrt(3)]
  two_point(p)           a with probability p, b with probability 1 - p,
                         where a, b are forced by the two moment equations
  centered_exponential   sigma*(E - 1) with E standard exponential, an
                         unbounded finite-variance stress case

Besides sampling, the module provides the exact truncated moments
E[eta^2 1{|eta|>a}], E[|eta| 1{|eta|>a}] and E[eta 1{|eta|>a}] in closed
form; these feed the Lindeberg sums and the clipping diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .errors import DomainError

FAMILIES = (
    "rademacher",
    "gaussian",
    "centered_uniform",
    "two_point",
    "centered_exponential",
)

_U64 = np.uint64
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class InnovationSpec:
    """A zero-mean innovation law with standard deviation sigma.

    two_point carries its extra parameter p in (0, 1); the support values
    a = sigma*sqrt((1-p)/p) (probability p) and b = -sigma*sqrt(p/(1-p))
    are the unique pair with mean 0 and variance sigma^2.
    """

    family: str
    sigma: float
    p: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown innovation family {self.family!r}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be a positive finite real")
        if self.family == "two_point":
            if self.p is None or not (0.0 < self.p < 1.0):
                raise DomainError("two_point requires p in (0, 1)")
        elif self.p is not None:
            raise DomainError(f"family {self.family!r} takes no p parameter")

    def two_point_support(self) -> tuple[float, float]:
        """(a, b) with p*a + (1-p)*b = 0 and p*a^2 + (1-p)*b^2 = sigma^2."""
        if self.family != "two_point":
            raise DomainError("support pair is defined for two_point only")
        a = self.sigma * math.sqrt((1.0 - self.p) / self.p)
        b = -self.sigma * math.sqrt(self.p / (1.0 - self.p))
        return a, b

    def abs_bound(self) -> float | None:
        """Essential sup of |eta|, or None for unbounded families."""
        if self.family == "rademacher":
            return self.sigma
        if self.family == "centered_uniform":
            return self.sigma * math.sqrt(3.0)
        if self.family == "two_point":
            a, b = self.two_point_support()
            return max(a, -b)
        return None


@dataclass(frozen=True)
class SeedContext:
    """Identifies one noise path: (master_seed, stream_id, k) -> eta_k.

    There is no hidden state; two contexts with equal fields address the
    identical sequence.  Replicates use distinct stream ids.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise DomainError(f"{name} must fit in an unsigned 64-bit word")

    def stream(self, offset: int) -> "SeedContext":
        """Context for a sibling stream (replicate offset)."""
        return SeedContext(self.master_seed, (self.stream_id + offset) % 2**64)


def _uniform_words(ctx: SeedContext, start: int, stop: int) -> np.ndarray:
    """Open-interval uniforms for indices [start, stop), one word each."""
    if stop <= start:
        return np.empty(0, dtype=np.float64)
    c0 = start >> 2
    c1 = ((stop - 1) >> 2) + 1
    bg = Philox(key=[ctx.master_seed, ctx.stream_id], counter=[c0, 0, 0, 0])
    words = bg.random_raw(4 * (c1 - c0))
    words = words[start - 4 * c0: start - 4 * c0 + (stop - start)]
    # (w >> 11) + 0.5 scaled by 2^-53 lies strictly inside (0, 1)
    return ((words >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _transform(spec: InnovationSpec, u: np.ndarray) -> np.ndarray:
    """Map open-interval uniforms to the law of spec, one draw per word."""
    s = spec.sigma
    if spec.family == "rademacher":
        return np.where(u < 0.5, s, -s)
    if spec.family == "gaussian":
        return s * ndtri(u)
    if spec.family == "centered_uniform":
        return (s * math.sqrt(3.0)) * (2.0 * u - 1.0)
    if spec.family == "two_point":
        a, b = spec.two_point_support()
        return np.where(u < spec.p, a, b)
    # centered_exponential: E = -log(1 - u) is standard exponential
    return s * (-np.log1p(-u) - 1.0)


def noise_block(spec: InnovationSpec, ctx: SeedContext,
                start: int, stop: int) -> np.ndarray:
    """Draws for arbitrary index range [start, stop); no k >= 2 floor.

    Internal entry point for samplers that reserve their own index regions
    (multivariate normal draws, mesh increments).  Series code must go
    through draw/draw_block, which enforce the k >= 2 contract.
    """
    return _transform(spec, _uniform_words(ctx, start, stop))


def draw_block(spec: InnovationSpec, ctx: SeedContext,
               start: int, stop: int) -> np.ndarray:
    """eta_k for k in [start, stop), start >= 2, bit-reproducible."""
    if start < 2:
        raise DomainError("series indices start at k = 2")
    return noise_block(spec, ctx, start, stop)


def draw(spec: InnovationSpec, ctx: SeedContext, k: int) -> float:
    """The single innovation eta_k; a pure function of its arguments."""
    if k < 2:
        raise DomainError("series indices start at k = 2")
    return float(draw_block(spec, ctx, k, k + 1)[0])


# ---------------------------------------------------------------------------
# Exact truncated moments.  All accept scalar or ndarray thresholds a >= 0.
# ---------------------------------------------------------------------------

def _norm_tail(c):
    """P(Z > c) for standard normal, vectorized."""
    from scipy.special import erfc
    return 0.5 * erfc(np.asarray(c) / math.sqrt(2.0))


def truncated_second_moment(spec: InnovationSpec, a):
    """E[eta^2 1{|eta| > a}], exact (closed form per family).

    Equals sigma^2 at a = 0, is nonincreasing in a, and vanishes for
    a >= ess sup |eta| on bounded families.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0.0):
        raise DomainError("threshold a must be nonnegative")
    s = spec.sigma
    if spec.family == "rademacher":
        out = np.where(a < s, s * s, 0.0)
    elif spec.family == "gaussian":
        c = a / s
        phi = _INV_SQRT_2PI * np.exp(-0.5 * c * c)
        out = (s * s) * 2.0 * (c * phi + _norm_tail(c))
    elif spec.family == "centered_uniform":
        m = s * math.sqrt(3.0)
        out = np.where(a < m, (m**3 - np.minimum(a, m) ** 3) / (3.0 * m), 0.0)
    elif spec.family == "two_point":
        va, vb = spec.two_point_support()
        out = spec.p * va * va * (va > a) + (1.0 - spec.p) * vb * vb * (-vb > a)
    else:  # centered_exponential
        c = a / s
        upper = np.exp(-(1.0 + c)) * ((1.0 + c) ** 2 + 1.0)
        low = np.where(c < 1.0,
                       1.0 - np.exp(-(1.0 - np.minimum(c, 1.0)))
                       * ((1.0 - np.minimum(c, 1.0)) ** 2 + 1.0),
                       0.0)
        out = (s * s) * (upper + low)
    return out if out.ndim else float(out)


def truncated_abs_moment(spec: InnovationSpec, a):
    """E[|eta| 1{|eta| > a}], exact."""
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0.0):
        raise DomainError("threshold a must be nonnegative")
    s = spec.sigma
    if spec.family == "rademacher":
        out = np.where(a < s, s, 0.0)
    elif spec.family == "gaussian":
        c = a / s
        out = s * 2.0 * _INV_SQRT_2PI * np.exp(-0.5 * c * c)
    elif spec.family == "centered_uniform":
        m = s * math.sqrt(3.0)
        out = np.where(a < m, (m * m - np.minimum(a, m) ** 2) / (2.0 * m), 0.0)
    elif spec.family == "two_point":
        va, vb = spec.two_point_support()
        out = spec.p * va * (va > a) + (1.0 - spec.p) * (-vb) * (-vb > a)
    else:  # centered_exponential
        c = a / s
        upper = np.exp(-(1.0 + c)) * (1.0 + c)
        low = np.where(c < 1.0,
                       (1.0 - np.minimum(c, 1.0))
                       * np.exp(-(1.0 - np.minimum(c, 1.0))),
                       0.0)
        out = s * (upper + low)
    return out if out.ndim else float(out)


def truncated_signed_moment(spec: InnovationSpec, a):
    """E[eta 1{|eta| > a}]; zero for the symmetric families.

    The complementary clipped mean is E[eta 1{|eta| <= a}] = -value,
    which is what centering after a clipping event needs.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0.0):
        raise DomainError("threshold a must be nonnegative")
    s = spec.sigma
    if spec.family in ("rademacher", "gaussian", "centered_uniform"):
        out = np.zeros_like(a)
    elif spec.family == "two_point":
        va, vb = spec.two_point_support()
        out = spec.p * va * (va > a) + (1.0 - spec.p) * vb * (-vb > a)
    else:  # centered_exponential
        c = a / s
        upper = np.exp(-(1.0 + c)) * (1.0 + c)
        low = np.where(c < 1.0,
                       (1.0 - np.minimum(c, 1.0))
                       * np.exp(-(1.0 - np.minimum(c, 1.0))),
                       0.0)
        out = s * (upper - low)
    return out if out.ndim else float(out)
