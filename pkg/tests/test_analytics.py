"""Certified analytics: enclosures, normalizers, schedules, inequalities."""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import exp1 as scipy_exp1
from scipy.special import zeta

from dirichlet_lab import analytics
from dirichlet_lab.analytics import (ChainingConfig, Enclosure,
                                     boundary_variance_enclosure,
                                     boundary_variance_enclosure_log,
                                     chaining_bound_check,
                                     decreasing_kernel_check,
                                     exp_integral_e1, exp_integral_e1_log,
                                     head_cutoff, i_concave_gap, invert_e1,
                                     kernel_sum_enclosure,
                                     kernel_sum_enclosure_log,
                                     limit_process_cov, lindeberg_term,
                                     normalizer, normalizer_log, schedule)
from dirichlet_lab.errors import DomainError
from dirichlet_lab.innovations import InnovationSpec

RNG = np.random.Generator(np.random.Philox(key=[20240801, 1]))


# ---------------------------------------------------------------------------
# exponential integral
# ---------------------------------------------------------------------------

def test_e1_domain():
    with pytest.raises(DomainError):
        exp_integral_e1(0.0)
    with pytest.raises(DomainError):
        exp_integral_e1(-1.0)


def test_e1_small_x_oracle():
    # small-x expansion -log x - gamma
    enc = exp_integral_e1(1e-8)
    assert enc.lo > 17.0
    approx = -math.log(1e-8) - np.euler_gamma
    assert abs(enc.mid - approx) < 1e-7


def test_e1_quadrature_oracle():
    val, err = quad(lambda y: math.exp(-y) / y, 1.0, 50.0, epsabs=1e-14,
                    epsrel=0.0, limit=400)
    enc = exp_integral_e1(1.0)
    assert enc.lo - err <= val <= enc.hi + err


def test_e1_monotone():
    assert exp_integral_e1(2.0).hi < exp_integral_e1(1.0).lo


def test_e1_contains_mpmath_and_scipy():
    for lx in np.linspace(-40.0, 6.5, 97):
        enc = exp_integral_e1_log(float(lx))
        ref = float(mpmath.e1(mpmath.exp(lx)))
        assert enc.lo <= ref <= enc.hi
        if lx > -700:
            x = math.exp(lx)
            assert abs(scipy_exp1(x) - enc.mid) <= max(enc.width,
                                                       1e-13 * (1 + enc.mid))


def test_e1_width_contract():
    for x in np.geomspace(1e-10, 600.0, 60):
        enc = exp_integral_e1(float(x))
        assert enc.width <= 1e-12 * (1.0 + abs(enc.mid))


def test_e1_huge_argument():
    enc = exp_integral_e1(1e4)
    assert 0.0 <= enc.lo and enc.hi < 1e-300


def test_invert_e1_roundtrip():
    for target in (1e-6, 1e-3, 0.1, 1.0, 10.0):
        x = invert_e1(target)
        assert exp_integral_e1(x).mid == pytest.approx(target, rel=1e-10)


# ---------------------------------------------------------------------------
# kernel sums / variance enclosures
# ---------------------------------------------------------------------------

def _direct_sum_oracle(two_alpha, e, n):
    total = 0.0
    for lo in range(2, n + 1, 1 << 22):
        hi = min(n, lo + (1 << 22) - 1)
        k = np.arange(lo, hi + 1, dtype=np.float64)
        total += float(np.sum(np.log(k) ** two_alpha * k ** -(1.0 + e)))
    return total


def test_variance_enclosure_nesting_oracle():
    """Enclosure with 1e7 direct terms contains the 1e8-term enclosure."""
    enc = boundary_variance_enclosure(0.25, 10_000_000)
    assert enc.width < 1e-5
    big = boundary_variance_enclosure(0.25, 100_000_000)
    assert enc.lo <= big.lo and big.hi <= enc.hi


def test_variance_monotone_in_s():
    a = boundary_variance_enclosure(0.1, 1 << 18)
    b = boundary_variance_enclosure(0.5, 1 << 18)
    assert a.lo > b.hi


def test_variance_ratio_trend():
    # ratio to log(1/s) increases toward 1 and exceeds 0.9 at 1e-8
    ratios = [boundary_variance_enclosure(s, 1 << 20).mid / math.log(1.0 / s)
              for s in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(r2 > r1 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.9


def test_enclosure_widths_shrink_with_doubling():
    widths = [kernel_sum_enclosure(-0.5, 0.05, 0.05, 1 << p).width
              for p in (16, 17, 18, 19)]
    assert all(w2 < w1 for w1, w2 in zip(widths, widths[1:]))


def test_kernel_zeta_oracle():
    # alpha = 0, exponents summing to 2: zeta(3) - 1
    enc = kernel_sum_enclosure(0.0, 1.0, 1.0, 1 << 20)
    assert (zeta(3.0) - 1.0) in enc
    assert _direct_sum_oracle(0.0, 2.0, 1 << 23) <= enc.hi


def test_kernel_contains_bigger_direct_sum():
    for alpha, e1e, e2e in [(-0.5, 0.3, 0.2), (0.0, 0.5, 0.5), (1.0, 1.0, 0.4)]:
        enc = kernel_sum_enclosure(alpha, e1e, e2e, 1 << 16)
        big = _direct_sum_oracle(2 * alpha, e1e + e2e, 10 * (1 << 16))
        assert big <= enc.hi
        assert enc.lo <= big + kernel_sum_enclosure(
            alpha, e1e, e2e, 10 * (1 << 16)).hi - _direct_sum_oracle(
                2 * alpha, e1e + e2e, 10 * (1 << 16))  # lo <= full value


def test_kernel_divergence_rejected():
    with pytest.raises(DomainError):
        kernel_sum_enclosure(-0.5, 0.0, 0.0, 100)


def test_kernel_equals_variance_at_same_exponents():
    a = kernel_sum_enclosure(-0.5, 0.25, 0.25, 1 << 18)
    b = boundary_variance_enclosure(0.25, 1 << 18)
    assert a.lo == b.lo and a.hi == b.hi


def test_kernel_log_matches_linear():
    for e_sum in (1e-3, 0.2, 2.0):
        lin = kernel_sum_enclosure(-0.5, e_sum / 2, e_sum / 2, 1 << 16)
        log = kernel_sum_enclosure_log(-0.5, math.log(e_sum), 1 << 16)
        assert log.mid == pytest.approx(lin.mid, rel=1e-12)


def test_covariance_asymptote_deep():
    # midpoint / s_big approaches min(t1, t2) at s_big = 100
    s_big = 100.0
    enc = kernel_sum_enclosure_log(
        -0.5, float(np.logaddexp(-0.5 * s_big, -1.0 * s_big)), 1 << 20)
    assert abs(enc.mid / s_big - 0.5) < 0.1


def test_deep_variance_any_depth():
    # L = e^40: far beyond float s, still a relatively tight enclosure
    L = math.exp(40.0)
    enc = boundary_variance_enclosure_log(L, 1 << 18)
    assert enc.width < 1e-11 * enc.mid
    assert abs(enc.mid - L) < 1.0  # the variance sum is L - 0.543... + o(1)


# ---------------------------------------------------------------------------
# normalizers and schedules
# ---------------------------------------------------------------------------

def test_normalizer_exact_points():
    s0 = math.exp(-math.exp(math.e))
    assert normalizer("lil", s0) == pytest.approx(
        (2.0 * math.exp(math.e)) ** -0.5, rel=1e-14)
    # alpha_lil at alpha = 0: sqrt(s / (sigma^2 loglog 1/s))
    val = normalizer("alpha_lil", 0.01, alpha=0.0, sigma=2.0)
    assert val == pytest.approx(
        math.sqrt(0.01 / (4.0 * math.log(math.log(100.0)))), rel=1e-14)
    assert normalizer("flt", 0.25) == pytest.approx(
        1.0 / math.sqrt(math.log(4.0)), rel=1e-14)


def test_normalizer_domains():
    with pytest.raises(DomainError):
        normalizer("lil", 0.5)  # needs s < e^-e
    with pytest.raises(DomainError):
        normalizer("alpha_lil", 0.5, alpha=0.0)
    with pytest.raises(DomainError):
        normalizer("alpha_lil", 0.01, alpha=-0.6)
    with pytest.raises(DomainError):
        normalizer("nope", 0.01)


def test_variance_normalizer_trend():
    # ratio of the variance-based to the idealized normalizer tends to 1
    devs = [abs(normalizer("lil_variance", s) / normalizer("lil", s) - 1.0)
            for s in (1e-3, 1e-6, 1e-9)]
    assert devs[0] > devs[1] > devs[2]


def test_schedule_values():
    assert schedule("v", 0.0, 3) == pytest.approx(math.exp(-3.0), rel=1e-15)
    # defining identity, exact in log-log space
    assert schedule("slow_grid", 0.25, 5) == 5.0 ** 0.75
    assert schedule("fast_grid", 0.25, 5) == 5.0 ** 1.25
    with pytest.raises(DomainError):
        schedule("slow_grid", 0.7, 3)
    with pytest.raises(DomainError):
        schedule("v", 0.25, 0)


def test_head_cutoff_hand_value():
    # floor(20 / log 20) = 6
    assert head_cutoff(math.exp(-20.0)) == 6
    assert analytics.head_cutoff_log(20.0) == 6
    with pytest.raises(DomainError):
        head_cutoff(0.9)


def test_grid_summability_exponents():
    up, low = analytics.grid_summability_exponents(0.25, 0.01, 0.1)
    assert up > 1.0       # small rho satisfies the upper-grid condition
    assert low < 1.0 or low >= 1.0  # reported, not gated
    up2, _ = analytics.grid_summability_exponents(0.25, 0.05, 0.1)
    assert up2 < 1.0      # the documented default rho=0.05 violates it


# ---------------------------------------------------------------------------
# chaining bounds
# ---------------------------------------------------------------------------

def test_chaining_degenerate_zero():
    enc = analytics._increment_energy(4, -5.0, -5.0, 1 << 12)
    assert enc.lo == 0.0 and enc.hi == 0.0


def test_chaining_example_config():
    chk = chaining_bound_check(ChainingConfig(0.25, 3, 4, 7), "lil")
    assert chk.satisfied
    assert chk.a_value.hi <= chk.bound


def test_chaining_value_oracle():
    """flt-mode config with summable mass: mpmath partial sum + tail."""
    cfg = ChainingConfig(0.25, 2, 3, 1, s_big=10.0)
    chk = chaining_bound_check(cfg, "flt", direct_terms=1 << 17)
    a = math.exp(-(2.0 ** -3) * 10.0)   # exponent at t_{3,1}
    b = 1.0                             # exponent at t_{3,0} = 0
    start = math.floor(math.sqrt(10.0)) + 1
    direct = mpmath.nsum(
        lambda k: (mpmath.power(k, -a) - mpmath.power(k, -b)) ** 2
        / (k * mpmath.log(k)), [start, 200000], method="d")
    tail = mpmath.quad(
        lambda x: (mpmath.power(x, -a) - mpmath.power(x, -b)) ** 2
        / (x * mpmath.log(x)), [200000, mpmath.inf])
    oracle = float(direct + tail)
    assert chk.a_value.lo - 1e-9 <= oracle <= chk.a_value.hi + 1e-9
    assert chk.satisfied


def test_chaining_boundary_bound():
    # A*(j, s) <= 2^-j s at s = 10, j = 6
    rng = np.random.Generator(np.random.Philox(key=[3, 3]))
    for _ in range(5):
        m = int(rng.integers(1, 65))
        chk = chaining_bound_check(ChainingConfig(0.25, 2, 6, m, s_big=10.0),
                                   "flt")
        assert chk.a_value.hi <= 2.0 ** -6 * 10.0


def test_chaining_random_configs():
    for _ in range(40):
        gamma = float(RNG.uniform(0.1, 0.4))
        n = int(RNG.integers(2, 8))
        j = int(RNG.integers(0, 11))
        m = int(RNG.integers(1, 2**j + 1))
        chk = chaining_bound_check(ChainingConfig(gamma, n, j, m), "lil",
                                   1 << 16)
        assert chk.satisfied
    for _ in range(20):
        s_big = float(RNG.uniform(10.0, 300.0))
        j = int(RNG.integers(0, 11))
        m = int(RNG.integers(1, 2**j + 1))
        chk = chaining_bound_check(
            ChainingConfig(0.25, 2, j, m, s_big=s_big), "flt", 1 << 16)
        assert chk.satisfied


def test_chaining_config_validation():
    with pytest.raises(DomainError):
        ChainingConfig(0.25, 1, 0, 1)
    with pytest.raises(DomainError):
        ChainingConfig(0.25, 3, 2, 5)  # m > 2^j
    with pytest.raises(DomainError):
        chaining_bound_check(ChainingConfig(0.25, 3, 2, 1), "flt")  # no s_big


# ---------------------------------------------------------------------------
# concavity gap, Lindeberg, kernel monotonicity, limit covariance
# ---------------------------------------------------------------------------

def test_i_gap_symmetric_zero():
    for a in (0.0, 0.3, 0.77, 1.0):
        assert abs(i_concave_gap(a, a, 1e-12)) <= 1e-12


def test_i_gap_endpoints():
    # I(0) = 0; gap at (0, 1) is I(2) - 2 I(1) < 0
    gap = i_concave_gap(0.0, 1.0, 1e-12)
    i2 = quad(lambda x: -math.expm1(-x) / x, 0.0, 2.0, epsabs=1e-14)[0]
    i1 = quad(lambda x: -math.expm1(-x) / x, 0.0, 1.0, epsabs=1e-14)[0]
    assert gap == pytest.approx(i2 - 2.0 * i1, abs=1e-11)
    assert gap < 0.0


def test_i_gap_random_pairs():
    for _ in range(300):
        a, b = RNG.uniform(0.0, 1.0, size=2)
        assert i_concave_gap(float(a), float(b), 1e-11) <= 1e-11


def test_lindeberg_rademacher_exact_zero():
    spec = InnovationSpec("rademacher", 1.0)
    s_star = 1.0 / (0.1**2 * math.log(2.0))
    assert lindeberg_term(s_star + 0.5, 1.0, 0.1, spec) == 0.0
    # contrast: small s gives a strictly positive sum
    assert lindeberg_term(5.0, 1.0, 0.1, spec) > 0.0


def test_lindeberg_gaussian_decreasing():
    spec = InnovationSpec("gaussian", 1.0)
    vals = [lindeberg_term(s, 1.0, 0.1, spec) for s in (10.0, 20.0, 40.0)]
    assert vals[0] > vals[1] > vals[2] > 0.0


def test_lindeberg_crude_bound():
    # E[eta^2 1{.}] <= sigma^2 gives value <= sigma^2 * kernel / s
    spec = InnovationSpec("two_point", 1e-3, 0.5)
    s_big, t = 8.0, 1.0
    q = math.exp(-t * s_big)
    bound = spec.sigma**2 * kernel_sum_enclosure(-0.5, q, q, 1 << 18).hi \
        / s_big
    assert lindeberg_term(s_big, t, 0.1, spec) <= bound + 1e-18


def test_decreasing_kernel():
    grid = np.geomspace(1.01, 50.0, 1000)
    assert decreasing_kernel_check(0.3, 0.7, grid)
    for _ in range(30):
        a, b = RNG.uniform(0.0, 1.0, size=2)
        if a == b:
            continue
        assert decreasing_kernel_check(float(a) + 1e-9, float(b), grid)
    with pytest.raises(DomainError):
        decreasing_kernel_check(0.5, 0.5, grid)
    with pytest.raises(DomainError):
        decreasing_kernel_check(0.3, 0.7, np.linspace(0.5, 2.0, 10))


def test_limit_cov_closed_forms():
    assert limit_process_cov(0.0, 2.0, 2.0, 1.5) == pytest.approx(
        1.5**2 / 4.0, rel=1e-14)
    assert limit_process_cov(0.5, 1.0, 1.0, 1.0) == pytest.approx(
        0.25, rel=1e-14)


def test_limit_cov_quadrature_oracle():
    sigma, alpha, t1, t2 = 1.3, 0.25, 0.5, 1.5
    val, _ = quad(lambda y: y ** (2 * alpha) * math.exp(-(t1 + t2) * y),
                  0.0, 200.0, epsabs=1e-13, limit=300)
    assert limit_process_cov(alpha, t1, t2, sigma) == pytest.approx(
        sigma * sigma * val, abs=1e-10)


def test_limit_cov_psd():
    ts = [0.25, 0.5, 0.75, 1.0]
    m = np.array([[limit_process_cov(0.3, a, b) for b in ts] for a in ts])
    assert np.linalg.eigvalsh(m)[0] >= -1e-10


def test_enclosure_type():
    e = Enclosure(1.0, 2.0)
    assert e.mid == 1.5 and e.width == 1.0 and 1.2 in e
    with pytest.raises(ValueError):
        Enclosure(2.0, 1.0)
