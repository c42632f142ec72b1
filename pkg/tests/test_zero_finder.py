"""Zero finder: scan brackets, bisection refinement, count experiments."""

import math

import numpy as np
import pytest

from dirichlet_lab.errors import (ConvergenceError, DomainError,
                                  EvaluationError, FeasibilityError)
from dirichlet_lab.innovations import InnovationSpec, SeedContext
from dirichlet_lab.zero_finder import (ZeroBracket, refine, scan,
                                       zero_count_experiment)

COS_ZEROS = sorted(2.0 / ((2 * k + 1) * math.pi) for k in range(20)
                   if 0.05 <= 2.0 / ((2 * k + 1) * math.pi) <= 1.0)


def cos_path(s):
    return math.cos(1.0 / s)


def test_scan_monotone_positive_empty():
    assert scan(lambda s: 1.0 + s, 0.1, 1.0, 1000) == []


def test_scan_cos_oracle_brackets():
    brs = scan(cos_path, 0.05, 1.0, 10_000)
    assert len(brs) == len(COS_ZEROS) == 6
    for br, z in zip(brs, COS_ZEROS):
        assert br.s_left <= z <= br.s_right


def test_scan_coarse_grid_undercounts():
    # documented behavior: zeros merging between coarse grid points vanish
    brs = scan(cos_path, 0.05, 1.0, 8)
    assert len(brs) < 6


def test_scan_validation():
    with pytest.raises(DomainError):
        scan(cos_path, -0.1, 1.0, 100)
    with pytest.raises(DomainError):
        scan(cos_path, 0.1, 1.0, 1)
    with pytest.raises(EvaluationError):
        scan(lambda s: float("nan"), 0.1, 1.0, 10)


def test_refine_cos_oracle():
    brs = scan(cos_path, 0.05, 1.0, 10_000)
    roots = sorted(refine(cos_path, br, 1e-12) for br in brs)
    for r, z in zip(roots, COS_ZEROS):
        assert abs(r - z) < 1e-9


def test_refine_sign_structure_at_root():
    brs = scan(cos_path, 0.5, 1.0, 2000)
    tol = 1e-10
    r = refine(cos_path, brs[0], tol)
    assert cos_path(r - tol) * cos_path(r + tol) < 0.0


def test_refine_degenerate_bracket():
    br = ZeroBracket(0.3, 0.3, 0.0, 0.0)
    assert refine(cos_path, br, 1e-9) == 0.3


def test_refine_linear():
    c = 0.4321
    br = ZeroBracket(0.1, 1.0, 0.1 - c, 1.0 - c)
    assert refine(lambda s: s - c, br, 1e-12) == pytest.approx(c, abs=1e-11)


def test_refine_max_iter():
    br = ZeroBracket(0.1, 1.0, cos_path(0.1), cos_path(1.0))
    with pytest.raises(ConvergenceError) as ei:
        refine(cos_path, br, 1e-15, max_iter=5)
    assert ei.value.best is not None
    assert ei.value.best.s_right - ei.value.best.s_left < 1.0


def test_bracket_validation():
    with pytest.raises(DomainError):
        ZeroBracket(0.5, 0.4, 1.0, -1.0)
    with pytest.raises(DomainError):
        ZeroBracket(0.4, 0.5, 1.0, 2.0)  # same signs


def test_constant_path_zero_counts():
    # the test-hook path identically 1 yields empty scans everywhere
    assert scan(lambda s: 1.0, 0.05, 1.0, 500) == []


def test_zero_counts_deterministic():
    spec = InnovationSpec("rademacher", 1.0)
    a = zero_count_experiment(spec, [1, 2, 3], [(0.2, 1.0)], 100)
    b = zero_count_experiment(spec, [1, 2, 3], [(0.2, 1.0)], 100)
    assert np.array_equal(a[0].counts, b[0].counts)


def test_zero_counts_window_trend():
    spec = InnovationSpec("rademacher", 1.0)
    res = zero_count_experiment(spec, range(1, 31), [(0.2, 1.0), (0.05, 1.0)],
                                n_grid=200)
    assert res[1].mean >= res[0].mean


def test_zero_counts_universality():
    seeds = range(1, 41)
    wins = [(0.1, 1.0)]
    res_r = zero_count_experiment(InnovationSpec("rademacher", 1.0), seeds,
                                  wins, 150)
    res_g = zero_count_experiment(InnovationSpec("gaussian", 1.0), seeds,
                                  wins, 150)
    n = 40
    se = math.sqrt(res_r[0].sd ** 2 / n + res_g[0].sd ** 2 / n)
    assert abs(res_r[0].mean - res_g[0].mean) <= 3.0 * se + 1e-12


def test_zero_counts_infeasible_window():
    spec = InnovationSpec("rademacher", 1.0)
    with pytest.raises(FeasibilityError):
        zero_count_experiment(spec, [1], [(1e-4, 1.0)], 50, rel_tol=0.01)
