"""Exact-law Gaussian sampling: covariance building and factorization."""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from dirichlet_lab import analytics
from dirichlet_lab.errors import DomainError, FeasibilityError
from dirichlet_lab.gaussian_exact import (CovGrid, FactorizedCov, build_cov,
                                          sample_ensemble)
from dirichlet_lab.innovations import SeedContext
from dirichlet_lab.series_engine import evaluate_ensemble
from dirichlet_lab.innovations import InnovationSpec

CTX = SeedContext(20240801, 0)


def test_single_point_grid_is_variance():
    fc = build_cov(CovGrid.lil([0.25]), sigma=1.5, direct_terms=1 << 20)
    expect = 1.5**2 * analytics.boundary_variance_enclosure(0.25, 1 << 20).mid
    assert fc.matrix[0, 0] == pytest.approx(expect, rel=1e-12)


def test_duplicate_points_rejected():
    with pytest.raises(DomainError):
        CovGrid.flt(100.0, [0.5, 0.5])
    with pytest.raises(DomainError):
        CovGrid.lil([0.3, 0.3])


def test_grid_validation():
    with pytest.raises(DomainError):
        CovGrid.lil([0.5, -0.1])
    with pytest.raises(DomainError):
        CovGrid.flt(-1.0, [0.5])
    with pytest.raises(DomainError):
        CovGrid.alpha_flt(-0.6, 0.1, [0.5])


def test_boundary_grid_asymptote():
    fc = build_cov(CovGrid.flt(100.0, [0.25, 0.5, 0.75, 1.0]), 1.0, 1 << 20)
    for i, ti in enumerate([0.25, 0.5, 0.75, 1.0]):
        for j, tj in enumerate([0.25, 0.5, 0.75, 1.0]):
            assert abs(fc.matrix[i, j] / 100.0 - min(ti, tj)) < 0.1


def test_round_trip_frobenius():
    fc = build_cov(CovGrid.flt(50.0, [0.2, 0.4, 0.6, 0.8, 1.0]), 1.0)
    recon = fc.factor @ fc.factor.T
    rel = np.linalg.norm(recon - fc.matrix) / np.linalg.norm(fc.matrix)
    assert rel <= 1e-8 + fc.jitter_used / np.linalg.norm(fc.matrix)


def test_width_refusal():
    # 16 direct terms cannot certify a 1e-6-relative-width entry
    with pytest.raises(FeasibilityError):
        build_cov(CovGrid.lil([0.4, 0.2]), 1.0, direct_terms=16)


def test_sample_variance_single_point():
    fc = build_cov(CovGrid.lil([0.25]), 1.0, 1 << 20)
    ens = sample_ensemble(fc, 10_000, CTX)
    var = float(np.var(ens.values[:, 0], ddof=1))
    ref = fc.matrix[0, 0]
    se = math.sqrt(2.0 / (10_000 - 1)) * ref
    assert abs(var - ref) <= 3.0 * se


def test_identity_covariance_hook():
    # bypass build_cov with a hand-made identity factor: standard normals
    grid = CovGrid.lil([0.5, 0.25, 0.125])
    fc = FactorizedCov(grid, np.eye(3), np.eye(3), 0.0, 0.0)
    ens = sample_ensemble(fc, 5000, CTX)
    for i in range(3):
        assert kstest(ens.values[:, i], "norm").pvalue > 0.01


def test_ensemble_mean_contract():
    fc = build_cov(CovGrid.flt(30.0, [0.5, 1.0]), 1.0, 1 << 18)
    n = 20_000
    ens = sample_ensemble(fc, n, CTX)
    bound = 4.0 * np.sqrt(np.diag(fc.matrix) / n)
    assert np.all(np.abs(ens.values.mean(axis=0)) <= bound)


def test_sampling_deterministic():
    fc = build_cov(CovGrid.lil([0.3, 0.2]), 1.0, 1 << 18)
    a = sample_ensemble(fc, 50, CTX)
    b = sample_ensemble(fc, 50, CTX)
    assert np.array_equal(a.values, b.values)
    c = sample_ensemble(fc, 50, SeedContext(20240801, 1))
    assert not np.array_equal(a.values, c.values)


def test_deep_grid_correlations():
    # depths exp(-e^i), i=1..10, via log coordinates; empirical correlation
    # within 3 SE of the certified correlation
    depths = [math.exp(i) for i in range(1, 11)]
    depths[0] = math.e + 0.05  # keep strictly inside the LIL domain
    fc = build_cov(CovGrid.lil_log(depths), 1.0, 1 << 18)
    n = 4000
    ens = sample_ensemble(fc, n, CTX)
    d = np.sqrt(np.diag(fc.matrix))
    ref_corr = fc.matrix / np.outer(d, d)
    emp_corr = np.corrcoef(ens.values, rowvar=False)
    for i in range(10):
        for j in range(i + 1, 10):
            se = (1.0 - ref_corr[i, j] ** 2) / math.sqrt(n)
            assert abs(emp_corr[i, j] - ref_corr[i, j]) <= 3.0 * se


def test_exactness_contract_vs_summation():
    """Feasible grid: series Monte Carlo and exact law agree within 3 SE."""
    grid = [0.5, 0.25]
    spec = InnovationSpec("gaussian", 1.0)
    n = 1500
    vals, _ = evaluate_ensemble(-0.5, grid, spec, CTX, n, rel_tol=1e-3)
    fc = build_cov(CovGrid.lil(grid), 1.0, 1 << 20)
    ens = sample_ensemble(fc, n, SeedContext(99, 0))
    for i, j in [(0, 0), (0, 1), (1, 1)]:
        a = vals[:, i] * vals[:, j]
        b = ens.values[:, i] * ens.values[:, j]
        se = math.sqrt(np.var(a, ddof=1) / n + np.var(b, ddof=1) / n)
        assert abs(a.mean() - b.mean()) <= 3.0 * se


def test_alpha_grid_matches_limit_shape():
    # smooth case: s^(1+2 alpha) * kernel approaches the limit covariance
    alpha, s = 0.5, 0.002
    ts = [0.5, 1.0]
    fc = build_cov(CovGrid.alpha_flt(alpha, s, ts), 1.0, 1 << 22)
    for i, ti in enumerate(ts):
        for j, tj in enumerate(ts):
            scaled = s ** (1.0 + 2.0 * alpha) * fc.matrix[i, j]
            ref = analytics.limit_process_cov(alpha, ti, tj)
            assert abs(scaled - ref) < 0.05 * ref
