"""Numerical laboratory for log-weighted random Dirichlet series.

The series under study is s -> sum_{k>=2} (log k)^alpha k^(-1/2-s) eta_k
with i.i.d. zero-mean, finite-variance innovations eta_k.  The package
combines three kinds of evidence about its small-s limit behavior:

  * certified deterministic numerics (interval enclosures for variance
    and covariance kernels, normalizers, chaining bounds, inequalities),
  * exact-law Gaussian sampling at arbitrary depth via covariance
    factorization,
  * high-throughput Monte Carlo over reproducible counter-based noise.
"""

from .analytics import (ChainingCheck, ChainingConfig, Enclosure,
                        boundary_variance_enclosure,
                        boundary_variance_enclosure_log,
                        chaining_bound_check, decreasing_kernel_check,
                        exp_integral_e1, exp_integral_e1_log, head_cutoff,
                        head_cutoff_log, i_concave_gap,
                        kernel_sum_enclosure, kernel_sum_enclosure_log,
                        limit_process_cov, lindeberg_term, normalizer,
                        normalizer_log, schedule)
from .ensemble import PathEnsemble
from .errors import (ConditioningError, ConvergenceError, DomainError,
                     EvaluationError, FeasibilityError,
                     InsufficientSampleError)
from .flt_harness import (StatReport, compare_fdd, discretized_limit_cov,
                          simulate_flt_boundary, simulate_limit_alpha)
from .gaussian_exact import CovGrid, FactorizedCov, build_cov, sample_ensemble
from .innovations import (InnovationSpec, SeedContext, draw, draw_block,
                          truncated_abs_moment, truncated_second_moment,
                          truncated_signed_moment)
from .lil_explorer import (CoverageReport, Trajectory, TruncationEvent,
                           fragment_decay, limit_set_coverage,
                           normalized_marginal_sd, normalized_trajectory,
                           trajectory_ensemble, truncation_diagnostics)
from .series_engine import (PathEvaluation, SeriesParams, TruncationPlan,
                            evaluate_ensemble, evaluate_path,
                            parts_identity_residual, partial_sum,
                            plan_truncation)
from .zero_finder import (WindowCounts, ZeroBracket, refine, scan,
                          zero_count_experiment)

__version__ = "0.1.0"
