"""Multi-cell experiments for ad-response measurement and reach decisions.

Plan a one-sided-noncompliance experiment with several cells, simulate it
under a chosen data-generating process, recover a polynomial approximation to
the marginal treatment effect function from the cells' moments, and solve the
advertiser's reach/budget problem under posterior uncertainty.
"""

from .bayes import BetaPosterior, PosteriorLambda, draw_posterior_lambda, posterior_update
from .calibrate import (GaussianStudyAggregates, StudyMoments, calibrate_complex,
                        calibrate_gaussian, reconstruct_polynomial_dgp)
from .decide import (DecisionSpec, ProfitLoss, decide_from_experiment,
                     expected_profit, optimize_nu, profit_loss)
from .design import (Cell, CellDesign, CostSpec, kappa, kappa_inverse,
                     plan_budget, validate_design)
from .dgp import (GaussianDgp, PolynomialDgp, RationalSinusoidDgp, analytic_psi,
                  ate, load_dgp, mte_eval, mtr_eval, save_dgp)
from .estimate import (LambdaCoefficients, MomentSet, analytic_moments,
                       build_moment_matrices, moments_from_counts, naive_estimate,
                       sequential_estimate, single_cell_restricted, solve_lambda)
from .metrics import NormReport, compare
from .simulate import (ExperimentCounts, SequentialCounts, simulate_experiment,
                       simulate_sequential)

__version__ = "0.1.0"

__all__ = [
    "BetaPosterior", "Cell", "CellDesign", "CostSpec", "DecisionSpec",
    "ExperimentCounts", "GaussianDgp", "GaussianStudyAggregates",
    "LambdaCoefficients", "MomentSet", "NormReport", "PolynomialDgp",
    "PosteriorLambda", "ProfitLoss", "RationalSinusoidDgp", "SequentialCounts",
    "StudyMoments", "analytic_moments", "analytic_psi", "ate",
    "build_moment_matrices", "calibrate_complex", "calibrate_gaussian",
    "compare", "decide_from_experiment", "draw_posterior_lambda",
    "expected_profit", "kappa", "kappa_inverse", "load_dgp", "moments_from_counts",
    "mte_eval", "mtr_eval", "naive_estimate", "optimize_nu", "plan_budget",
    "posterior_update", "profit_loss", "reconstruct_polynomial_dgp", "save_dgp",
    "sequential_estimate", "simulate_experiment", "simulate_sequential",
    "single_cell_restricted", "solve_lambda", "validate_design",
]
