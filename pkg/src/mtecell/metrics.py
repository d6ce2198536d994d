"""Distance measures between true and approximated MTE curves.

Three metrics: the sup-norm max_u |MTE - MTE_app|, the L2-norm
sqrt(int (MTE - MTE_app)^2 du), and the relative ATE error
(ATE_app - ATE) / ATE.  On the measure-one domain [0, 1] the L2-norm can
never exceed the sup-norm.

The sup search evaluates a dense grid and refines around the grid argmax by
golden section; representations whose curves diverge at the interval
endpoints (the gaussian selection family) are compared on a slightly
truncated interval instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bayes import PosteriorLambda
from .dgp import Dgp, GaussianDgp, ate, mte_eval
from .errors import InputError
from .estimate import LambdaCoefficients
from .numerics import adaptive_simpson, golden_section_max

SUP_GRID_POINTS = 100_001
L2_TOL = 1e-12
ENDPOINT_CLIP = 1e-4


@dataclass(frozen=True)
class NormReport:
    sup_norm: float
    l2_norm: float
    ate_norm: float | None  # None when the true ATE is zero

    def to_dict(self) -> dict:
        return {"sup_norm": self.sup_norm, "l2_norm": self.l2_norm,
                "ate_norm": self.ate_norm}


def mte_curve(rep, x: int | None = None):
    """Uniform evaluator u -> MTE(u) over every representation kind."""
    if isinstance(rep, PosteriorLambda):
        rep = rep.mean_coefficients()
    if isinstance(rep, LambdaCoefficients):
        return lambda u: rep.mte_at(u)
    if isinstance(rep, GaussianDgp):
        if x is None:
            raise InputError("the gaussian family requires the exposure count x")
        return lambda u: mte_eval(rep, u, x)
    if isinstance(rep, Dgp):
        return lambda u: mte_eval(rep, u)
    raise InputError(f"not an MTE representation: {type(rep).__name__}")


def curve_ate(rep, x: int | None = None) -> float:
    if isinstance(rep, PosteriorLambda):
        rep = rep.mean_coefficients()
    if isinstance(rep, LambdaCoefficients):
        return rep.mte_prefix_integral(1.0)
    return ate(rep, x)


def _needs_clip(rep) -> bool:
    return isinstance(rep, GaussianDgp)


def compare(true_rep, approx_rep, x: int | None = None,
            x_approx: int | None = None) -> NormReport:
    """NormReport between two representations.

    `x` fixes the exposure count for a gaussian true curve, `x_approx` (rarely
    needed) for a gaussian approximation.
    """
    f_true = mte_curve(true_rep, x)
    f_app = mte_curve(approx_rep, x_approx)
    lo, hi = 0.0, 1.0
    if _needs_clip(true_rep) or _needs_clip(approx_rep):
        lo, hi = ENDPOINT_CLIP, 1.0 - ENDPOINT_CLIP

    grid = np.linspace(lo, hi, SUP_GRID_POINTS)
    diff = np.abs(np.asarray(f_true(grid)) - np.asarray(f_app(grid)))
    i = int(np.argmax(diff))
    b_lo = grid[max(i - 1, 0)]
    b_hi = grid[min(i + 1, SUP_GRID_POINTS - 1)]
    _, sup = golden_section_max(lambda u: abs(float(f_true(u)) - float(f_app(u))),
                                b_lo, b_hi, tol=1e-9)
    sup = max(sup, float(diff[i]))

    sq = lambda u: (float(f_true(u)) - float(f_app(u))) ** 2
    l2 = math.sqrt(max(adaptive_simpson(sq, lo, hi, tol=L2_TOL), 0.0))

    ate_true = curve_ate(true_rep, x)
    ate_app = curve_ate(approx_rep, x_approx)
    ate_norm = (ate_app - ate_true) / ate_true if ate_true != 0.0 else None
    return NormReport(sup_norm=float(sup), l2_norm=float(l2), ate_norm=ate_norm)


def curve_grid(true_rep, approx_rep, n: int = 1001, x: int | None = None,
               x_approx: int | None = None) -> list[tuple[float, float, float]]:
    """Plot-ready (u, MTE_true, MTE_approx) rows."""
    lo, hi = 0.0, 1.0
    if _needs_clip(true_rep) or _needs_clip(approx_rep):
        lo, hi = ENDPOINT_CLIP, 1.0 - ENDPOINT_CLIP
    f_true = mte_curve(true_rep, x)
    f_app = mte_curve(approx_rep, x_approx)
    us = np.linspace(lo, hi, n)
    t = np.asarray(f_true(us), dtype=float)
    a = np.asarray(f_app(us), dtype=float)
    return [(float(u), float(tv), float(av)) for u, tv, av in zip(us, t, a)]
