"""Reconstruct DGP parameters from observed single-cell study moments.

A one-cell study with one-sided noncompliance reports four numbers: the
treated and untreated outcome means among eligibles (psi11, psi01), the
ineligible mean (psi00), and the eligible exposure share nu1.  Those, plus a
target MTE shape, pin down each family's parameters.

For the polynomial family the constraints are

    psi11 = m10 + (m11/2) nu + (m12/3) nu^2
    psi01 = m00 + (m01/2)(1+nu) + (m02/3)(1+nu+nu^2) + (m03/4)(1+nu+nu^2+nu^3)
    psi00 = m00 + m01/2 + m02/3 + m03/4

together with the MTE identities m1k - m0k = a_k (and m03 = -a_3 since the
treated curve is quadratic).  These six equations in six unknowns have rank
five for every nu: the three moment functionals obey

    nu * psi11-functional + (1-nu) * psi01-functional = psi00-functional

identically, which leaves the common curvature of the two arms free (shifting
both m1 and m0 by the same quadratic changes no observable).  The solver
therefore takes the treated-arm curvature m12 as an explicit anchor, solves
(m00, m01) from the two untreated constraints, and closes m11 and m10 from
the MTE slope identity and the treated constraint.  Exact round-trip of the
psi triple is guaranteed; with a rounded MTE target the leftover inconsistency
is absorbed into the MTE constant (reported as the caption residual).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dgp import (GaussianDgp, PolynomialDgp, RationalSinusoidDgp,
                  binary_range_violations)
from .errors import InputError, SingularSystemError
from .numerics import normal_pdf, normal_ppf


@dataclass(frozen=True)
class StudyMoments:
    """Published aggregates of a single-cell experiment."""

    psi11: float
    psi01: float
    psi00: float
    nu1: float
    elig_share: float
    binary_outcome: bool = True

    def __post_init__(self):
        if not 0.0 < self.nu1 < 1.0:
            raise InputError("nu1 must lie strictly inside (0, 1)")
        if not 0.0 < self.elig_share < 1.0:
            raise InputError("eligibility share must lie strictly inside (0, 1)")
        if self.binary_outcome:
            for name in ("psi11", "psi01", "psi00"):
                v = getattr(self, name)
                if not 0.0 <= v <= 1.0:
                    raise InputError(f"binary-outcome moment {name}={v!r} outside [0, 1]")


def _warn_range(dgp, label: str) -> list[tuple[int, float, float]]:
    bad = binary_range_violations(dgp)
    if bad and dgp.binary_outcome:
        worst = max(bad, key=lambda t: max(-t[2], t[2] - 1.0))
        warnings.warn(
            f"{label}: MTR values leave [0, 1] at {len(bad)} grid points "
            f"(worst m{worst[0]}({worst[1]:.4f}) = {worst[2]:.6f}); bin-level "
            "moments remain valid probabilities", stacklevel=3)
    return bad


def reconstruct_polynomial_dgp(moments: StudyMoments, mte_coeffs,
                               treated_curvature: float = 0.0) -> PolynomialDgp:
    """Quadratic-by-cubic MTR pair matching the moments and a cubic MTE target.

    `mte_coeffs` is the target MTE (a0, a1, a2, a3), lowest power first;
    `treated_curvature` anchors the observationally free common-curvature
    direction by fixing m12.  The returned DGP reproduces the psi triple
    exactly and the MTE target exactly in its three highest coefficients; any
    rounding inconsistency in the target lands in the MTE constant.
    """
    a = [float(v) for v in mte_coeffs]
    if len(a) != 4 or not all(math.isfinite(v) for v in a):
        raise InputError("mte_coeffs must be four finite values (a0, a1, a2, a3)")
    nu = moments.nu1
    m03 = -a[3]
    m12 = float(treated_curvature)
    m02 = m12 - a[2]
    lhs = np.array([[1.0, (1.0 + nu) / 2.0], [1.0, 0.5]])
    rhs = np.array([
        moments.psi01 - m02 * (1 + nu + nu**2) / 3.0 - m03 * (1 + nu + nu**2 + nu**3) / 4.0,
        moments.psi00 - m02 / 3.0 - m03 / 4.0,
    ])
    try:
        m00, m01 = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:  # nu = 0 only; guarded by StudyMoments
        raise SingularSystemError(f"degenerate untreated system: {exc}") from exc
    m11 = a[1] + m01
    m10 = moments.psi11 - m11 * nu / 2.0 - m12 * nu**2 / 3.0
    dgp = PolynomialDgp((m10, m11, m12), (m00, m01, m02, m03),
                        binary_outcome=moments.binary_outcome)
    _warn_range(dgp, "reconstructed polynomial DGP")
    return dgp


def caption_residual(dgp: PolynomialDgp, mte_coeffs) -> float:
    """Gap between the DGP's MTE constant and the (possibly rounded) target."""
    return float(dgp.mte_coeffs()[0] - float(mte_coeffs[0]))


def calibrate_complex(moments: StudyMoments) -> RationalSinusoidDgp:
    """Fit the rational-sinusoid family to the study moments (closed form).

    The treated scale comes from (1/nu) int_0^nu daleth/(1+u) du = psi11:

        daleth = psi11 * nu / log(1 + nu)

    and (gimel, beth) solve the 2x2 system from

        int 1/(1+u)^2 du = u/(1+u)   and   int sin^2(2 pi u) du = u/2 - sin(4 pi u)/(8 pi)

    averaged over [nu, 1] (psi01) and [0, 1] (psi00, where both integrals
    equal 1/2).
    """
    nu = moments.nu1
    daleth = moments.psi11 * nu / math.log1p(nu)
    coef_g = (1.0 / (1.0 + nu) - 0.5) / (1.0 - nu)
    coef_b = 0.5 + math.sin(4.0 * math.pi * nu) / (8.0 * math.pi * (1.0 - nu))
    lhs = np.array([[0.5, 0.5], [coef_g, coef_b]])
    rhs = np.array([moments.psi00, moments.psi01])
    if abs(np.linalg.det(lhs)) < 1e-15:
        raise SingularSystemError(
            f"untreated component system is singular at nu1 = {nu}")
    gimel, beth = np.linalg.solve(lhs, rhs)
    dgp = RationalSinusoidDgp(daleth, float(gimel), float(beth),
                              binary_outcome=moments.binary_outcome)
    _warn_range(dgp, "calibrated complex DGP")
    return dgp


@dataclass(frozen=True)
class GaussianStudyAggregates:
    """Inputs for the gaussian-family calibration.

    sigma_d are set from the per-eligibility outcome variances; rho1V, mu01,
    mu02 are fixed choices.  d0_moments holds (nu, mean outcome) pairs for
    never-exposed units at x = 0; d1_moments holds (x, nu, mean outcome)
    triples for exposed units at each exposure count.
    """

    sigma1: float
    sigma0: float
    rho1V: float
    mu01: float
    mu02: float
    d0_moments: tuple[tuple[float, float], ...]
    d1_moments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.d0_moments) != 2:
            raise InputError("need exactly two never-exposed moments to pin (mu00, rho0V)")
        if len(self.d1_moments) != 3:
            raise InputError("need exactly three exposed moments to pin mu1")


def _untreated_selection_weight(nu: float) -> float:
    """E[PPF(U) | U > nu] = pdf(PPF(nu)) / (1 - nu)."""
    if nu <= 0.0:
        return 0.0
    if nu >= 1.0:
        raise InputError("untreated moment requires nu < 1")
    return float(normal_pdf(normal_ppf(nu)) / (1.0 - nu))


def _treated_selection_weight(nu: float) -> float:
    """E[PPF(U) | U <= nu] = -pdf(PPF(nu)) / nu."""
    if nu <= 0.0:
        raise InputError("treated moment requires nu > 0")
    if nu >= 1.0:
        return 0.0
    return float(-normal_pdf(normal_ppf(nu)) / nu)


def calibrate_gaussian(agg: GaussianStudyAggregates) -> GaussianDgp:
    """Solve the normal-selection moment equations for (mu00, rho0V) and mu1.

    Never-exposed means at x = 0 satisfy

        mean = mu00 + rho0V * sigma0 * pdf(PPF(nu)) / (1 - nu)

    (two equations, two unknowns), and exposed means satisfy

        mean = mu10 + mu11 x + mu12 x^2 - rho1V * sigma1 * pdf(PPF(nu)) / nu

    where the known selection term moves to the right-hand side, leaving a
    quadratic fit in x (three equations, three unknowns).
    """
    lhs0 = np.array([[1.0, agg.sigma0 * _untreated_selection_weight(nu)]
                     for nu, _ in agg.d0_moments])
    rhs0 = np.array([mean for _, mean in agg.d0_moments])
    if abs(np.linalg.det(lhs0)) < 1e-18:
        raise SingularSystemError(
            "never-exposed moments share a propensity; (mu00, rho0V) not identified")
    mu00, rho0V = np.linalg.solve(lhs0, rhs0)

    lhs1 = np.array([[1.0, x, x * x] for x, _, _ in agg.d1_moments])
    rhs1 = np.array([mean - agg.rho1V * agg.sigma1 * _treated_selection_weight(nu)
                     for _, nu, mean in agg.d1_moments])
    if abs(np.linalg.det(lhs1)) < 1e-12:
        raise SingularSystemError(
            "exposed moments share exposure counts; mu1 not identified")
    mu10, mu11, mu12 = np.linalg.solve(lhs1, rhs1)

    return GaussianDgp(mu1=(float(mu10), float(mu11), float(mu12)),
                       mu0=(float(mu00), agg.mu01, agg.mu02),
                       sigma1=agg.sigma1, sigma0=agg.sigma0,
                       rho1V=agg.rho1V, rho0V=float(rho0V))
