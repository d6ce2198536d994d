"""True data-generating processes: MTR/MTE functions and their moment implications.

A DGP is a pair of marginal treatment response curves m1(u), m0(u) on the unit
interval (u is the uniform-normalized resistance to exposure).  Three families
are supported:

* polynomial      m_d(u) = sum_k c_dk u^k
* complex         m1(u) = daleth / (1+u),
                  m0(u) = gimel / (1+u)^2 + beth * sin^2(2 pi u)
                  (rational + sinusoid; non-monotone, neither convex nor concave)
* gaussian        m_d(x, u) = mu_d0 + mu_d1 x + mu_d2 x^2 + rho_dV sigma_d PPF(u),
                  from a trivariate normal selection model with exposure count x

The moments every estimator consumes are

    psi1(nu) = (1/nu)     * int_0^nu  m1(u) du        (treated mean at reach nu)
    psi0(nu) = (1/(1-nu)) * int_nu^1  m0(u) du        (untreated mean at reach nu)
    psi00    = int_0^1 m0(u) du                       (never-eligible mean)

Polynomial moments are closed-form; the complex family integrates by adaptive
Simpson (tol 1e-10); the gaussian family uses the exact truncated-normal
identity int_0^nu PPF(u) du = -pdf(PPF(nu)) (fixed-depth quadrature cannot
handle the PPF endpoint divergence).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .numerics import adaptive_simpson, normal_pdf, normal_ppf

RANGE_GRID_POINTS = 10_001
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class PolynomialDgp:
    """MTR pair with polynomial curves; coefficients are listed lowest power first."""

    m1_coeffs: tuple[float, ...]
    m0_coeffs: tuple[float, ...]
    binary_outcome: bool = True

    def __post_init__(self):
        object.__setattr__(self, "m1_coeffs", tuple(float(c) for c in self.m1_coeffs))
        object.__setattr__(self, "m0_coeffs", tuple(float(c) for c in self.m0_coeffs))
        if not self.m1_coeffs or not self.m0_coeffs:
            raise InputError("coefficient lists must be non-empty")
        if not all(math.isfinite(c) for c in self.m1_coeffs + self.m0_coeffs):
            raise InputError("coefficients must be finite")

    def mte_coeffs(self) -> np.ndarray:
        """Coefficients of MTE(u) = m1(u) - m0(u), lowest power first."""
        n = max(len(self.m1_coeffs), len(self.m0_coeffs))
        out = np.zeros(n)
        out[: len(self.m1_coeffs)] += self.m1_coeffs
        out[: len(self.m0_coeffs)] -= self.m0_coeffs
        return out


@dataclass(frozen=True)
class RationalSinusoidDgp:
    """The 'complex' family: decaying rational treated arm, wavy untreated arm.

    daleth scales m1(u) = daleth/(1+u); gimel and beth scale the two untreated
    components m0(u) = gimel/(1+u)^2 + beth*sin^2(2*pi*u).
    """

    daleth: float
    gimel: float
    beth: float
    binary_outcome: bool = True

    def __post_init__(self):
        for name in ("daleth", "gimel", "beth"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")


@dataclass(frozen=True)
class GaussianDgp:
    """Normal-selection family with exposure-count covariate x.

    (eps1, eps0, V) are trivariate normal with unit-variance V and
    U = CDF(V); rho10 only matters when jointly drawing both potential
    outcomes in simulation, never for moments.
    """

    mu1: tuple[float, float, float]
    mu0: tuple[float, float, float]
    sigma1: float
    sigma0: float
    rho1V: float
    rho0V: float
    rho10: float = 0.0
    binary_outcome: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu1", tuple(float(c) for c in self.mu1))
        object.__setattr__(self, "mu0", tuple(float(c) for c in self.mu0))
        if len(self.mu1) != 3 or len(self.mu0) != 3:
            raise InputError("mu1 and mu0 must have exactly three coefficients")
        if not (self.sigma1 > 0 and self.sigma0 > 0):
            raise InputError("sigma1 and sigma0 must be strictly positive")
        for name in ("rho1V", "rho0V", "rho10"):
            r = getattr(self, name)
            if not (math.isfinite(r) and -1.0 < r < 1.0):
                raise InputError(f"{name} must lie in (-1, 1)")
        if np.linalg.eigvalsh(self.covariance()).min() < -1e-12:
            raise InputError("implied (eps1, eps0, V) covariance is not PSD")

    def covariance(self) -> np.ndarray:
        s1, s0 = self.sigma1, self.sigma0
        return np.array([
            [s1 * s1, self.rho10 * s1 * s0, self.rho1V * s1],
            [self.rho10 * s1 * s0, s0 * s0, self.rho0V * s0],
            [self.rho1V * s1, self.rho0V * s0, 1.0],
        ])

    def mu(self, d: int, x) -> np.ndarray | float:
        c = self.mu1 if d == 1 else self.mu0
        x = np.asarray(x, dtype=float)
        out = c[0] + c[1] * x + c[2] * x * x
        return float(out) if out.ndim == 0 else out

    def selection_slope(self, d: int) -> float:
        """Coefficient of PPF(u) in m_d: rho_dV * sigma_d."""
        return (self.rho1V * self.sigma1) if d == 1 else (self.rho0V * self.sigma0)


Dgp = PolynomialDgp | RationalSinusoidDgp | GaussianDgp


def _check_u(u, open_interval: bool):
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0.0) | (u_arr > 1.0)):
        raise DomainError("u must lie in [0, 1]")
    if open_interval and np.any((u_arr == 0.0) | (u_arr == 1.0)):
        raise DomainError(
            "u in {0, 1} is outside the gaussian family's domain: the normal "
            "quantile PPF(u) diverges at the endpoints")
    return u_arr


def mtr_eval(dgp: Dgp, d: int, u, x: int | None = None):
    """Evaluate the arm-d marginal treatment response at u (elementwise).

    The gaussian family requires the exposure count x and u strictly inside
    (0, 1); the other families ignore x.
    """
    if d not in (0, 1):
        raise InputError("d must be 0 or 1")
    if isinstance(dgp, PolynomialDgp):
        u_arr = _check_u(u, open_interval=False)
        coeffs = dgp.m1_coeffs if d == 1 else dgp.m0_coeffs
        out = np.polynomial.polynomial.polyval(u_arr, coeffs)
    elif isinstance(dgp, RationalSinusoidDgp):
        u_arr = _check_u(u, open_interval=False)
        if d == 1:
            out = dgp.daleth / (1.0 + u_arr)
        else:
            out = dgp.gimel / (1.0 + u_arr) ** 2 + dgp.beth * np.sin(2.0 * np.pi * u_arr) ** 2
    elif isinstance(dgp, GaussianDgp):
        if x is None:
            raise DomainError("the gaussian family requires the exposure count x")
        u_arr = _check_u(u, open_interval=True)
        out = dgp.mu(d, x) + dgp.selection_slope(d) * normal_ppf(u_arr)
    else:
        raise InputError(f"unknown DGP type {type(dgp).__name__}")
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def mte_eval(dgp: Dgp, u, x: int | None = None):
    """MTE(u) = m1(u) - m0(u), elementwise."""
    return mtr_eval(dgp, 1, u, x) - mtr_eval(dgp, 0, u, x)


def _poly_psi1(coeffs, nu: float) -> float:
    # (1/nu) int_0^nu u^k du = nu^k / (k+1)
    return float(sum(c * nu**k / (k + 1) for k, c in enumerate(coeffs)))


def _poly_psi0(coeffs, nu: float) -> float:
    # (1/(1-nu)) int_nu^1 u^k du = (1 + nu + ... + nu^k) / (k+1)
    return float(sum(c * sum(nu**s for s in range(k + 1)) / (k + 1)
                     for k, c in enumerate(coeffs)))


def _gauss_tail_factor(nu: float, lower: bool) -> float:
    """Mean of PPF(U) over U <= nu (lower) or U > nu, times the tail mass.

    int_0^nu PPF(u) du = -pdf(PPF(nu)); the complementary integral is its
    negative.  Endpoint limits are exact zeros.
    """
    if nu <= 0.0 or nu >= 1.0:
        return 0.0
    val = -normal_pdf(normal_ppf(nu))
    return val if lower else -val


def analytic_psi(dgp: Dgp, nu: float, x: int | None = None) -> tuple[float | None, float | None]:
    """Population moments (psi1, psi0) at propensity nu.

    psi1 is None at nu = 0 (no treated units) and psi0 is None at nu = 1;
    at nu = 0 the returned psi0 equals psi00, the full untreated mean.
    """
    if not (isinstance(nu, (int, float)) and 0.0 <= nu <= 1.0):
        raise DomainError("nu must lie in [0, 1]")
    nu = float(nu)

    if isinstance(dgp, PolynomialDgp):
        psi1 = _poly_psi1(dgp.m1_coeffs, nu) if nu > 0.0 else None
        psi0 = _poly_psi0(dgp.m0_coeffs, nu) if nu < 1.0 else None
        return psi1, psi0

    if isinstance(dgp, RationalSinusoidDgp):
        m1 = lambda u: mtr_eval(dgp, 1, u)
        m0 = lambda u: mtr_eval(dgp, 0, u)
        psi1 = adaptive_simpson(m1, 0.0, nu, tol=QUAD_TOL) / nu if nu > 0.0 else None
        psi0 = (adaptive_simpson(m0, nu, 1.0, tol=QUAD_TOL) / (1.0 - nu)
                if nu < 1.0 else None)
        return psi1, psi0

    if isinstance(dgp, GaussianDgp):
        if x is None:
            raise DomainError("the gaussian family requires the exposure count x")
        psi1 = psi0 = None
        if nu > 0.0:
            psi1 = dgp.mu(1, x) + dgp.selection_slope(1) * _gauss_tail_factor(nu, True) / nu
        if nu < 1.0:
            psi0 = dgp.mu(0, x) + dgp.selection_slope(0) * _gauss_tail_factor(nu, False) / (1.0 - nu)
        return psi1, psi0

    raise InputError(f"unknown DGP type {type(dgp).__name__}")


def mte_prefix_integral(dgp: Dgp, nu: float, x: int | None = None) -> float:
    """int_0^nu MTE(u) du, the treatment-effect mass captured at reach nu."""
    if not 0.0 <= nu <= 1.0:
        raise DomainError("nu must lie in [0, 1]")
    nu = float(nu)
    if isinstance(dgp, PolynomialDgp):
        c = dgp.mte_coeffs()
        return float(sum(ck * nu ** (k + 1) / (k + 1) for k, ck in enumerate(c)))
    if isinstance(dgp, RationalSinusoidDgp):
        if nu == 0.0:
            return 0.0
        return adaptive_simpson(lambda u: mte_eval(dgp, u), 0.0, nu, tol=QUAD_TOL)
    if isinstance(dgp, GaussianDgp):
        if x is None:
            raise DomainError("the gaussian family requires the exposure count x")
        slope = dgp.selection_slope(1) - dgp.selection_slope(0)
        level = dgp.mu(1, x) - dgp.mu(0, x)
        return level * nu + slope * _gauss_tail_factor(nu, True)
    raise InputError(f"unknown DGP type {type(dgp).__name__}")


def ate(dgp: Dgp, x: int | None = None) -> float:
    """Average treatment effect: int_0^1 MTE(u) du."""
    return mte_prefix_integral(dgp, 1.0, x)


def binary_range_violations(dgp: Dgp, n_grid: int = RANGE_GRID_POINTS) -> list[tuple[int, float, float]]:
    """Grid-check m_d(u) in [0, 1]; returns (arm, u, value) triples outside.

    Only meaningful for the polynomial and complex families (the gaussian
    family is continuous-outcome by construction and always reports clean).
    """
    if isinstance(dgp, GaussianDgp):
        return []
    grid = np.linspace(0.0, 1.0, n_grid)
    out = []
    for d in (0, 1):
        vals = mtr_eval(dgp, d, grid)
        bad = np.nonzero((vals < 0.0) | (vals > 1.0))[0]
        out.extend((d, float(grid[i]), float(vals[i])) for i in bad)
    return out


# --- JSON schema -----------------------------------------------------------
#
# {"family": "polynomial" | "complex" | "gaussian", <family fields>,
#  "binary_outcome": bool}

def dgp_to_dict(dgp: Dgp) -> dict:
    if isinstance(dgp, PolynomialDgp):
        return {"family": "polynomial", "m1_coeffs": list(dgp.m1_coeffs),
                "m0_coeffs": list(dgp.m0_coeffs), "binary_outcome": dgp.binary_outcome}
    if isinstance(dgp, RationalSinusoidDgp):
        return {"family": "complex", "daleth": dgp.daleth, "gimel": dgp.gimel,
                "beth": dgp.beth, "binary_outcome": dgp.binary_outcome}
    if isinstance(dgp, GaussianDgp):
        return {"family": "gaussian", "mu1": list(dgp.mu1), "mu0": list(dgp.mu0),
                "sigma1": dgp.sigma1, "sigma0": dgp.sigma0, "rho1V": dgp.rho1V,
                "rho0V": dgp.rho0V, "rho10": dgp.rho10,
                "binary_outcome": dgp.binary_outcome}
    raise InputError(f"unknown DGP type {type(dgp).__name__}")


def dgp_from_dict(data: dict) -> Dgp:
    try:
        family = data["family"]
        binary = bool(data.get("binary_outcome", family != "gaussian"))
        if family == "polynomial":
            return PolynomialDgp(tuple(data["m1_coeffs"]), tuple(data["m0_coeffs"]),
                                 binary_outcome=binary)
        if family == "complex":
            return RationalSinusoidDgp(float(data["daleth"]), float(data["gimel"]),
                                       float(data["beth"]), binary_outcome=binary)
        if family == "gaussian":
            return GaussianDgp(tuple(data["mu1"]), tuple(data["mu0"]),
                               float(data["sigma1"]), float(data["sigma0"]),
                               float(data["rho1V"]), float(data["rho0V"]),
                               float(data.get("rho10", 0.0)), binary_outcome=binary)
    except KeyError as exc:
        raise InputError(f"DGP spec missing field {exc}") from exc
    raise InputError(f"unknown DGP family {family!r}")


def load_dgp(path) -> Dgp:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return dgp_from_dict(data)


def save_dgp(dgp: Dgp, path) -> None:
    with open(path, "w") as fh:
        json.dump(dgp_to_dict(dgp), fh, indent=2, sort_keys=True)
        fh.write("\n")
