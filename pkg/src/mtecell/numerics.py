"""Shared numerical kernels: normal distribution functions, quadrature, 1-d search.

The normal quantile follows Wichura's AS 241 (PPND16) rational approximation,
accurate to ~1e-15 in the open unit interval, which is far below every
tolerance used elsewhere in the package.  The CDF delegates to the C library's
erf, which is exact to double precision.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from .errors import DomainError, NumericsError

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # golden ratio conjugate


def normal_pdf(x):
    """Standard normal density, elementwise."""
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


_erf = np.frompyfunc(math.erf, 1, 1)


def normal_cdf(x):
    """Standard normal CDF via erf, elementwise."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * (1.0 + _erf(x / math.sqrt(2.0)).astype(float))
    return float(out) if out.ndim == 0 else out


# AS 241 (PPND16) coefficients: central region |p - 1/2| <= 0.425 ...
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4, 5.2264952788528545610e3)
# ... intermediate region r = sqrt(-log(min(p, 1-p))) <= 5 ...
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9)
# ... far tails r > 5.
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15)


def _poly(coeffs, x):
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def normal_ppf(p):
    """Standard normal quantile (AS 241), elementwise.

    Raises DomainError outside [0, 1]; returns -inf/+inf at the endpoints.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)) or np.any(np.isnan(p_arr)):
        raise DomainError("normal_ppf requires probabilities in [0, 1]")
    p1 = np.atleast_1d(p_arr).astype(float)
    z = np.empty_like(p1)
    q = p1 - 0.5

    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        z[central] = q[central] * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if np.any(tail):
        pt = p1[tail]
        r = np.where(q[tail] < 0.0, pt, 1.0 - pt)
        with np.errstate(divide="ignore"):
            r = np.sqrt(-np.log(r))
        zt = np.where(r <= 5.0,
                      _poly(_C, r - 1.6) / _poly(_D, r - 1.6),
                      _poly(_E, np.where(r > 5.0, r, 6.0) - 5.0)
                      / _poly(_F, np.where(r > 5.0, r, 6.0) - 5.0))
        zt = np.where(np.isinf(r), np.inf, zt)
        z[tail] = np.copysign(zt, q[tail])

    if p_arr.ndim == 0:
        return float(z[0])
    return z.reshape(p_arr.shape)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance `tol`.

    Raises NumericsError when the recursion exceeds `max_depth` before the
    local error estimate falls under the (depth-split) tolerance.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    def simpson(lo, flo, hi, fhi, fmid):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, flo, hi, fhi, fmid, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm = f(lmid)
        frm = f(rmid)
        left = simpson(lo, flo, mid, fmid, flm)
        right = simpson(mid, fmid, hi, fhi, frm)
        err = left + right - whole
        if abs(err) <= 15.0 * eps:
            return left + right + err / 15.0
        if depth >= max_depth:
            raise NumericsError(
                f"adaptive Simpson did not converge on [{lo}, {hi}] "
                f"(max depth {max_depth}, err {abs(err):.3e})")
        half = 0.5 * eps
        return (recurse(lo, flo, mid, fmid, flm, left, half, depth + 1)
                + recurse(mid, fmid, hi, fhi, frm, right, half, depth + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    whole = simpson(a, fa, b, fb, fm)
    return recurse(a, fa, b, fb, fm, whole, tol, 0)


def cumulative_simpson(f_vals: np.ndarray, f_mid: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Cumulative integral over `grid` from Simpson panels per grid interval.

    `f_vals` holds f on the grid points, `f_mid` on the interval midpoints.
    Composite error is O(h^4), negligible at the grid sizes used here.
    """
    h = np.diff(grid)
    panels = h / 6.0 * (f_vals[:-1] + 4.0 * f_mid + f_vals[1:])
    out = np.empty_like(f_vals)
    out[0] = 0.0
    np.cumsum(panels, out=out[1:])
    return out


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-7) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi]; returns (argmax, max)."""
    a, b = (lo, hi) if lo <= hi else (hi, lo)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = b - _INV_PHI * h
    d = a + _INV_PHI * h
    fc, fd = f(c), f(d)
    n = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    for _ in range(n):
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - _INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd
