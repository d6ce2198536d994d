"""Recover polynomial MTR coefficients from (psi, nu) moments.

With C cells at distinct propensities nu_1..nu_C, approximate the treated
curve by a polynomial of degree C-1 and the untreated curve by degree C:

    m1(u) ~ sum_{k=0}^{C-1} lambda_1k u^k,   m0(u) ~ sum_{k=0}^{C} lambda_0k u^k.

Averaging those monomials over the treated region [0, nu] and the untreated
region [nu, 1] gives the linear systems

    psi1(nu_c)  = sum_k lambda_1k nu_c^k / (k+1)
    psi0(nu_c)  = sum_k lambda_0k (1 + nu_c + ... + nu_c^k) / (k+1)
    psi00       = sum_k lambda_0k / (k+1)                    (the nu = 0 row)

stacked as M1 lambda1 = psi1 and M0 lambda0 = (psi00, psi0(nu_1), ...).
Both matrices are Vandermonde-like and invertible exactly when the
propensities are pairwise distinct and inside (0, 1).

The systems are tiny (at most a few cells), so they are solved by plain
Gaussian elimination with partial pivoting at full working precision, and the
exact 1-norm condition number of each matrix is reported so that badly spread
designs are visible in the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dgp import Dgp, analytic_psi
from .errors import (DomainError, InputError, InsufficientDataError,
                     SingularSystemError)
from .simulate import ExperimentCounts, SequentialCounts

PIVOT_FLOOR = 1e-13
RESTRICTIONS = ("lambda11=0", "lambda11=lambda01", "lambda10=0", "lambda10=lambda00")


@dataclass(frozen=True)
class MomentSet:
    """The 2C+1 moments a C-cell design identifies."""

    nus: tuple[float, ...]
    psi1: tuple[float, ...]
    psi0: tuple[float, ...]
    psi00: float

    def __post_init__(self):
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))
        object.__setattr__(self, "psi1", tuple(float(v) for v in self.psi1))
        object.__setattr__(self, "psi0", tuple(float(v) for v in self.psi0))
        if not (len(self.nus) == len(self.psi1) == len(self.psi0) >= 1):
            raise InputError("nus, psi1, psi0 must be non-empty and equally long")
        if any(not 0.0 < v < 1.0 for v in self.nus):
            raise InputError("propensities must lie strictly inside (0, 1)")
        for i in range(len(self.nus)):
            for j in range(i + 1, len(self.nus)):
                if self.nus[i] == self.nus[j]:
                    raise InputError(f"propensities {i} and {j} coincide")

    @property
    def n_cells(self) -> int:
        return len(self.nus)


@dataclass(frozen=True)
class LambdaCoefficients:
    """Polynomial MTR coefficients, lowest power first.

    Multi-cell solves satisfy len(lambda0) == len(lambda1) + 1; the
    restricted single-cell variants return two linear curves instead.
    """

    lambda1: tuple[float, ...]
    lambda0: tuple[float, ...]
    cond_m1: float | None = None
    cond_m0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lambda1", tuple(float(v) for v in self.lambda1))
        object.__setattr__(self, "lambda0", tuple(float(v) for v in self.lambda0))
        if not all(math.isfinite(v) for v in self.lambda1 + self.lambda0):
            raise InputError("lambda coefficients must be finite")

    def mte_coeffs(self) -> np.ndarray:
        n = max(len(self.lambda1), len(self.lambda0))
        out = np.zeros(n)
        out[: len(self.lambda1)] += self.lambda1
        out[: len(self.lambda0)] -= self.lambda0
        return out

    def mte_at(self, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, dtype=float),
                                                self.mte_coeffs())

    def mte_prefix_integral(self, nu: float) -> float:
        """int_0^nu of the approximated MTE (closed form)."""
        c = self.mte_coeffs()
        return float(sum(ck * nu ** (k + 1) / (k + 1) for k, ck in enumerate(c)))

    def to_dict(self) -> dict:
        return {"lambda1": list(self.lambda1), "lambda0": list(self.lambda0),
                "condition_numbers": {"M1": self.cond_m1, "M0": self.cond_m0}}


def build_moment_matrices(nus) -> tuple[np.ndarray, np.ndarray]:
    """The stacked treated (C x C) and untreated ((C+1) x (C+1)) moment maps."""
    nus = [float(v) for v in nus]
    C = len(nus)
    m1 = np.empty((C, C))
    for i, nu in enumerate(nus):
        for j in range(C):
            m1[i, j] = nu**j / (j + 1)
    m0 = np.empty((C + 1, C + 1))
    for j in range(C + 1):
        m0[0, j] = 1.0 / (j + 1)
        for i, nu in enumerate(nus):
            m0[i + 1, j] = sum(nu**s for s in range(j + 1)) / (j + 1)
    return m1, m0


def _gauss_solve(a: np.ndarray, b: np.ndarray, what: str,
                 nus) -> tuple[np.ndarray, float]:
    """Gaussian elimination with partial pivoting; returns (solution, cond_1).

    The condition number is exact (via the inverse assembled from the same
    factorization); matrices here are at most ~6x6.
    """
    n = a.shape[0]
    aug = np.hstack([a.astype(float), b.reshape(n, -1).astype(float), np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < PIVOT_FLOOR:
            raise SingularSystemError(
                f"{what} moment matrix is numerically singular (pivot "
                f"{abs(aug[piv, col]):.2e} < {PIVOT_FLOOR}); near-coincident "
                f"propensities {tuple(round(v, 9) for v in nus)}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] / aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    x = aug[:, n]
    inv = aug[:, n + 1:]
    norm_a = np.abs(a).sum(axis=0).max()
    norm_inv = np.abs(inv).sum(axis=0).max()
    return x, float(norm_a * norm_inv)


def solve_lambda(moments: MomentSet) -> LambdaCoefficients:
    """Invert the moment systems for the approximating MTR coefficients."""
    m1, m0 = build_moment_matrices(moments.nus)
    rhs1 = np.array(moments.psi1)
    rhs0 = np.concatenate([[moments.psi00], moments.psi0])
    lam1, cond1 = _gauss_solve(m1, rhs1, "treated-arm", moments.nus)
    lam0, cond0 = _gauss_solve(m0, rhs0, "untreated-arm", moments.nus)
    return LambdaCoefficients(tuple(lam1), tuple(lam0),
                              cond_m1=cond1, cond_m0=cond0)


def moment_residual(moments: MomentSet, lam: LambdaCoefficients) -> float:
    """Max abs difference between input psi values and the fitted ones."""
    m1, m0 = build_moment_matrices(moments.nus)
    r1 = m1 @ np.array(lam.lambda1) - np.array(moments.psi1)
    r0 = m0 @ np.array(lam.lambda0) - np.concatenate([[moments.psi00], moments.psi0])
    return float(max(np.abs(r1).max(), np.abs(r0).max()))


def analytic_moments(dgp: Dgp, nus, x: int | None = None) -> MomentSet:
    """Population MomentSet of a DGP at the given propensities."""
    psi1 = []
    psi0 = []
    for nu in nus:
        p1, p0 = analytic_psi(dgp, float(nu), x)
        psi1.append(p1)
        psi0.append(p0)
    psi00 = analytic_psi(dgp, 0.0, x)[1]
    return MomentSet(tuple(nus), tuple(psi1), tuple(psi0), psi00)


def moments_from_counts(counts: ExperimentCounts) -> MomentSet:
    """Empirical MomentSet: psi_hat = y_sum / n, nu_hat = exposure share.

    psi00 pools the Z=0 units of every cell (their population moment is the
    same integral regardless of cell).  Any required empty bin raises rather
    than imputing a value.
    """
    counts.check()
    nus, psi1, psi0 = [], [], []
    for c in range(counts.n_cells):
        n_elig = counts.n[c, 1, :].sum()
        if n_elig == 0:
            raise InsufficientDataError(f"cell {c} has no eligible units")
        for d in (1, 0):
            if counts.n[c, 1, d] == 0:
                raise InsufficientDataError(
                    f"cell {c} has no units with (z=1, d={d}); psi_{d}1 unavailable")
        nus.append(counts.n[c, 1, 1] / n_elig)
        psi1.append(counts.psi_hat(c, 1, 1))
        psi0.append(counts.psi_hat(c, 1, 0))
    n00 = counts.n[:, 0, 0].sum()
    if n00 == 0:
        raise InsufficientDataError("no ineligible units anywhere; psi00 unavailable")
    psi00 = float(counts.y_sum[:, 0, 0].sum() / n00)
    return MomentSet(tuple(nus), tuple(psi1), tuple(psi0), psi00)


def single_cell_restricted(psi11: float, psi01: float, psi00: float, nu: float,
                           restriction: str) -> LambdaCoefficients:
    """Linear-by-linear fit from a single cell under one identifying restriction.

    One cell gives three moments for four linear-MTR parameters.  The
    untreated fit is restriction-independent:

        psi00 = lambda00 + lambda01 / 2
        psi01 = lambda00 + lambda01 (1 + nu) / 2
        =>  lambda01 = 2 (psi01 - psi00) / nu,   lambda00 = psi00 - lambda01 / 2

    and the chosen restriction closes psi11 = lambda10 + (lambda11 / 2) nu.
    Restrictions are named by the constrained coefficient: "lambda11=0",
    "lambda11=lambda01", "lambda10=0", "lambda10=lambda00".
    """
    if not 0.0 < nu < 1.0:
        raise DomainError("nu must lie strictly inside (0, 1)")
    if restriction not in RESTRICTIONS:
        raise InputError(f"unknown restriction {restriction!r}; "
                         f"expected one of {RESTRICTIONS}")
    lambda01 = 2.0 * (psi01 - psi00) / nu
    lambda00 = psi00 - lambda01 / 2.0
    if restriction == "lambda11=0":
        lam1 = (psi11, 0.0)
    elif restriction == "lambda11=lambda01":
        lam1 = (psi11 - lambda01 * nu / 2.0, lambda01)
    elif restriction == "lambda10=0":
        lam1 = (0.0, 2.0 * psi11 / nu)
    else:  # lambda10=lambda00
        lam1 = (lambda00, 2.0 * (psi11 - lambda00) / nu)
    return LambdaCoefficients(lam1, (lambda00, lambda01))


def _sequential_slice(counts: SequentialCounts, x: int):
    if not 0 <= x < counts.opportunities:
        raise InputError(f"exposure level x={x} outside 0..{counts.opportunities - 1}")
    zs = []
    for z in range(1, counts.max_budget + 1):
        if counts.n[x, z, :].sum() > 0:
            zs.append(z)
    return zs


def sequential_estimate(counts: SequentialCounts, x: int) -> LambdaCoefficients:
    """Per-exposure-level fit: invert the x-slice of the sequential bins.

    The slice's nonzero remaining-budget levels supply the propensity
    variation (realized, not nominal); the z=0 bin plays the psi00 role since
    its exposure probability is exactly zero.  Capacity adapts to the number
    of distinct realized propensities at this x.
    """
    zs = _sequential_slice(counts, x)
    if not zs:
        raise InsufficientDataError(f"no nonzero-budget observations at x={x}")
    if counts.n[x, 0, :].sum() == 0:
        raise InsufficientDataError(
            f"no zero-budget observations at x={x}; the psi00 analogue is unavailable")
    nus, psi1, psi0 = [], [], []
    for z in zs:
        for d in (0, 1):
            if counts.n[x, z, d] == 0:
                raise InsufficientDataError(
                    f"bin (x={x}, z={z}, d={d}) is empty; estimator unavailable")
        nu = counts.realized_propensity(z, x)
        if not 0.0 < nu < 1.0:
            raise InsufficientDataError(
                f"degenerate realized propensity {nu} at (x={x}, z={z})")
        nus.append(nu)
        psi1.append(float(counts.y_sum[x, z, 1] / counts.n[x, z, 1]))
        psi0.append(float(counts.y_sum[x, z, 0] / counts.n[x, z, 0]))
    psi00 = float(counts.y_sum[x, 0, 0] / counts.n[x, 0, 0])
    return solve_lambda(MomentSet(tuple(nus), tuple(psi1), tuple(psi0), psi00))


def naive_estimate(counts: SequentialCounts) -> LambdaCoefficients:
    """Exposure-count-blind fit: treat each initial-budget group as a cell.

    The initial budget of every bin is recoverable as x + z (exposures cost
    one unit each), so the bins are pooled over x within each initial-budget
    group.  Each group's pooled exposure share acts as its propensity and the
    zero-budget group supplies the psi00 analogue, exactly as if the data had
    come from a one-shot binary-treatment design.  Pooling by remaining
    budget instead would mix exposure-count compositions across cells in a
    way no single MTR pair can rationalize, and the inversion amplifies that
    incoherence badly at quartic capacity.
    """
    groups = sorted(set(counts.budgets))
    by_group = {}
    for g in groups:
        n = np.zeros(2)
        y = np.zeros(2)
        for x in range(counts.opportunities):
            z = g - x
            if 0 <= z <= counts.max_budget:
                n += counts.n[x, z, :]
                y += counts.y_sum[x, z, :]
        by_group[g] = (n, y)
    if 0 not in by_group or by_group[0][0][0] == 0:
        raise InsufficientDataError(
            "no zero-budget group observations; the psi00 analogue is unavailable")
    nus, psi1, psi0 = [], [], []
    for g in groups:
        if g == 0:
            continue
        n, y = by_group[g]
        if n[0] == 0 or n[1] == 0:
            raise InsufficientDataError(
                f"initial-budget group {g} lacks (d=0, d=1) variation")
        nus.append(float(n[1] / n.sum()))
        psi1.append(float(y[1] / n[1]))
        psi0.append(float(y[0] / n[0]))
    if not nus:
        raise InsufficientDataError("no nonzero initial-budget groups")
    n0, y0 = by_group[0]
    psi00 = float(y0[0] / n0[0])
    return solve_lambda(MomentSet(tuple(nus), tuple(psi1), tuple(psi0), psi00))
