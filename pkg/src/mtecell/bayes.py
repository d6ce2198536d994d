"""Beta-Bernoulli posterior machinery for the decision stage.

Every unknown the decision depends on (each cell's propensity, each cell's
treated/untreated outcome mean, and the pooled never-eligible mean) is a
Bernoulli success probability when outcomes are binary, so a Beta prior is
conjugate: Beta(a, b) updates to Beta(a + successes, b + failures).

Draws of the approximating-polynomial coefficients are obtained by sampling
nu first, then the psi quantities, pushing each joint draw through the moment
inversion, and averaging; the decision objective is linear in the lambda
coefficients, so only their posterior means matter downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import MIN_PROPENSITY_GAP
from .errors import InputError, ModelMismatchError, NumericsError
from .estimate import LambdaCoefficients, MomentSet, solve_lambda
from .simulate import ExperimentCounts

MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class BetaPosterior:
    alpha: float
    beta: float

    def __post_init__(self):
        ok = (math.isfinite(self.alpha) and self.alpha > 0
              and math.isfinite(self.beta) and self.beta > 0)
        if not ok:
            raise InputError("Beta parameters must be finite and strictly positive")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


def posterior_update(prior: BetaPosterior, successes: int, trials: int) -> BetaPosterior:
    """Conjugate update: Beta(a, b) + k successes in n trials -> Beta(a+k, b+n-k)."""
    if successes < 0 or trials < 0 or successes > trials:
        raise InputError(f"invalid Bernoulli data: {successes} successes in {trials} trials")
    return BetaPosterior(prior.alpha + successes, prior.beta + (trials - successes))


@dataclass
class PosteriorLambda:
    """Monte Carlo draws of the approximating coefficients and their means."""

    lambda1_draws: np.ndarray  # (R, C)
    lambda0_draws: np.ndarray  # (R, C+1)
    mean1: tuple[float, ...]
    mean0: tuple[float, ...]
    rejections: int
    seed: int

    @property
    def n_draws(self) -> int:
        return self.lambda1_draws.shape[0]

    def mean_coefficients(self) -> LambdaCoefficients:
        return LambdaCoefficients(self.mean1, self.mean0)


def _binary_successes(y_sum: np.ndarray, n: np.ndarray, what: str) -> np.ndarray:
    y = np.asarray(y_sum, dtype=float)
    if np.any(np.abs(y - np.round(y)) > 1e-9) or np.any(y < -1e-9) or np.any(y > n + 1e-9):
        raise ModelMismatchError(
            f"{what}: outcome sums are not binary success counts; the "
            "Beta-Bernoulli model does not apply")
    return np.round(y).astype(np.int64)


def experiment_posteriors(counts: ExperimentCounts,
                          prior: BetaPosterior = BetaPosterior(1.0, 1.0),
                          prior_overrides: dict | None = None) -> dict:
    """Per-quantity Beta posteriors from experiment counts.

    Keys: ("nu", c), ("psi1", c), ("psi0", c) per cell, and ("psi00",) pooled
    over every cell's ineligible units.  `prior_overrides` may replace the
    shared prior for any key.
    """
    counts.check()
    if np.any(np.abs(counts.y_sumsq - counts.y_sum) > 1e-9):
        raise ModelMismatchError("outcome sums of squares differ from sums; "
                                 "outcomes are not 0/1")
    y = _binary_successes(counts.y_sum, counts.n, "experiment counts")
    overrides = prior_overrides or {}

    def pri(key):
        return overrides.get(key, prior)

    post = {}
    for c in range(counts.n_cells):
        n_elig = int(counts.n[c, 1, :].sum())
        post[("nu", c)] = posterior_update(pri(("nu", c)), int(counts.n[c, 1, 1]), n_elig)
        post[("psi1", c)] = posterior_update(pri(("psi1", c)), int(y[c, 1, 1]),
                                             int(counts.n[c, 1, 1]))
        post[("psi0", c)] = posterior_update(pri(("psi0", c)), int(y[c, 1, 0]),
                                             int(counts.n[c, 1, 0]))
    post[("psi00",)] = posterior_update(pri(("psi00",)), int(y[:, 0, 0].sum()),
                                        int(counts.n[:, 0, 0].sum()))
    return post


def draw_posterior_lambda(counts: ExperimentCounts, n_draws: int, seed: int,
                          prior: BetaPosterior = BetaPosterior(1.0, 1.0),
                          prior_overrides: dict | None = None) -> PosteriorLambda:
    """Sample lambda coefficients from the posterior via the moment inversion.

    Per draw: sample every cell's nu, then psi00 and the per-cell psi values,
    form the MomentSet, and invert.  Draws whose nu vector has two entries
    closer than the design gap floor (a singular inversion) are rejected and
    redrawn; the count is reported.  Deterministic in (counts, seed).
    """
    if n_draws < 1:
        raise InputError("need at least one posterior draw")
    post = experiment_posteriors(counts, prior, prior_overrides)
    C = counts.n_cells
    rng = np.random.Generator(np.random.Philox(
        key=np.array([seed & 0xFFFFFFFFFFFFFFFF, 0], dtype=np.uint64)))

    nu_alpha = np.array([post[("nu", c)].alpha for c in range(C)])
    nu_beta = np.array([post[("nu", c)].beta for c in range(C)])
    nus = rng.beta(nu_alpha, nu_beta, size=(n_draws, C))
    rejections = 0
    for round_ in range(MAX_REJECTION_ROUNDS + 1):
        gaps_ok = np.ones(n_draws, dtype=bool)
        for i in range(C):
            for j in range(i + 1, C):
                gaps_ok &= np.abs(nus[:, i] - nus[:, j]) >= MIN_PROPENSITY_GAP
        interior = np.all((nus > 0.0) & (nus < 1.0), axis=1)
        bad = ~(gaps_ok & interior)
        n_bad = int(bad.sum())
        if n_bad == 0:
            break
        if round_ == MAX_REJECTION_ROUNDS:
            raise NumericsError(
                f"posterior nu draws kept colliding for {MAX_REJECTION_ROUNDS} "
                "rounds; the design's propensities are pathologically close")
        rejections += n_bad
        nus[bad] = rng.beta(nu_alpha, nu_beta, size=(n_bad, C))

    psi00 = rng.beta(post[("psi00",)].alpha, post[("psi00",)].beta, size=n_draws)
    psi1 = np.column_stack([
        rng.beta(post[("psi1", c)].alpha, post[("psi1", c)].beta, size=n_draws)
        for c in range(C)])
    psi0 = np.column_stack([
        rng.beta(post[("psi0", c)].alpha, post[("psi0", c)].beta, size=n_draws)
        for c in range(C)])

    lam1 = np.empty((n_draws, C))
    lam0 = np.empty((n_draws, C + 1))
    for r in range(n_draws):
        ms = MomentSet(tuple(nus[r]), tuple(psi1[r]), tuple(psi0[r]), float(psi00[r]))
        lam = solve_lambda(ms)
        lam1[r] = lam.lambda1
        lam0[r] = lam.lambda0
    return PosteriorLambda(lambda1_draws=lam1, lambda0_draws=lam0,
                           mean1=tuple(lam1.mean(axis=0)),
                           mean0=tuple(lam0.mean(axis=0)),
                           rejections=rejections, seed=seed)


def posterior_report(counts: ExperimentCounts, post_lambda: PosteriorLambda,
                     prior: BetaPosterior = BetaPosterior(1.0, 1.0),
                     prior_overrides: dict | None = None) -> dict:
    """JSON-ready posterior summary."""
    post = experiment_posteriors(counts, prior, prior_overrides)
    return {
        "posteriors": {"/".join(str(p) for p in key):
                       {"alpha": v.alpha, "beta": v.beta, "mean": v.mean}
                       for key, v in sorted(post.items())},
        "lambda_mean1": list(post_lambda.mean1),
        "lambda_mean0": list(post_lambda.mean0),
        "draws": post_lambda.n_draws,
        "rejections": post_lambda.rejections,
        "seed": post_lambda.seed,
    }
