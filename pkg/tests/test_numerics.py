"""Numerical kernels against scipy references and closed forms."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from mtecell.errors import DomainError, NumericsError
from mtecell.numerics import (adaptive_simpson, cumulative_simpson,
                              golden_section_max, normal_cdf, normal_pdf,
                              normal_ppf)


class TestNormalFunctions:
    def test_ppf_matches_scipy(self):
        p = np.concatenate([np.linspace(1e-12, 1 - 1e-12, 2001),
                            [1e-300, 1 - 1e-16, 0.5, 0.02425, 1 - 0.02425]])
        ours = normal_ppf(p)
        ref = special.ndtri(p)
        assert np.max(np.abs(ours - ref)) < 1e-9

    def test_ppf_endpoints_and_domain(self):
        assert normal_ppf(0.0) == -np.inf
        assert normal_ppf(1.0) == np.inf
        assert normal_ppf(0.5) == 0.0
        with pytest.raises(DomainError):
            normal_ppf(-0.1)
        with pytest.raises(DomainError):
            normal_ppf(1.1)

    def test_cdf_matches_scipy(self):
        x = np.linspace(-8, 8, 1001)
        assert np.max(np.abs(normal_cdf(x) - special.ndtr(x))) < 1e-14

    def test_cdf_ppf_roundtrip(self):
        p = np.linspace(1e-10, 1 - 1e-10, 999)
        assert np.max(np.abs(normal_cdf(normal_ppf(p)) - p)) < 1e-12

    def test_pdf(self):
        assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
        x = np.array([-3.0, 0.5, 2.0])
        ref = np.exp(-0.5 * x**2) / math.sqrt(2 * math.pi)
        assert np.allclose(normal_pdf(x), ref, atol=1e-15)


class TestAdaptiveSimpson:
    def test_polynomial_exact(self):
        assert adaptive_simpson(lambda u: u * u, 0, 1) == pytest.approx(1 / 3, abs=1e-14)

    def test_orientation(self):
        val = adaptive_simpson(math.exp, 1, 0)
        assert val == pytest.approx(-(math.e - 1), abs=1e-12)

    def test_against_scipy_on_wavy_integrand(self):
        f = lambda u: math.sin(2 * math.pi * u) ** 2 / (1 + u) ** 2
        ref, _ = integrate.quad(f, 0, 1, limit=200)
        assert adaptive_simpson(f, 0, 1, tol=1e-12) == pytest.approx(ref, abs=1e-10)

    def test_zero_width(self):
        assert adaptive_simpson(math.exp, 0.3, 0.3) == 0.0

    def test_nonconvergence_raises(self):
        jump = lambda u: 0.0 if u < 0.5 else 1.0
        with pytest.raises(NumericsError):
            adaptive_simpson(jump, 0, 1, tol=1e-16, max_depth=4)


def test_cumulative_simpson_matches_closed_form():
    grid = np.linspace(0.0, 1.0, 1001)
    mids = 0.5 * (grid[:-1] + grid[1:])
    f = lambda u: 3 * u**2 - u + 0.25
    out = cumulative_simpson(f(grid), f(mids), grid)
    exact = grid**3 - grid**2 / 2 + 0.25 * grid
    assert np.max(np.abs(out - exact)) < 1e-13


class TestGoldenSection:
    def test_quadratic(self):
        x, fx = golden_section_max(lambda v: -(v - 0.3) ** 2, 0.0, 1.0, tol=1e-9)
        assert x == pytest.approx(0.3, abs=1e-7)
        assert fx == pytest.approx(0.0, abs=1e-13)

    def test_narrow_bracket(self):
        x, _ = golden_section_max(lambda v: -(v - 0.5) ** 2, 0.49999, 0.50001)
        assert x == pytest.approx(0.5, abs=1e-5)
