import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoperm.efftests import FitError, effective_tests_at, fit_effective_tests, read_pairs


def test_exact_line_recovered():
    p = np.logspace(-9, -3.2, 25)
    fit = fit_effective_tests(zip(p, 100 * p))
    assert abs(fit.eta - 100) <= 1e-6 * 100
    assert abs(fit.kappa - 1) <= 1e-6
    assert fit.n_points == 25
    assert max(abs(r) for r in fit.residuals) < 1e-9


@given(st.floats(1.0, 1000.0), st.floats(0.8, 1.1))
def test_exact_power_law(eta, kappa):
    p = np.logspace(-10, -3, 12)
    fit = fit_effective_tests(zip(p, eta * p**kappa))
    assert fit.kappa == pytest.approx(kappa, abs=1e-6)
    assert fit.eta == pytest.approx(eta, rel=1e-5)


def test_published_fit_effective_tests():
    assert effective_tests_at(327.5, 0.978, 1e-3) == pytest.approx(381, abs=1)
    assert effective_tests_at(327.5, 0.978, 1e-6) == pytest.approx(444, abs=1)


def test_median_regression_ignores_outliers():
    p = np.logspace(-8, -3.5, 21)
    q = 50 * p**0.95
    q[[2, 9, 15]] *= 1e3
    fit = fit_effective_tests(zip(p, q))
    assert fit.kappa == pytest.approx(0.95, abs=1e-6)


def test_fit_range_and_errors():
    p = np.array([1e-12, 1e-5, 1e-4, 5e-4, 0.01, 0.5])
    fit = fit_effective_tests(zip(p, 10 * p))
    assert fit.n_points == 3 and fit.fit_range == (1e-10, 1e-3)
    with pytest.raises(FitError):
        fit_effective_tests([(1e-5, 1e-3), (1e-4, 1e-2)])
    with pytest.raises(FitError):
        fit_effective_tests([(1e-5, 0.0), (1e-4, 1e-2), (1e-6, np.nan), (0.5, 0.9)])


def test_read_pairs(tmp_path):
    path = tmp_path / "pairs.tsv"
    path.write_text("nominal_p\tperm_p\n1e-5\t0.001\n2e-5\t0.002\n")
    assert read_pairs(path) == [(1e-5, 0.001), (2e-5, 0.002)]
    path.write_text("1e-5\t0.001\nfoo\tbar\n")
    with pytest.raises(ValueError):
        read_pairs(path)
