import math

import numpy as np
import pytest
from scipy import integrate, stats

from conformal_ridge import (
    DomainError,
    TheoremVarianceSpec,
    curve_table,
    mu_alpha,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    std_asymptote,
    theorem1_variance,
)
from conformal_ridge.asymptotics import left_panel_grid, right_panel_grid, theorem1_variance_exp_form


def bisect_upper_quantile(delta):
    """Independent oracle: bisection on the upper tail 0.5 erfc(z / sqrt 2)."""
    if delta > 0.5:
        # erfc near 2 loses the digits that matter, bisect the small tail instead
        return -bisect_upper_quantile(1.0 - delta)
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2)) > delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_quantile_examples():
    assert normal_quantile(0.5) == 0
    assert normal_quantile(0.025) == pytest.approx(bisect_upper_quantile(0.025), abs=1e-12)
    assert normal_quantile(0.025) == pytest.approx(1.959964, abs=1e-5)
    assert normal_quantile(0.975) == pytest.approx(-1.959964, abs=1e-5)


@pytest.mark.parametrize("delta", [1e-300, 1e-30, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.7, 0.99, 1 - 1e-12])
def test_quantile_against_oracles(delta):
    z = normal_quantile(delta)
    assert z == pytest.approx(stats.norm.isf(delta), rel=1e-12, abs=1e-12)
    if delta > 1e-200:
        assert z == pytest.approx(bisect_upper_quantile(delta), rel=1e-10, abs=1e-12)


def test_quantile_round_trip(rng):
    deltas = rng.uniform(0, 1, 10_000)
    worst = max(abs(normal_cdf(normal_quantile(d)) - (1 - d)) for d in deltas)
    assert worst < 1e-12


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(bad):
    with pytest.raises(DomainError):
        normal_quantile(bad)


def test_pdf_cdf_examples():
    assert normal_pdf(0, 1) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert normal_pdf(0, 1) == pytest.approx(0.3989423, abs=1e-7)
    assert normal_cdf(0, 3.0) == 0.5
    assert normal_pdf(1.959964, 1) == pytest.approx(0.058440, abs=1e-5)
    with pytest.raises(DomainError):
        normal_pdf(0, 0)
    with pytest.raises(DomainError):
        normal_cdf(0, -1)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
def test_pdf_integrates_to_one(sigma):
    total, _ = integrate.quad(lambda x: normal_pdf(x, sigma), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_cdf_against_scipy():
    for x in np.linspace(-8, 8, 81):
        assert normal_cdf(x, 1.3) == pytest.approx(stats.norm.cdf(x, scale=1.3), rel=1e-12, abs=1e-300)


def test_variance_example_density_form():
    # 0.975 * 0.025 / f(1.959964)^2 with f evaluated by the formula directly
    f = math.exp(-1.959964 ** 2 / 2) / math.sqrt(2 * math.pi)
    expected = 0.975 * 0.025 / f ** 2
    var, std = theorem1_variance(TheoremVarianceSpec(0.05, 1.0, 0.0))
    assert var == pytest.approx(expected, abs=1e-2)
    assert var == pytest.approx(7.14, abs=1e-2)
    assert std == pytest.approx(2.672, abs=1e-2)


def test_variance_constant_object_case():
    eps = 0.05
    z = normal_quantile(eps / 2)
    expected = eps * (1 - eps / 2) * math.pi * math.exp(z * z) - 1
    var, _ = theorem1_variance(TheoremVarianceSpec(eps, 1.0, 1.0))
    assert var == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
@pytest.mark.parametrize("m", [0.0, 0.4, 1.0])
def test_variance_scales_with_sigma_squared(eps, m):
    v1, s1 = theorem1_variance(TheoremVarianceSpec(eps, 1.0, m))
    v2, s2 = theorem1_variance(TheoremVarianceSpec(eps, 2.0, m))
    assert v2 == pytest.approx(4 * v1, rel=1e-12)
    assert s2 == pytest.approx(2 * s1, rel=1e-12)


def test_variance_forms_agree_and_nonnegative():
    for eps in np.geomspace(1e-6, 0.999, 300):
        for m in np.linspace(0, 1, 11):
            spec = TheoremVarianceSpec(eps, 1.0, m)
            v, _ = theorem1_variance(spec)
            assert v >= 0
            assert v == pytest.approx(theorem1_variance_exp_form(spec), rel=1e-9)


def test_variance_spec_validation():
    for kwargs in [dict(epsilon=0), dict(epsilon=1), dict(epsilon=0.1, sigma=0),
                   dict(epsilon=0.1, quadform=1.5), dict(epsilon=0.1, quadform=-0.1)]:
        with pytest.raises(DomainError):
            TheoremVarianceSpec(**kwargs)


def test_std_asymptote_examples():
    assert std_asymptote(1e-4) == pytest.approx(32.96, abs=0.01)
    assert std_asymptote(math.exp(-1)) == pytest.approx(math.sqrt(math.e), rel=1e-14)
    ratio = theorem1_variance(TheoremVarianceSpec(1e-4))[1] / std_asymptote(1e-4)
    assert 0.95 <= ratio <= 1.10
    with pytest.raises(DomainError):
        std_asymptote(1.0)


def test_std_ratio_approaches_one():
    eps = [10.0 ** -k for k in range(2, 9)]
    for m, start in [(0.0, 0), (1.0, 1)]:
        # for m = 1 the ratio first rises between 1e-2 and 1e-3
        gaps = [abs(theorem1_variance(TheoremVarianceSpec(e, 1.0, m))[1] / std_asymptote(e) - 1)
                for e in eps[start:]]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # the lower and upper curves merge relative to their size
    e = 1e-8
    up = theorem1_variance(TheoremVarianceSpec(e, 1.0, 0.0))[1]
    lo = theorem1_variance(TheoremVarianceSpec(e, 1.0, 1.0))[1]
    assert up / lo == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("zeta", np.linspace(-5, 5, 21))
@pytest.mark.parametrize("sigma", [1.0, 2.0])
def test_mu_alpha_quadrature(zeta, sigma):
    zeta = zeta * sigma
    value, _ = integrate.quad(lambda x: x * normal_pdf(x, sigma), -np.inf, zeta,
                              epsabs=1e-13, epsrel=1e-13)
    assert mu_alpha(zeta, sigma) == pytest.approx(value, abs=1e-8)


def test_mu_alpha_examples():
    assert mu_alpha(0.0, 1.0) == pytest.approx(-0.3989423, abs=1e-7)
    assert mu_alpha(0.0, 2.0) == pytest.approx(-0.7978846, abs=1e-7)
    assert mu_alpha(math.inf, 1.0) == 0
    assert abs(mu_alpha(40.0, 1.0)) < 1e-300


def test_curve_table_rows():
    table = curve_table([0.01, 0.05, 0.5])
    for eps, up, lo, asym in table.rows():
        assert lo == pytest.approx(math.sqrt(up ** 2 - 1), rel=1e-12)
        assert lo <= up
        assert asym == std_asymptote(eps)
    assert table.std_upper[1] == pytest.approx(2.672, abs=1e-2)


def test_curve_table_two_points_order():
    table = curve_table([0.2, 0.3])
    assert list(table.epsilon) == [0.2, 0.3]
    assert table.asymptote[0] > table.asymptote[1]


@pytest.mark.parametrize("grid", [[0.0, 0.5], [0.5, 1.0], [0.3, 0.2], []])
def test_curve_table_domain(grid):
    with pytest.raises(DomainError):
        curve_table(grid)


def test_panel_grids():
    left = left_panel_grid()
    assert len(left) == 99 and left[0] == 0.01 and left[-1] == 0.99
    right = right_panel_grid()
    assert right[0] > 0 and right[-1] == pytest.approx(0.05) and np.all(right <= 0.05)


def test_curve_csv_format():
    text = curve_table([0.05, 0.1]).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "epsilon,std_upper,std_lower,asymptote"
    assert lines[1].split(",")[1] == "2.67131"
