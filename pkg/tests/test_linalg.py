import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conformal_ridge import (
    NotSymmetric,
    RidgeConfig,
    SingularSystem,
    is_positive_definite,
    leverage_profile,
    quadform_identity,
    ridge_solve,
)


def augmented_lstsq(X, Y, a):
    # ridge as least squares on data extended with sqrt(a) I rows labelled 0
    p = X.shape[1]
    Xa = np.vstack([X, np.sqrt(a) * np.eye(p)])
    Ya = np.concatenate([Y, np.zeros(p)])
    return np.linalg.lstsq(Xa, Ya, rcond=None)[0]


@pytest.mark.parametrize("a, expected", [(0.0, 2.0), (5.0, 1.0)])
def test_ridge_solve_hand_examples(a, expected):
    w = ridge_solve([[1.0], [2.0]], [2.0, 4.0], a)
    assert w == pytest.approx([expected], abs=1e-14)


def test_ridge_solve_zero_labels(rng):
    X = rng.standard_normal((7, 3))
    assert np.all(ridge_solve(X, np.zeros(7), 0.3) == 0)


@pytest.mark.parametrize("a", [0.0, 0.1, 1.0, 10.0])
def test_ridge_solve_matches_augmented_least_squares(rng, a):
    X = rng.standard_normal((40, 4))
    Y = rng.standard_normal(40)
    w = ridge_solve(X, Y, a)
    np.testing.assert_allclose(w, augmented_lstsq(X, Y, a), rtol=1e-10, atol=1e-12)
    # normal equations
    M = X.T @ X + a * np.eye(4)
    resid = M @ w - X.T @ Y
    assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(X.T @ Y)


def test_ridge_solve_vanishes_for_huge_a(rng):
    X = rng.standard_normal((30, 3))
    Y = rng.standard_normal(30)
    assert np.linalg.norm(ridge_solve(X, Y, 1e12)) < 1e-6


def test_ridge_solve_singular():
    with pytest.raises(SingularSystem):
        ridge_solve([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], 0.0)
    # the same design is fine once regularized
    ridge_solve([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], 1e-3)


def test_leverage_examples():
    prof = leverage_profile([[1.0], [1.0]], [0.0, 0.0], [1.0], 0.0)
    assert prof.g_n == pytest.approx(0.5)
    prof = leverage_profile([[1.0], [1.0]], [3.0, 5.0], [0.0], 0.0)
    assert prof.g_n == 0 and np.all(prof.g == 0) and prof.y_hat_n == 0
    prof = leverage_profile([[1.0], [-1.0]], [0.0, 0.0], [1.0], 0.0)
    np.testing.assert_allclose(prof.g, [0.5, -0.5])


def test_leverage_profile_against_explicit_inverse(rng):
    X = rng.standard_normal((25, 3))
    Y = rng.standard_normal(25)
    x_n = rng.standard_normal(3)
    Minv = np.linalg.inv(X.T @ X + 0.7 * np.eye(3))
    prof = leverage_profile(X, Y, x_n, 0.7)
    w = Minv @ X.T @ Y
    np.testing.assert_allclose(prof.w_hat, w, rtol=1e-10)
    np.testing.assert_allclose(prof.y_hat, X @ w, rtol=1e-10, atol=1e-12)
    assert prof.y_hat_n == pytest.approx(x_n @ w, rel=1e-10)
    assert prof.g_n == pytest.approx(x_n @ Minv @ x_n, rel=1e-10)
    np.testing.assert_allclose(prof.g, X @ Minv @ x_n, rtol=1e-9, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    arrays(float, (6, 2), elements=st.floats(-10, 10)),
    arrays(float, 2, elements=st.floats(-10, 10)),
    st.floats(1e-3, 100),
)
def test_leverage_nonnegative(X, x_n, a):
    prof = leverage_profile(X, np.zeros(6), x_n, a)
    assert prof.g_n >= 0


@pytest.mark.parametrize(
    "M, expected",
    [([[1.0]], True), ([[0.0]], False), ([[2.0, 0.0], [0.0, -1.0]], False)],
)
def test_is_positive_definite_examples(M, expected):
    assert is_positive_definite(M) is expected


def test_is_positive_definite_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        is_positive_definite([[1.0, 0.5], [0.0, 1.0]])


def test_is_positive_definite_agrees_with_eigenvalues(rng):
    agree = 0
    for _ in range(1000):
        p = rng.integers(1, 5)
        G = rng.standard_normal((p, p))
        # shift so roughly half of the matrices are definite
        M = G + G.T + rng.uniform(-1, 4) * np.eye(p)
        agree += is_positive_definite(M) == bool(np.all(np.linalg.eigvalsh(M) > 0))
    assert agree == 1000


def test_quadform_examples():
    assert quadform_identity([1.0, 0.0], np.eye(2)) == pytest.approx(0.5, abs=1e-15)
    assert quadform_identity([0.0, 0.0], np.eye(2)) == 0
    assert quadform_identity([1.0], [[0.0]]) == 1.0


def test_quadform_matches_direct_inverse(rng):
    for _ in range(1000):
        p = rng.integers(1, 5)
        G = rng.standard_normal((p, p))
        C = G.T @ G
        mu = rng.standard_normal(p) * rng.uniform(0, 3)
        q = quadform_identity(mu, C)
        direct = mu @ np.linalg.solve(C + np.outer(mu, mu), mu)
        assert 0 <= q <= 1
        assert q == pytest.approx(direct, abs=1e-10)


def test_quadform_singular_limit():
    # C = diag(1, 0): mu in the range of C gives the finite value, otherwise 1
    C = np.diag([1.0, 0.0])
    assert quadform_identity([2.0, 0.0], C) == pytest.approx(4.0 / 5.0)
    assert quadform_identity([2.0, 1e-3], C) == 1.0
    for delta in (1e-4, 1e-6, 1e-8):
        Cd = C + delta * np.eye(2)
        mu = np.array([2.0, 0.0])
        direct = mu @ np.linalg.solve(Cd + np.outer(mu, mu), mu)
        assert direct == pytest.approx(0.8, abs=10 * delta)


def test_ridge_config_validation():
    RidgeConfig(0.0, 1.0, 0.5)
    for bad in [dict(a=-1), dict(sigma=0), dict(epsilon=0), dict(epsilon=1)]:
        with pytest.raises(ValueError):
            RidgeConfig(**bad)
