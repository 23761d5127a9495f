import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folklore.core_math import (
    as_distribution,
    check_feature,
    diag_otimes,
    grad_loss,
    hessian_loss,
    log_loss,
    logsumexp,
    norm_2_inf,
    softmax,
)
from folklore.errors import InvalidInputError
from oracles import fd_gradient, fd_hessian, mp_log_loss, mp_softmax, onehot

finite = st.floats(-50, 50, allow_nan=False)


def test_softmax_uniform_and_two_class():
    assert np.allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-15)
    assert np.allclose(softmax([np.log(2.0), 0.0]), [2 / 3, 1 / 3], atol=1e-15)


def test_softmax_large_logits_match_extended_precision():
    z = [1000.0, 1000.0, 999.0]
    out = softmax(z)
    assert np.isfinite(out).all()
    assert np.max(np.abs(out - mp_softmax(z))) <= 1e-12


@pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf, 1.0], [-np.inf, 0.0]])
def test_softmax_rejects_non_finite(bad):
    with pytest.raises(InvalidInputError):
        softmax(bad)


@given(st.lists(finite, min_size=2, max_size=6), st.floats(-100, 100))
def test_softmax_shift_invariance(z, c):
    z = np.array(z)
    assert np.max(np.abs(softmax(z + c) - softmax(z))) <= 1e-12


def test_log_loss_zero_logits_is_log_k():
    rng = np.random.default_rng(0)
    for K in (2, 3, 7):
        y = rng.dirichlet(np.ones(K))
        assert log_loss(np.zeros(K), y) == pytest.approx(np.log(K), abs=1e-14)


def test_log_loss_confident_margin():
    z = np.array([0.0, 50.0, 0.0])
    assert 0 <= log_loss(z, 1) < 1e-20


def test_log_loss_matches_extended_precision():
    rng = np.random.default_rng(1)
    for _ in range(200):
        z = rng.normal(scale=5.0, size=4)
        y = rng.dirichlet(np.ones(4))
        y /= y.sum()
        assert abs(log_loss(z, y) - mp_log_loss(z, y)) <= 1e-12


def test_log_loss_nonnegative_and_logsumexp():
    rng = np.random.default_rng(2)
    for _ in range(100):
        z = rng.normal(scale=10, size=5)
        assert log_loss(z, int(rng.integers(5))) >= 0
        assert logsumexp(z) == pytest.approx(np.log(np.exp(z).sum()), rel=1e-13)


def test_as_distribution_validation():
    assert np.array_equal(as_distribution(2, 3), [0, 0, 1])
    with pytest.raises(InvalidInputError):
        as_distribution(3, 3)
    with pytest.raises(InvalidInputError):
        as_distribution([0.5, 0.6], 2)
    with pytest.raises(InvalidInputError):
        as_distribution([0.5, 0.5], 3)


def test_check_feature_norm_and_dimension():
    x = np.array([3.0, 4.0]) / 5.0
    assert check_feature(x, R=1.0, d=2) is not None
    with pytest.raises(InvalidInputError):
        check_feature(2 * x, R=1.0)
    with pytest.raises(InvalidInputError):
        check_feature(x, d=3)


def test_grad_trivial_cases():
    sigma = softmax([0.3, -0.2, 1.0])
    assert np.array_equal(grad_loss(sigma, sigma, [1.0, 2.0]), np.zeros(6))
    assert np.array_equal(grad_loss(sigma, 0, [0.0, 0.0]), np.zeros(6))


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(200):
        K, d = rng.integers(2, 6), rng.integers(1, 6)
        W = rng.normal(size=(K, d))
        x = rng.normal(size=d)
        y = rng.dirichlet(np.ones(K))
        y /= y.sum()
        f = lambda w: log_loss(w.reshape(K, d) @ x, y)
        g = grad_loss(softmax(W @ x), y, x)
        assert np.max(np.abs(g - fd_gradient(f, W.ravel()))) <= 1e-5


def test_grad_layout_is_row_stacked():
    sigma = np.array([0.2, 0.8])
    x = np.array([1.0, 2.0, 3.0])
    g = grad_loss(sigma, 1, x)
    assert np.allclose(g[:3], 0.2 * x) and np.allclose(g[3:], -0.2 * x)


def test_hessian_vertex_is_zero():
    H = hessian_loss(onehot(1, 3), np.array([1.0, -2.0]))
    assert np.array_equal(H.dense(), np.zeros((6, 6)))


def test_hessian_matches_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(200):
        K, d = rng.integers(2, 6), rng.integers(1, 6)
        W = rng.normal(size=(K, d))
        x = rng.normal(size=d) / np.sqrt(d)
        f = lambda w: log_loss(w.reshape(K, d) @ x, 0)
        H = hessian_loss(softmax(W @ x), x).dense()
        assert np.allclose(H, H.T, atol=1e-15)
        assert np.linalg.eigvalsh(H).min() >= -1e-10
        assert np.max(np.abs(H - fd_hessian(f, W.ravel()))) <= 1e-4


def test_hessian_structured_ops_agree_with_dense():
    rng = np.random.default_rng(5)
    H = hessian_loss(softmax(rng.normal(size=4)), rng.normal(size=3))
    M = H.dense()
    v = rng.normal(size=12)
    assert np.allclose(H.matvec(v), M @ v, atol=1e-13)
    assert H.quad(v) == pytest.approx(v @ M @ v, abs=1e-13)


def test_hessian_top_eigenvalue_bounded_by_squared_norm():
    rng = np.random.default_rng(6)
    for _ in range(200):
        K, d = rng.integers(2, 7), rng.integers(1, 6)
        x = rng.normal(size=d) * rng.uniform(0.1, 3)
        sigma = softmax(rng.normal(scale=3, size=K))
        top = np.linalg.eigvalsh(hessian_loss(sigma, x).dense()).max()
        assert top <= x @ x + 1e-10


@settings(max_examples=100)
@given(st.integers(2, 5), st.integers(1, 4), st.data())
def test_hessian_kills_constant_class_direction(K, d, data):
    z = np.array(data.draw(st.lists(finite, min_size=K, max_size=K)))
    x = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d)))
    v = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d)))
    H = hessian_loss(softmax(z), x)
    assert np.max(np.abs(H.matvec(np.kron(np.ones(K), v)))) <= 1e-10


def test_diag_otimes_examples():
    assert np.array_equal(diag_otimes(np.eye(6), 2), np.eye(6))
    expected = np.zeros((4, 4))
    expected[:2, :2] = 1
    expected[2:, 2:] = 1
    assert np.array_equal(diag_otimes(np.ones((4, 4)), 2), expected)
    M = np.random.default_rng(7).normal(size=(9, 9))
    assert np.array_equal(diag_otimes(diag_otimes(M, 3), 3), diag_otimes(M, 3))
    with pytest.raises(InvalidInputError):
        diag_otimes(np.eye(5), 2)


def test_norm_2_inf():
    assert norm_2_inf(np.array([[3.0, 4.0], [1.0, 0.0]])) == 5.0
