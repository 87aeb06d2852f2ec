import numpy as np
import pytest

from polyelast.algebra import (
    cofactor,
    det2,
    det_expansion,
    frob_dot,
    frob_norm,
    grad_W,
    monotonicity_gap,
    polar_frame,
)
from polyelast.rho import build_rho

I2 = np.eye(2)


def test_cofactor_identity_matrix():
    assert np.array_equal(cofactor(I2), I2)


def test_cofactor_explicit():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    expected = np.array([[4.0, -3.0], [-2.0, 1.0]])
    assert np.array_equal(cofactor(A), expected)


def test_cofactor_norm_and_trace_identities():
    rng = np.random.default_rng(42)
    A = rng.normal(size=(10000, 2, 2))
    assert np.max(np.abs(frob_norm(cofactor(A)) - frob_norm(A))) < 1e-12
    assert np.max(np.abs(frob_dot(cofactor(A), A) - 2.0 * det2(A))) < 1e-12


def test_det_expansion_trivial():
    lhs, rhs = det_expansion(I2, I2)
    assert lhs == pytest.approx(4.0, abs=1e-15)
    assert rhs == pytest.approx(4.0, abs=1e-15)
    A = np.array([[2.0, 1.0], [0.5, 3.0]])
    lhs, rhs = det_expansion(A, np.zeros((2, 2)))
    assert lhs == rhs == pytest.approx(det2(A))


def test_det_expansion_random():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(10000, 2, 2))
    B = rng.normal(size=(10000, 2, 2))
    lhs, rhs = det_expansion(A, B)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_grad_W_zero_matrix():
    rho = build_rho(1.0)
    assert np.array_equal(grad_W(np.zeros((2, 2)), rho), np.zeros((2, 2)))


def test_grad_W_identity_affine_tail():
    # det I = 1 >= s0, so the penalty slope is exactly gamma there
    for gamma in (0.5, 1.0, 2.0):
        rho = build_rho(gamma, s0=1.0)
        assert np.allclose(grad_W(I2, rho), (1.0 + gamma) * I2, atol=1e-14)


def test_grad_W_negative_determinant():
    rho = build_rho(1.0)
    A = np.array([[0.0, 1.0], [1.0, 0.0]])  # det = -1
    assert np.array_equal(grad_W(A, rho), A)


def test_monotonicity_gap_equal_args():
    rho = build_rho(1.0)
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert monotonicity_gap(A, A, rho) == 0.0


def test_monotonicity_gap_hand_value():
    rho = build_rho(0.5, s0=1.0)
    gap = monotonicity_gap(I2, np.zeros((2, 2)), rho)
    # 2(1+gamma) - 2(1-gamma) = 4 gamma = 2
    assert gap == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("gamma", [0.1, 0.9, 1.0, 10.0])
def test_monotonicity_gap_random(gamma):
    rho = build_rho(gamma)
    rng = np.random.default_rng(int(gamma * 10))
    A = rng.normal(size=(10000, 2, 2)) * 2.0
    B = rng.normal(size=(10000, 2, 2)) * 2.0
    assert np.min(monotonicity_gap(A, B, rho)) >= -1e-10


def test_polar_frame_basic():
    f = polar_frame(1, 0.0)
    assert np.allclose(f.e_kR, [1.0, 0.0])
    assert np.allclose(f.e_kT, [0.0, 1.0])
    f2 = polar_frame(2, np.pi / 2)
    assert np.allclose(f2.e_kR, [-1.0, 0.0], atol=1e-15)


def test_polar_frame_orthonormal():
    rng = np.random.default_rng(3)
    theta = rng.uniform(0, 2 * np.pi, 500)
    for k in (0, 1, 2, 5):
        f = polar_frame(k, theta)
        assert np.max(np.abs(np.sum(f.e_kR**2, axis=-1) - 1)) < 1e-14
        assert np.max(np.abs(np.sum(f.e_kT**2, axis=-1) - 1)) < 1e-14
        assert np.max(np.abs(np.sum(f.e_kR * f.e_kT, axis=-1))) < 1e-14


def test_polar_frame_rejects_negative_winding():
    with pytest.raises(ValueError):
        polar_frame(-1, 0.0)
