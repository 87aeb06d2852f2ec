"""2x2 matrix algebra in the Frobenius inner product, plus polar frames.

All matrix operations accept arrays of shape (..., 2, 2) and broadcast,
so identity checks can run over large random batches in one call.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "cofactor",
    "adjugate",
    "det2",
    "frob_dot",
    "frob_norm",
    "det_expansion",
    "grad_W",
    "monotonicity_gap",
    "PolarFrame",
    "polar_frame",
]


def det2(A):
    """Determinant of (...,2,2) arrays."""
    A = np.asarray(A, dtype=float)
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def cofactor(A):
    """Cofactor of a 2x2 matrix: [[a22, -a21], [-a12, a11]].

    Satisfies cofactor(A) . A = 2 det(A) and |cofactor(A)| = |A|.
    """
    A = np.asarray(A, dtype=float)
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 0, 1] = -A[..., 1, 0]
    out[..., 1, 0] = -A[..., 0, 1]
    out[..., 1, 1] = A[..., 0, 0]
    return out


def adjugate(A):
    """Adjugate (transpose of the cofactor): A @ adjugate(A) = det(A) I."""
    return np.swapaxes(cofactor(A), -1, -2)


def frob_dot(A, B):
    """Frobenius inner product sum_ij A_ij B_ij over the last two axes."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return np.sum(A * B, axis=(-1, -2))


def frob_norm(A):
    return np.sqrt(frob_dot(A, A))


def det_expansion(A, B):
    """Both sides of det(A+B) = det A + det B + cofactor(A) . B.

    Returns (lhs, rhs); the two agree to rounding for any pair.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    lhs = det2(A + B)
    rhs = det2(A) + det2(B) + frob_dot(cofactor(A), B)
    return lhs, rhs


def grad_W(A, rho):
    """Stress of W(A) = |A|^2/2 + rho(det A), i.e. A + rho'(det A) cofactor(A)."""
    A = np.asarray(A, dtype=float)
    _, drho, _ = rho.eval(det2(A))
    return A + np.asarray(drho)[..., None, None] * cofactor(A)


def monotonicity_gap(A, B, rho):
    """Margin of the monotonicity inequality for grad_W.

    Returns (grad_W(A) - grad_W(B)) . (A - B) - (1 - gamma) |A - B|^2,
    which is nonnegative for every A, B and every slope gamma > 0.
    """
    diff = np.asarray(A, dtype=float) - np.asarray(B, dtype=float)
    lhs = frob_dot(grad_W(A, rho) - grad_W(B, rho), diff)
    return lhs - (1.0 - rho.gamma) * frob_dot(diff, diff)


class PolarFrame(NamedTuple):
    k: int
    theta: float
    e_kR: np.ndarray
    e_kT: np.ndarray


def polar_frame(k, theta):
    """Winding-k polar frame e_kR = (cos k*theta, sin k*theta), e_kT = perp.

    theta may be an array; the unit vectors then have shape theta.shape + (2,).
    """
    if k < 0:
        raise ValueError(f"winding k must be >= 0, got {k}")
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(k * theta), np.sin(k * theta)
    e_kR = np.stack([c, s], axis=-1)
    e_kT = np.stack([-s, c], axis=-1)
    return PolarFrame(k=k, theta=theta, e_kR=e_kR, e_kT=e_kT)
