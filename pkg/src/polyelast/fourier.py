"""Fourier-mode machinery on the unit disk.

A vector field eta(R, theta) is stored as radial coefficient profiles of

    eta = A_0/2 + sum_{j>=1} ( A_j(R) cos(j theta) + B_j(R) sin(j theta) ),

with A_j, B_j two-component.  Radial profiles live on a Gauss-Legendre grid
so disk integrals are plain weighted sums (spectrally accurate for smooth
profiles); the angular direction uses the trapezoid rule, which is
spectrally accurate for periodic integrands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "AliasRiskWarning",
    "DiskField",
    "disk_grid",
    "decompose",
    "reconstruct",
    "strip_low_modes",
    "weighted_norms",
    "zero_mode_det_check",
    "parseval_gradient_check",
    "radial_diff_matrix",
    "mode_norm_table",
    "write_mode_table",
]


class AliasRiskWarning(UserWarning):
    """Angular resolution is marginal for the requested mode count."""


def disk_grid(n_r=48, n_theta=256):
    """Radial Gauss-Legendre nodes/weights on (0, 1) and uniform angles."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    R = 0.5 * (x + 1.0)
    wR = 0.5 * w
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return R, wR, theta


@dataclass
class DiskField:
    """Fourier-mode representation of a disk vector field.

    A has shape (Jmax+1, nR, 2) (A[0] is the 0-mode coefficient, used as
    A_0/2 in the sum), B has shape (Jmax, nR, 2) for modes 1..Jmax.
    """

    Jmax: int
    A: np.ndarray
    B: np.ndarray
    grid: np.ndarray
    weights: np.ndarray  # radial quadrature weights matching grid

    def mode(self, j):
        """(A_j, B_j) profiles; B_0 is zero by convention."""
        if j == 0:
            return self.A[0], np.zeros_like(self.A[0])
        return self.A[j], self.B[j - 1]


def decompose(samples, Jmax, R=None, weights=None, theta=None):
    """Project tensor-grid samples (nR, nT, 2) onto modes 0..Jmax.

    The angular grid must be uniform on [0, 2 pi); the trapezoid-rule
    projections A_j = (1/pi) int eta cos(j theta) dtheta (and sin for B_j)
    make reconstruct(decompose(.)) the identity on band-limited fields.
    """
    samples = np.asarray(samples, dtype=float)
    n_r, n_t = samples.shape[0], samples.shape[1]
    if R is None or weights is None or theta is None:
        R, weights, theta = disk_grid(n_r, n_t)
    if n_t < 4 * Jmax:
        warnings.warn(
            f"n_theta = {n_t} below 4*Jmax = {4 * Jmax}; aliasing possible",
            AliasRiskWarning,
            stacklevel=2,
        )
    A = np.empty((Jmax + 1, n_r, 2))
    B = np.empty((Jmax, n_r, 2))
    for j in range(Jmax + 1):
        cj = np.cos(j * theta)
        A[j] = (samples * cj[None, :, None]).sum(axis=1) * (2.0 / n_t)
        if j >= 1:
            sj = np.sin(j * theta)
            B[j - 1] = (samples * sj[None, :, None]).sum(axis=1) * (2.0 / n_t)
    return DiskField(Jmax=Jmax, A=A, B=B, grid=np.asarray(R), weights=np.asarray(weights))


def reconstruct(f, theta):
    """Evaluate the mode sum on the field's radial grid x theta, (nR, nT, 2)."""
    theta = np.asarray(theta, dtype=float)
    out = 0.5 * f.A[0][:, None, :] * np.ones((1, len(theta), 1))
    for j in range(1, f.Jmax + 1):
        out = out + f.A[j][:, None, :] * np.cos(j * theta)[None, :, None]
        out = out + f.B[j - 1][:, None, :] * np.sin(j * theta)[None, :, None]
    return out


def _dtheta_modes(f, theta):
    """Angular derivative of the mode sum at (grid x theta)."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros((f.A.shape[1], len(theta), 2))
    for j in range(1, f.Jmax + 1):
        out = out - j * f.A[j][:, None, :] * np.sin(j * theta)[None, :, None]
        out = out + j * f.B[j - 1][:, None, :] * np.cos(j * theta)[None, :, None]
    return out


def strip_low_modes(f, n, keep_zero=False):
    """Zero out modes 0 < j < n; n = 0 is the identity.

    The 0-mode is kept when n = 0 or keep_zero (the class that retains the
    0-mode alongside modes >= n), dropped otherwise.
    """
    A = f.A.copy()
    B = f.B.copy()
    if n > 0 and not keep_zero:
        A[0] = 0.0
    for j in range(1, min(n, f.Jmax + 1)):
        A[j] = 0.0
        B[j - 1] = 0.0
    return replace(f, A=A, B=B)


def weighted_norms(f, n_theta=None):
    """Quadrature of the weighted angular-derivative and plain norms

        theta_norm = int_B R^-2 |eta_theta|^2 dx,
        plain_norm = int_B R^-2 |eta|^2 dx,

    with the 0-mode stripped (the estimate concerns the remainder).
    theta_norm >= plain_norm, and a single mode j gives the factor j^2.
    """
    ft = strip_low_modes(f, 1, keep_zero=False)
    if n_theta is None:
        n_theta = max(4 * f.Jmax, 32)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    eta = reconstruct(ft, theta)
    eta_t = _dtheta_modes(ft, theta)
    dtheta = 2.0 * np.pi / n_theta
    w = (f.weights / f.grid)[:, None]  # R^-2 * R dR weight
    plain = float(np.sum(w * np.sum(eta**2, axis=-1)) * dtheta)
    th = float(np.sum(w * np.sum(eta_t**2, axis=-1)) * dtheta)
    return th, plain


def mode_norm_table(f):
    """Per-mode weighted norms as (j, plain_norm_j, theta_norm_j, ratio) rows.

    The ratio theta/plain equals j^2 up to quadrature for a pure mode.
    """
    rows = []
    for j in range(1, f.Jmax + 1):
        A = np.zeros_like(f.A)
        B = np.zeros_like(f.B)
        A[j] = f.A[j]
        B[j - 1] = f.B[j - 1]
        single = replace(f, A=A, B=B)
        th, pl = weighted_norms(single)
        rows.append((j, pl, th, th / pl if pl > 0 else float("nan")))
    return rows


def write_mode_table(f, path):
    """Dump mode_norm_table as CSV with columns j, plain_norm, theta_norm, ratio."""
    with open(path, "w") as fh:
        fh.write("j,plain_norm,theta_norm,ratio\n")
        for j, pl, th, ratio in mode_norm_table(f):
            fh.write(f"{j},{pl:.17g},{th:.17g},{ratio:.17g}\n")


def radial_diff_matrix(R):
    """Lagrange differentiation matrix on arbitrary distinct nodes."""
    R = np.asarray(R, dtype=float)
    n = len(R)
    diff = R[:, None] - R[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = w[j] / (w[i] * (R[i] - R[j]))
        D[i, i] = -np.sum(D[i, :])
    return D


def zero_mode_det_check(f, n_theta=64, tol_modes=1e-12):
    """max |det grad| of the 0-mode part; rank-one gradients make it vanish.

    Rejects fields still carrying modes j >= 1 (strip first).
    """
    high = max(
        (float(np.max(np.abs(f.A[j]))) for j in range(1, f.Jmax + 1)),
        default=0.0,
    )
    high = max(high, float(np.max(np.abs(f.B))) if f.B.size else 0.0)
    if high > tol_modes:
        raise ValueError("field carries modes j >= 1; strip them first")
    D = radial_diff_matrix(f.grid)
    dA = D @ (0.5 * f.A[0])  # (nR, 2)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    eR = np.stack([np.cos(theta), np.sin(theta)], axis=-1)  # (nT, 2)
    # grad eta0 = (A0/2)'(R) (x) e_R: det of a rank-one matrix
    g11 = dA[:, None, 0] * eR[None, :, 0]
    g12 = dA[:, None, 0] * eR[None, :, 1]
    g21 = dA[:, None, 1] * eR[None, :, 0]
    g22 = dA[:, None, 1] * eR[None, :, 1]
    det = g11 * g22 - g12 * g21
    return float(np.max(np.abs(det)))


def parseval_gradient_check(f, n_theta=None):
    """(lhs, rhs) of the mode-additivity of the Dirichlet energy:
    lhs integrates |grad eta|^2 of the full reconstruction, rhs sums the
    per-mode Dirichlet energies."""
    if n_theta is None:
        n_theta = max(4 * f.Jmax, 32)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    dtheta = 2.0 * np.pi / n_theta
    D = radial_diff_matrix(f.grid)

    def dirichlet(fld):
        eta_t = _dtheta_modes(fld, theta)
        A_r = np.einsum("ij,mjc->mic", D, fld.A)
        B_r = np.einsum("ij,mjc->mic", D, fld.B) if fld.B.size else fld.B
        fld_r = replace(fld, A=A_r, B=B_r)
        eta_r = reconstruct(fld_r, theta)
        dens = np.sum(eta_r**2, axis=-1) + np.sum(eta_t**2, axis=-1) / f.grid[:, None] ** 2
        return float(np.sum((f.weights * f.grid)[:, None] * dens) * dtheta)

    lhs = dirichlet(f)
    rhs = 0.0
    for j in range(f.Jmax + 1):
        A = np.zeros_like(f.A)
        B = np.zeros_like(f.B)
        if j == 0:
            A[0] = f.A[0]
        else:
            A[j] = f.A[j]
            B[j - 1] = f.B[j - 1]
        rhs += dirichlet(replace(f, A=A, B=B))
    return lhs, rhs
