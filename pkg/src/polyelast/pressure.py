"""Incompressible toolkit: the weighted 'buckling' energy and its twist-map
pressure, pressure-gradient systems for polar-diagonal quadratic forms with
N-cover boundary data, small-pressure and high-frequency uniqueness
thresholds, and the closed-form counterexample energy.

Conventions.  The pressure gradient is always reported as the pair
(lam_theta, lam_R * R), and its sup norm is the max over the two components
(not the Euclidean norm of the vector; the two differ by up to sqrt(2)).
The general small-pressure prefactor sqrt(3)/(2 sqrt(2)) lives in
GENERAL_PREFACTOR and is used everywhere through that name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .algebra import adjugate
from .rho import drho_only

__all__ = [
    "GENERAL_PREFACTOR",
    "PolarQuadForm",
    "PressureGradient",
    "TwistProfile",
    "SingularSystemError",
    "DegenerateFieldError",
    "w_eps_pointwise",
    "p_eps",
    "buckling_energy",
    "twist_pressure_slope",
    "ncover_pressure_system",
    "pressure_gradient_field",
    "small_pressure_check",
    "admissible_a_range",
    "ncover_min_energy",
    "quadratic_energy",
    "hf_thresholds",
    "hf_threshold_compressible",
    "uniqueness_conditions",
    "adm_condition",
    "ss_condition_check",
    "estimate_sigma_bound",
]

#: Prefactor of the general small-pressure condition.  Possibly not optimal
#: (open whether it can be improved); configured in exactly one place.
GENERAL_PREFACTOR = math.sqrt(3.0) / (2.0 * math.sqrt(2.0))


class SingularSystemError(RuntimeError):
    """Pressure system determinant vanished (cannot occur for N-cover data)."""


class DegenerateFieldError(RuntimeError):
    """|sigma| vanishes on too large a share of the grid."""


def _as_theta_fn(c):
    if callable(c):
        return c
    val = float(c)
    return lambda theta, _v=val: np.full_like(np.asarray(theta, dtype=float), _v)


@dataclass
class PolarQuadForm:
    """Quadratic integrand diagonal in the polar frame, theta-dependent
    coefficients (c_rr, c_rt, c_tr, c_tt) with user-supplied derivatives.

    Constants are accepted in place of callables; their derivatives default
    to zero.  `constant(nu, a)` builds the N-cover counterexample family
    (a, 1, a, 1) * nu.
    """

    nu: float
    c_rr: Union[float, Callable]
    c_rt: Union[float, Callable]
    c_tr: Union[float, Callable]
    c_tt: Union[float, Callable]
    d_rr: Union[float, Callable] = 0.0
    d_rt: Union[float, Callable] = 0.0
    d_tr: Union[float, Callable] = 0.0
    d_tt: Union[float, Callable] = 0.0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        self.is_constant = all(
            not callable(c) for c in (self.c_rr, self.c_rt, self.c_tr, self.c_tt)
        )

    @classmethod
    def constant(cls, nu, a):
        return cls(nu=nu, c_rr=a * nu, c_rt=nu, c_tr=a * nu, c_tt=nu)

    def check_floor(self, n_theta=720):
        """True when every coefficient stays >= nu on a theta sample
        (the uniform-convexity floor of the form)."""
        theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
        return all(
            float(np.min(np.asarray(c))) >= self.nu - 1e-12
            for c in self.coeffs_at(theta)
        )

    def coeffs_at(self, theta):
        fns = [_as_theta_fn(c) for c in (self.c_rr, self.c_rt, self.c_tr, self.c_tt)]
        return tuple(f(theta) for f in fns)

    def dcoeffs_at(self, theta):
        fns = [_as_theta_fn(c) for c in (self.d_rr, self.d_rt, self.d_tr, self.d_tt)]
        return tuple(f(theta) for f in fns)


@dataclass
class PressureGradient:
    """Sampled pressure-gradient pair and its component-max sup norm."""

    R: np.ndarray
    theta: np.ndarray
    lam_theta: np.ndarray
    lam_R_times_R: np.ndarray
    sup_norm_P: float


@dataclass
class TwistProfile:
    """Angular twist k(R) of the map R e_R(theta + k(R)); k(1) = 0."""

    grid: np.ndarray
    k: np.ndarray
    dk: np.ndarray
    eps: float

    def __post_init__(self):
        if abs(self.k[-1]) > 1e-12:
            raise ValueError("twist profile must satisfy k(1) = 0")


def p_eps(eps):
    """The twist pressure scale eps - 1/eps."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return eps - 1.0 / eps


def w_eps_pointwise(xhat, xi, eps):
    """Weighted integrand (1/eps)|xi^T xhat|^2 + eps|adj(xi) xhat|^2.

    At eps = 1 this is the splitting |xi|^2 = |xi^T xhat|^2 + |adj(xi) xhat|^2.
    """
    if eps < 1.0:
        raise ValueError(f"eps must be >= 1, got {eps}")
    xhat = np.asarray(xhat, dtype=float)
    xi = np.asarray(xi, dtype=float)
    row = np.einsum("...ij,...i->...j", xi, xhat)  # xi^T xhat
    adj = np.einsum("...ij,...j->...i", adjugate(xi), xhat)
    out = np.sum(row**2, axis=-1) / eps + eps * np.sum(adj**2, axis=-1)
    if out.ndim == 0:
        return float(out)
    return out


_GL4_T, _GL4_W = np.polynomial.legendre.leggauss(4)


def _twist_integrand(k, dk, R, eps):
    pe = p_eps(eps)
    c, s = np.cos(k), np.sin(k)
    Rkp = R * dk
    return (1.0 / eps) * ((c - Rkp * s) ** 2 + s**2) + eps * ((s + Rkp * c) ** 2 + c**2)


def buckling_energy(u, eps, R=None, theta=None):
    """Disk integral of the weighted integrand.

    `u` is either a TwistProfile (angular integrand is closed-form, radial
    quadrature is cellwise Hermite + Gauss-Legendre) or a map sampled on a
    tensor polar grid as a (nR, nT, 2) array.
    """
    if eps < 1.0:
        raise ValueError(f"eps must be >= 1, got {eps}")
    if isinstance(u, TwistProfile):
        g, k, dk = u.grid, u.k, u.dk
        R0, R1 = g[:-1], g[1:]
        h = R1 - R0
        t = 0.5 * (_GL4_T[None, :] + 1.0)
        w = 0.5 * h[:, None] * _GL4_W[None, :]
        x = R0[:, None] + h[:, None] * t
        t2, t3 = t * t, t**3
        hh = h[:, None]
        K = (
            (2 * t3 - 3 * t2 + 1) * k[:-1, None]
            + (t3 - 2 * t2 + t) * hh * dk[:-1, None]
            + (-2 * t3 + 3 * t2) * k[1:, None]
            + (t3 - t2) * hh * dk[1:, None]
        )
        Kp = (
            (6 * t2 - 6 * t) * k[:-1, None] / hh
            + (3 * t2 - 4 * t + 1) * dk[:-1, None]
            + (-6 * t2 + 6 * t) * k[1:, None] / hh
            + (3 * t2 - 2 * t) * dk[1:, None]
        )
        vals = _twist_integrand(K, Kp, x, eps)
        return 2.0 * math.pi * float(np.sum(w * vals * x))

    from .energy import polar_grid, _diff4_axis0, _diff4_periodic_axis1

    u = np.asarray(u, dtype=float)
    if R is None or theta is None:
        R, theta = polar_grid(u.shape[0], u.shape[1])
    u_R = _diff4_axis0(u, R[1] - R[0])
    u_T = _diff4_periodic_axis1(u, theta[1] - theta[0]) / R[:, None, None]
    eR = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    eT = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    P00 = np.einsum("rtk,tk->rt", u_R, eR)
    P01 = np.einsum("rtk,tk->rt", u_R, eT)
    P10 = np.einsum("rtk,tk->rt", u_T, eR)
    P11 = np.einsum("rtk,tk->rt", u_T, eT)
    # |xi^T e_R|^2 = P00^2 + P10^2 and |adj(xi) e_R|^2 = |xi^T e_T|^2
    dens = (P00**2 + P10**2) / eps + eps * (P01**2 + P11**2)
    w = R[:, None] * (R[1] - R[0]) * (theta[1] - theta[0])
    return float(np.sum(dens * w))


def twist_pressure_slope(tp, R):
    """lam'(R) R for a twist stationary point,

        lam' R = [p_eps (sin^2 k / eps - eps cos^2 k) - R^2 k'^2]
                 / (1/eps + p_eps cos^2 k).

    k and k' are interpolated from the profile; k == 0 gives -p_eps.
    """
    R = np.asarray(R, dtype=float)
    k = np.interp(R, tp.grid, tp.k)
    dk = np.interp(R, tp.grid, tp.dk)
    eps = tp.eps
    pe = p_eps(eps)
    c2 = np.cos(k) ** 2
    s2 = np.sin(k) ** 2
    out = (pe * (s2 / eps - eps * c2) - R**2 * dk**2) / (1.0 / eps + pe * c2)
    if out.ndim == 0:
        return float(out)
    return out


def ncover_pressure_system(form, N, R, theta):
    """Pressure gradient (lam_theta, lam_R * R) for the N-cover boundary map
    under a polar-diagonal quadratic form, by assembling and solving the
    2x2 linear system at each sample point.

    With phi = (N-1) theta and coefficients (al, be, ga, de) of the form,
    the right-hand sides are

        h1 =  sqrt(N) be' sin(phi) + [sqrt(N)(N-1) be + sqrt(N) de - al/sqrt(N)] cos(phi)
        h2 = -sqrt(N) de' cos(phi) + [sqrt(N) be + sqrt(N)(N-1) de - ga/sqrt(N)] sin(phi)

    and the coefficient matrix [[-sin(phi)/sqrt(N), sqrt(N) cos(phi)],
    [cos(phi)/sqrt(N), sqrt(N) sin(phi)]] has determinant -1 identically.
    """
    if N < 2:
        raise ValueError(f"N-cover winding must be >= 2, got {N}")
    R = np.asarray(R, dtype=float)
    theta = np.asarray(theta, dtype=float)
    R, theta = np.broadcast_arrays(R, theta)
    rootN = math.sqrt(N)
    phi = (N - 1) * theta
    sp, cp = np.sin(phi), np.cos(phi)

    al, be, ga, de = form.coeffs_at(theta)
    _, dbe, _, dde = form.dcoeffs_at(theta)
    h1 = rootN * dbe * sp + (rootN * (N - 1) * be + rootN * de - al / rootN) * cp
    h2 = -rootN * dde * cp + (rootN * be + rootN * (N - 1) * de - ga / rootN) * sp

    a11, a12 = -sp / rootN, rootN * cp
    a21, a22 = cp / rootN, rootN * sp
    det = a11 * a22 - a12 * a21
    if np.any(np.abs(det) < 1e-12):
        raise SingularSystemError("pressure system determinant below 1e-12")
    lam_theta = (h1 * a22 - h2 * a12) / det
    lam_R_R = (h2 * a11 - h1 * a21) / det
    return lam_theta, lam_R_R


def pressure_gradient_field(form, N, R, theta):
    """PressureGradient samples on (R, theta); constant coefficients take the
    closed-form fast path lam_theta = 0, lam_R R = nu (N - a/N)."""
    R = np.asarray(R, dtype=float)
    theta = np.asarray(theta, dtype=float)
    RR, TT = np.meshgrid(R, theta, indexing="ij")
    if form.is_constant and form.c_rt == form.c_tt and form.c_rr == form.c_tr:
        a = form.c_rr / form.c_rt
        scale = form.c_rt  # = nu for the (a,1,a,1) nu family
        lam_t = np.zeros_like(RR)
        lam_rr = np.full_like(RR, scale * (N - a / N))
    else:
        lam_t, lam_rr = ncover_pressure_system(form, N, RR, TT)
    sup = max(float(np.max(np.abs(lam_t))), float(np.max(np.abs(lam_rr))))
    return PressureGradient(R=R, theta=theta, lam_theta=lam_t, lam_R_times_R=lam_rr, sup_norm_P=sup)


def small_pressure_check(P, nu, mode="general"):
    """Check the small-pressure bound; returns (passed, strict).

    mode "general" compares P against GENERAL_PREFACTOR * nu; "radial_only"
    and "angular_only" (pressure depending on one variable) against nu.
    A strict inequality is what global uniqueness needs.
    """
    if P < 0:
        raise ValueError(f"P must be >= 0, got {P}")
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if mode == "general":
        thr = GENERAL_PREFACTOR * nu
    elif mode in ("radial_only", "angular_only"):
        thr = nu
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return P <= thr, P < thr


def admissible_a_range(N):
    """Open interval (N^2 - N, N^2 + N) of weights with strict small pressure."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return float(N * N - N), float(N * N + N)


def ncover_min_energy(nu, a, N):
    """Closed-form minimal energy nu pi/2 (1 + a)(1/N + N) of the N-cover
    counterexample configuration."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return nu * math.pi / 2.0 * (1.0 + a) * (1.0 / N + N)


def quadratic_energy(u, form, R=None, theta=None):
    """Quadrature of the polar-diagonal quadratic energy of a gridded map.

    The four coefficients weight the squared polar gradient components
    indexed (derivative direction, image component):

        c_rr (e_R . u_R)^2 + c_rt (e_T . u_R)^2
      + c_tr (e_R . u_T/R)^2 + c_tt (e_T . u_T/R)^2

    which reproduces the counterexample's closed-form minimum for the
    (a, 1, a, 1) nu family.
    """
    from .energy import polar_grid, _diff4_axis0, _diff4_periodic_axis1

    u = np.asarray(u, dtype=float)
    if R is None or theta is None:
        R, theta = polar_grid(u.shape[0], u.shape[1])
    u_R = _diff4_axis0(u, R[1] - R[0])
    u_T = _diff4_periodic_axis1(u, theta[1] - theta[0]) / R[:, None, None]
    eR = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    eT = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    P00 = np.einsum("rtk,tk->rt", u_R, eR)
    P01 = np.einsum("rtk,tk->rt", u_R, eT)
    P10 = np.einsum("rtk,tk->rt", u_T, eR)
    P11 = np.einsum("rtk,tk->rt", u_T, eT)
    crr, crt, ctr, ctt = form.coeffs_at(theta)
    dens = (
        np.asarray(crr)[None, :] * P00**2
        + np.asarray(crt)[None, :] * P01**2
        + np.asarray(ctr)[None, :] * P10**2
        + np.asarray(ctt)[None, :] * P11**2
    )
    w = R[:, None] * (R[1] - R[0]) * (theta[1] - theta[0])
    return float(np.sum(dens * w))


def hf_thresholds(P, nu):
    """Smallest admissible mode floors (n, m) for the two high-frequency
    uniqueness statements: n = ceil(P/nu) for the pure-high-modes bound
    P <= n nu, and m = ceil(P / (GENERAL_PREFACTOR nu)) for the variant that
    keeps the 0-mode, P <= GENERAL_PREFACTOR m nu."""
    if P < 0:
        raise ValueError(f"P must be >= 0, got {P}")
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    n = math.ceil(P / nu)
    m = math.ceil(P / (GENERAL_PREFACTOR * nu))
    return n, m


def hf_threshold_compressible(p, rho):
    """Mode floor n for a radial profile of the compressible energy:
    n = ceil( sup_R |d/dR rho'(d(R))| R ) by finite differences."""
    d = p.M * p.r * p.dr / p.grid
    q = drho_only(rho, d)
    dq = np.gradient(q, p.grid)
    P = float(np.max(np.abs(dq) * p.grid))
    return math.ceil(P - 1e-9) if P > 1e-9 else 0


def uniqueness_conditions(p, rho, tol=1e-8):
    """The two pointwise determinant conditions that force global uniqueness:
    (i) d >= s0 a.e., (ii) d constant."""
    d = p.M * p.r * p.dr / p.grid
    return {
        "cond_i": bool(np.min(d) >= rho.s0 - tol),
        "cond_ii": bool(np.max(d) - np.min(d) <= tol),
    }


def adm_condition(R, grad_norm, hess_norm, alpha, mode="high_modes"):
    """Smallest mode floor for the quartic (ADM-type) integrand conditions

        |hess| R <= (n / (4 alpha)) |grad|                      (high_modes)
        |hess| R <= (sqrt(3) m / (8 sqrt(2) alpha)) |grad|      (with_zero_mode)

    evaluated pointwise on the supplied |grad u| and |grad^2 u| fields.
    Note sqrt(3)/(8 sqrt(2)) = GENERAL_PREFACTOR / 4.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    R = np.asarray(R, dtype=float)
    grad_norm = np.asarray(grad_norm, dtype=float)
    hess_norm = np.asarray(hess_norm, dtype=float)
    if np.any(grad_norm <= 0):
        raise ValueError("grad field must be positive where tested")
    ratio = float(np.max(hess_norm * R / grad_norm))
    if mode == "high_modes":
        x = 4.0 * alpha * ratio
    elif mode == "with_zero_mode":
        x = 4.0 * alpha * ratio / GENERAL_PREFACTOR
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return math.ceil(x) if x > 1e-9 else 0


def ss_condition_check(p, rho, nu):
    """Pointwise check |rho'(d(R))| R <= nu on the profile grid (the
    determinant-derivative smallness condition, p-exponent 2)."""
    d = p.M * p.r * p.dr / p.grid
    q = drho_only(rho, d)
    return bool(np.max(np.abs(q) * p.grid) <= nu + 1e-12)


def estimate_sigma_bound(sigma, degenerate_tol=1e-12, max_degenerate_frac=0.01):
    """Smallest integer l with |d sigma / d theta| <= l |sigma| pointwise.

    sigma is a matrix field on a tensor (R, theta) grid, shape
    (nR, nT, 2, 2), theta uniform; the theta derivative is taken by central
    finite differences.  Raises DegenerateFieldError when |sigma| vanishes
    on more than max_degenerate_frac of the nodes.
    """
    sigma = np.asarray(sigma, dtype=float)
    n_t = sigma.shape[1]
    dtheta = 2.0 * math.pi / n_t
    ds = (np.roll(sigma, -1, axis=1) - np.roll(sigma, 1, axis=1)) / (2.0 * dtheta)
    norm = np.sqrt(np.sum(sigma**2, axis=(-1, -2)))
    dnorm = np.sqrt(np.sum(ds**2, axis=(-1, -2)))
    ok = norm > degenerate_tol
    if np.mean(~ok) > max_degenerate_frac:
        raise DegenerateFieldError(
            f"|sigma| below {degenerate_tol} on {np.mean(~ok):.1%} of nodes"
        )
    ratio = float(np.max(dnorm[ok] / norm[ok]))
    return math.ceil(ratio - 1e-9) if ratio > 1e-9 else 0
