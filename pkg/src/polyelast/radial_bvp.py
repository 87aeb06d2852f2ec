"""Shooting solver for the singular radial two-point problem

    M^2 r / R = r' + R r'' + M rho''(d) d' r   on (0, 1],
    r(0) = 0,  r(1) = 1,

with d = M r r' / R, plus the diagnostic fields (d, d', z, z') and the
lift-off classification.

The origin is singular, so integration starts at eps0 << 1 with the
power-law seed r = s R^M matching the growing kernel element of the linear
part; the decaying branch R^(-M) is excluded by r(0) = 0.  The boundary
value r(1) = 1 is matched by geometric bracketing and bisection in s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rho import f_aux

__all__ = [
    "RadialProfile",
    "BvpDiagnostics",
    "LiftOff",
    "SolveOptions",
    "DivergedError",
    "NoBracketError",
    "ddot_closed_form",
    "ode_rhs",
    "shoot",
    "solve_bvp",
    "diagnostics",
    "classify_liftoff",
    "rescale_check",
    "residual_sup",
    "z_interval_bound_check",
    "delayed_extension",
]


class DivergedError(RuntimeError):
    """Raised when a trajectory blows up (|r| > 1e6) during integration."""

    def __init__(self, s):
        super().__init__(f"trajectory diverged for shooting parameter s={s}")
        self.s = s


class NoBracketError(RuntimeError):
    """r_s(1) < 1 for every s up to s_max.

    Signals a regime the power-law seed family misses (delayed lift-off);
    callers should fall back to the direct minimizer.
    """

    def __init__(self, s_max, r_at_smax):
        super().__init__(
            f"no bracket: r_s(1) = {r_at_smax:.6g} < 1 up to s_max = {s_max:.6g}"
        )
        self.s_max = s_max
        self.r_at_smax = r_at_smax


@dataclass
class RadialProfile:
    """Samples of the radial part r(R) and its derivative on (0, 1]."""

    M: int
    grid: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    s_seed: Optional[float] = None  # shooting parameter that produced the profile

    def interp(self, R):
        return np.interp(R, self.grid, self.r)


@dataclass(frozen=True)
class LiftOff:
    delayed: bool
    delta: Optional[float] = None

    @classmethod
    def immediate(cls):
        return cls(False, None)

    @classmethod
    def at(cls, delta):
        return cls(True, float(delta))

    def __str__(self):
        return f"Delayed({self.delta:.6g})" if self.delayed else "Immediate"


@dataclass
class BvpDiagnostics:
    d: np.ndarray
    ddot: np.ndarray
    z: np.ndarray
    zdot: np.ndarray
    lift_off: LiftOff
    DM_estimate: float
    residual_sup: float
    zdot_sign_changes: int = 0


@dataclass(frozen=True)
class SolveOptions:
    eps0: float = 1e-6
    n_out: int = 512
    rtol: float = 1e-9
    tol_residual: float = 1e-6
    s_max: float = float(2**20)
    s_tol: float = 1e-12
    lift_tol: float = 1e-8
    delta_min: float = 1e-2  # smallest delta reported as a delayed lift-off


def ddot_closed_form(R, r, dr, M, rho):
    """d' along the ODE in closed form,

        d' = M [(R r' - r)^2 + (M^2 - 1) r^2] / (R^3 + M^2 rho''(d) r^2 R),

    with d = M r r' / R.  Nonnegative; the denominator is >= R^3 > 0.
    """
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    d = M * r * dr / R
    _, _, ddrho = rho.eval(d)
    num = M * ((R * dr - r) ** 2 + (M * M - 1) * r * r)
    den = R**3 + M * M * np.asarray(ddrho) * r * r * R
    out = num / den
    if out.ndim == 0:
        return float(out)
    return out


def ode_rhs(R, state, M, rho):
    """Second derivative r'' solved from the strong form of the ODE."""
    r, dr = state
    d = M * r * dr / R
    ddrho = rho.ddrho_scalar(float(d)) if np.ndim(d) == 0 else rho.eval(d)[2]
    ddot = ddot_closed_form(R, r, dr, M, rho)
    return (M * M * r / R - dr - M * np.asarray(ddrho) * ddot * r) / R


# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _integrate(M, rho, R0, r0, v0, out_R, rtol, s_label=None, r_cap=1e6):
    """Adaptive Dormand-Prince integration of (r, r') from R0 through out_R.

    Steps are clipped to land exactly on every output node.  Plain-float
    arithmetic: this sits inside the shooting loop.  Returns (r, dr) arrays
    aligned with out_R.  Raises DivergedError if |r| exceeds r_cap.
    """
    ddrho = rho.ddrho_scalar
    M2 = M * M

    def f(R, r, v):
        d = M * r * v / R
        dd_rho = ddrho(d)
        num = M * ((R * v - r) ** 2 + (M2 - 1.0) * r * r)
        den = R * R * R + M2 * dd_rho * r * r * R
        ddot = num / den
        return v, (M2 * r / R - v - M * dd_rho * ddot * r) / R

    # rho is only C^3 at d = delay and d = s0; steps are clipped to land on
    # those crossings so the error estimator never bridges a kink
    kinks = sorted({t for t in (rho.delay, rho.s0) if t > 0.0})

    out_r = [0.0] * len(out_R)
    out_v = [0.0] * len(out_R)
    R, r, v = R0, r0, v0
    k1r, k1v = f(R, r, v)
    h = 0.01 * R0
    i_out = 0
    # emit any nodes at or before the start
    while i_out < len(out_R) and out_R[i_out] <= R0 * (1 + 1e-14):
        out_r[i_out], out_v[i_out] = r, v
        i_out += 1
    safety, min_h = 0.9, 1e-16
    clip_guard = 0
    while i_out < len(out_R):
        target = out_R[i_out]
        if target - R <= 1e-15 * target:  # already at the node
            out_r[i_out], out_v[i_out] = r, v
            i_out += 1
            continue
        hit = False
        if R + h >= target:
            h = target - R
            hit = True
        # stage evaluations
        k2r, k2v = f(R + _DP_C[1] * h, r + h * (_DP_A[1][0] * k1r), v + h * (_DP_A[1][0] * k1v))
        a = _DP_A[2]
        k3r, k3v = f(R + _DP_C[2] * h, r + h * (a[0] * k1r + a[1] * k2r), v + h * (a[0] * k1v + a[1] * k2v))
        a = _DP_A[3]
        k4r, k4v = f(
            R + _DP_C[3] * h,
            r + h * (a[0] * k1r + a[1] * k2r + a[2] * k3r),
            v + h * (a[0] * k1v + a[1] * k2v + a[2] * k3v),
        )
        a = _DP_A[4]
        k5r, k5v = f(
            R + _DP_C[4] * h,
            r + h * (a[0] * k1r + a[1] * k2r + a[2] * k3r + a[3] * k4r),
            v + h * (a[0] * k1v + a[1] * k2v + a[2] * k3v + a[3] * k4v),
        )
        a = _DP_A[5]
        k6r, k6v = f(
            R + h,
            r + h * (a[0] * k1r + a[1] * k2r + a[2] * k3r + a[3] * k4r + a[4] * k5r),
            v + h * (a[0] * k1v + a[1] * k2v + a[2] * k3v + a[3] * k4v + a[4] * k5v),
        )
        a = _DP_A[6]
        r_new = r + h * (a[0] * k1r + a[2] * k3r + a[3] * k4r + a[4] * k5r + a[5] * k6r)
        v_new = v + h * (a[0] * k1v + a[2] * k3v + a[3] * k4v + a[4] * k5v + a[5] * k6v)
        k7r, k7v = f(R + h, r_new, v_new)

        e = _DP_E
        err_r = h * (e[0] * k1r + e[2] * k3r + e[3] * k4r + e[4] * k5r + e[5] * k6r + e[6] * k7r)
        err_v = h * (e[0] * k1v + e[2] * k3v + e[3] * k4v + e[4] * k5v + e[5] * k6v + e[6] * k7v)
        sc_r = rtol * max(abs(r), abs(r_new))
        sc_v = rtol * max(abs(v), abs(v_new))
        nr = abs(err_r) / sc_r if sc_r > 0.0 else 0.0
        nv = abs(err_v) / sc_v if sc_v > 0.0 else 0.0
        err = max(nr, nv)

        if err <= 1.0:
            # d is nondecreasing along trajectories; clip the step so it
            # lands on (not across) the nearest rho kink in d
            d_old = M * r * v / R
            d_new = M * r_new * v_new / (R + h)
            crossed = None
            for thr in kinks:
                if d_old < thr - 1e-11 and d_new > thr + 1e-11:
                    crossed = thr
                    break
            if crossed is not None and clip_guard < 60:
                frac = (crossed - d_old) / (d_new - d_old)
                h = max(h * frac, 0.25 * h * frac + min_h)
                clip_guard += 1
                continue
            clip_guard = 0
            R, r, v = R + h, r_new, v_new
            k1r, k1v = k7r, k7v  # FSAL
            if abs(r) > r_cap:
                raise DivergedError(s_label)
            if hit:
                out_r[i_out], out_v[i_out] = r, v
                i_out += 1
            grow = 5.0 if err == 0.0 else min(5.0, safety * err ** (-0.2))
            h = h * grow
        else:
            h = h * max(0.1, safety * err ** (-0.2))
            if h < min_h:
                raise RuntimeError(f"step size underflow at R={R!r}")
        h = min(h, 0.5 * R + 0.5)  # keep steps commensurate with the radial scale
    return np.array(out_r), np.array(out_v)


def _geometric_grid(eps0, n):
    g = np.exp(np.linspace(math.log(eps0), 0.0, n))
    g[-1] = 1.0
    return g


def shoot(M, rho, s, eps0=1e-6, n_steps=512, rtol=1e-9):
    """Integrate from R = eps0 with the power-law seed r = s R^M.

    Returns the trajectory as a RadialProfile; r(1) = 1 is not imposed.
    """
    if M < 1:
        raise ValueError(f"winding M must be >= 1, got {M}")
    if s < 0:
        raise ValueError(f"seed amplitude s must be >= 0, got {s}")
    if not 0.0 < eps0 < 1.0:
        raise ValueError(f"need 0 < eps0 < 1, got {eps0}")
    grid = _geometric_grid(eps0, n_steps)
    r0 = s * eps0**M
    v0 = s * M * eps0 ** (M - 1)
    r, dr = _integrate(M, rho, eps0, r0, v0, grid, rtol, s_label=s)
    return RadialProfile(M=M, grid=grid, r=r, dr=dr, s_seed=s)


def _shoot_endpoint(M, rho, s, eps0, rtol):
    r, dr = _integrate(M, rho, eps0, s * eps0**M, s * M * eps0 ** (M - 1), [1.0], rtol, s_label=s)
    return float(r[0])


def solve_bvp(M, rho, opts=None):
    """Find s* with r_{s*}(1) = 1 by geometric bracketing and bisection.

    Returns (profile, diagnostics).  Raises NoBracketError when the seed
    family never reaches r(1) = 1, which indicates a delayed lift-off
    regime; see delayed_extension and the direct minimizer.
    """
    if M < 1:
        raise ValueError(f"winding M must be >= 1, got {M}")
    opts = opts or SolveOptions()

    def endpoint(s):
        try:
            return _shoot_endpoint(M, rho, s, opts.eps0, opts.rtol)
        except DivergedError:
            return math.inf  # blow-up certainly overshoots r(1) = 1

    s_lo, s_hi = 0.0, 1.0
    val = endpoint(s_hi)
    while val < 1.0:
        s_lo, s_hi = s_hi, 2.0 * s_hi
        if s_hi > opts.s_max:
            raise NoBracketError(s_hi / 2.0, val)
        val = endpoint(s_hi)
    while s_hi - s_lo > opts.s_tol:
        mid = 0.5 * (s_lo + s_hi)
        if endpoint(mid) < 1.0:
            s_lo = mid
        else:
            s_hi = mid
    s_star = 0.5 * (s_lo + s_hi)

    prof = shoot(M, rho, s_star, eps0=opts.eps0, n_steps=opts.n_out, rtol=opts.rtol)
    # pin the boundary value; the bisection residue is below s_tol
    prof.r[-1] = 1.0
    diag = diagnostics(prof, rho, opts=opts)
    return prof, diag


def residual_sup(p, rho, substeps=32):
    """Sup-norm defect of the profile against the ODE, by cell re-integration.

    Each grid cell is re-integrated from its left state with RK4
    substeps; the mismatch at the right node, normalized by the cell
    width, measures how badly the stored samples fail the equation.
    """
    M = p.M
    ddrho = rho.ddrho_scalar
    M2 = M * M

    def f(R, r, v):
        d = M * r * v / R
        dd_rho = ddrho(d)
        num = M * ((R * v - r) ** 2 + (M2 - 1.0) * r * r)
        den = R * R * R + M2 * dd_rho * r * r * R
        ddot = num / den
        return v, (M2 * r / R - v - M * dd_rho * ddot * r) / R

    def cell_defect(i, n_sub):
        R, r, v = float(grid[i]), float(rr[i]), float(vv[i])
        H = float(grid[i + 1]) - R
        h = H / n_sub
        for _ in range(n_sub):
            k1r, k1v = f(R, r, v)
            k2r, k2v = f(R + 0.5 * h, r + 0.5 * h * k1r, v + 0.5 * h * k1v)
            k3r, k3v = f(R + 0.5 * h, r + 0.5 * h * k2r, v + 0.5 * h * k2v)
            k4r, k4v = f(R + h, r + h * k3r, v + h * k3v)
            r += h * (k1r + 2 * k2r + 2 * k3r + k4r) / 6.0
            v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
            R += h
        return max(abs(r - float(rr[i + 1])), abs(v - float(vv[i + 1]))) / H

    worst = 0.0
    grid, rr, vv = p.grid, p.r, p.dr
    for i in range(len(grid) - 1):
        defect = cell_defect(i, substeps)
        # cells crossing a rho kink in d converge slowly; refine until the
        # micro-integrator stops dominating the measurement
        n = substeps
        while defect > 2e-7 and n < 40 * substeps:
            n *= 4
            defect = cell_defect(i, n)
        if defect > worst:
            worst = defect
    return worst


def classify_liftoff(p, tol=1e-8, rho=None, delta_min=1e-2):
    """Classify the profile as Delayed(delta) or Immediate.

    Without rho: delta is the largest grid radius below which r stays
    under tol; layers thinner than delta_min are reported Immediate
    (power-law tails dip below any tolerance near the origin).

    With a delayed rho: delta is instead the largest radius where the
    determinant d = M r r'/R still sits below the penalty's lift-off
    point, i.e. the junction of the kernel power-law segment.
    """
    grid, r = p.grid, p.r
    if rho is not None and rho.delay > 0.0:
        d = p.M * p.r * p.dr / grid
        below = np.nonzero(d <= rho.delay + tol)[0]
        if below.size and grid[below[-1]] >= delta_min:
            return LiftOff.at(grid[below[-1]])
        return LiftOff.immediate()
    running_max = np.maximum.accumulate(np.abs(r))
    below = np.nonzero(running_max < tol)[0]
    if below.size and grid[below[-1]] >= delta_min:
        return LiftOff.at(grid[below[-1]])
    return LiftOff.immediate()


def diagnostics(p, rho, opts=None):
    """All derived fields of a profile: d, d', z, z', lift-off, D_M, residual."""
    opts = opts or SolveOptions()
    M, grid, r, dr = p.M, p.grid, p.r, p.dr
    d = M * r * dr / grid
    ddot = ddot_closed_form(grid, r, dr, M, rho)
    z = 0.5 * dr**2 + 0.5 * M * M * r**2 / grid**2 + f_aux(rho, d)
    # z' = -(r^2/R^3)[(R r'/r)^2 - 2 M^2 (R r'/r) + M^2], expanded so the
    # formula also covers r = 0 (both forms vanish there)
    zdot = -(grid**2 * dr**2 - 2.0 * M * M * grid * r * dr + M * M * r**2) / grid**3

    lift = classify_liftoff(p, tol=opts.lift_tol, rho=rho, delta_min=opts.delta_min)

    positive = np.nonzero(r > opts.lift_tol)[0]
    if positive.size:
        i = positive[0]
        dm = float(grid[i] * dr[i] / r[i])
    else:
        dm = math.nan

    res = residual_sup(p, rho)

    floor = 1e-9 * float(np.max(np.abs(zdot))) if np.max(np.abs(zdot)) > 0 else 0.0
    signs = np.sign(zdot[np.abs(zdot) > floor])
    flips = int(np.count_nonzero(np.diff(signs) != 0)) if signs.size else 0

    return BvpDiagnostics(
        d=d,
        ddot=ddot,
        z=z,
        zdot=zdot,
        lift_off=lift,
        DM_estimate=dm,
        residual_sup=res,
        zdot_sign_changes=flips,
    )


def rescale_check(p, rho, eps):
    """ODE residual of the rescaled profile r_eps(R) = r(eps R)/eps.

    The equation is scale covariant, so the rescaled samples must pass the
    same defect measure; the contract is residual <= 10x the original.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"need 0 < eps < 1, got {eps}")
    keep = p.grid <= eps * (1 + 1e-12)
    grid = p.grid[keep] / eps
    scaled = RadialProfile(M=p.M, grid=grid, r=p.r[keep] / eps, dr=p.dr[keep])
    return residual_sup(scaled, rho)


def z_interval_bound_check(p, diag, tol=1e-8, slack=1e-6):
    """Where z' >= 0 near the origin and r > tol, verify

        M^2 - M sqrt(M^2-1) <= R r'/r <= M^2 + M sqrt(M^2-1)

    pointwise (within slack).  Only meaningful for M >= 2.
    """
    M = p.M
    if M < 2:
        raise ValueError("bounds apply to M >= 2")
    lo = M * M - M * math.sqrt(M * M - 1.0)
    hi = M * M + M * math.sqrt(M * M - 1.0)
    mask = (diag.zdot >= -tol) & (p.r > tol)
    # restrict to the initial interval: up to the first index where z' < 0
    neg = np.nonzero(diag.zdot < -tol)[0]
    if neg.size:
        mask[neg[0]:] = False
    if not np.any(mask):
        return True
    ratio = p.grid[mask] * p.dr[mask] / p.r[mask]
    return bool(np.all(ratio >= lo - slack) and np.all(ratio <= hi + slack))


@dataclass
class DelayedCandidate:
    delta: float
    junction_slope: float  # r'(delta+); 0 would mean a smooth junction
    profile: RadialProfile


def delayed_extension(M, rho, deltas, opts=None):
    """Trivial-extension construction: r = 0 on [0, delta], then shoot the
    regular problem on [delta, 1] in the initial slope to meet r(1) = 1.

    One candidate per delta that brackets; the junction slope is reported,
    not assumed zero (whether a smooth delayed solution exists at some
    unique delta is surfaced to the caller).
    """
    opts = opts or SolveOptions()
    out = []
    for delta in deltas:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")

        def endpoint(v0):
            try:
                r, _ = _integrate(M, rho, delta, 0.0, v0, [1.0], opts.rtol, s_label=v0)
                return float(r[0])
            except DivergedError:
                return math.inf

        v_lo, v_hi = 0.0, 1.0
        val = endpoint(v_hi)
        bracketed = True
        while val < 1.0:
            v_lo, v_hi = v_hi, 2.0 * v_hi
            if v_hi > opts.s_max:
                bracketed = False
                break
            val = endpoint(v_hi)
        if not bracketed:
            continue
        while v_hi - v_lo > opts.s_tol:
            mid = 0.5 * (v_lo + v_hi)
            if endpoint(mid) < 1.0:
                v_lo = mid
            else:
                v_hi = mid
        v0 = 0.5 * (v_lo + v_hi)
        n_tail = max(16, int(opts.n_out * (1.0 - delta)))
        tail = np.linspace(delta, 1.0, n_tail)
        r, dr = _integrate(M, rho, delta, 0.0, v0, tail, opts.rtol, s_label=v0)
        head = _geometric_grid(opts.eps0, max(8, opts.n_out - n_tail))
        head = head[head < delta]
        grid = np.concatenate([head, tail])
        rr = np.concatenate([np.zeros_like(head), r])
        vv = np.concatenate([np.zeros_like(head), dr])
        prof = RadialProfile(M=M, grid=grid, r=rr, dr=vv)
        out.append(DelayedCandidate(delta=delta, junction_slope=v0, profile=prof))
    return out
