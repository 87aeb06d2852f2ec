import math

import numpy as np
import pytest

from polyelast.energy import radial_energy
from polyelast.radial_bvp import (
    DivergedError,
    RadialProfile,
    classify_liftoff,
    ddot_closed_form,
    delayed_extension,
    diagnostics,
    ode_rhs,
    rescale_check,
    residual_sup,
    shoot,
    solve_bvp,
    z_interval_bound_check,
    _shoot_endpoint,
)
from polyelast.rho import build_rho


def geom(n=512, eps0=1e-6):
    g = np.exp(np.linspace(math.log(eps0), 0.0, n))
    g[-1] = 1.0
    return g


# ---------------------------------------------------------------- ddot

def test_ddot_zero_profile():
    rho = build_rho(1.0)
    assert ddot_closed_form(0.5, 0.0, 0.0, 2, rho) == 0.0


def test_ddot_identity_m1():
    rho = build_rho(1.0)
    assert ddot_closed_form(0.3, 0.3, 1.0, 1, rho) == 0.0


def test_ddot_square_profile_affine_tail():
    # d = 4R^2 >= s0 on the sampled radii, so rho'' = 0 and
    # ddot = 2[(2R^2-R^2)^2 + 3R^4]/R^3 = 8R
    rho = build_rho(1.0, s0=0.01)
    for R in (0.2, 0.5, 0.9):
        got = ddot_closed_form(R, R * R, 2 * R, 2, rho)
        assert got == pytest.approx(8 * R, rel=1e-14)


def test_ddot_matches_finite_differences_of_d(solve):
    rho, prof, _ = solve(2, 1.0, n_out=256)
    fine = shoot(2, rho, prof.s_seed, n_steps=16384)
    d = 2 * fine.r * fine.dr / fine.grid
    dd = ddot_closed_form(fine.grid, fine.r, fine.dr, 2, rho)
    fd = np.gradient(d, fine.grid)
    mask = np.abs(dd) > 1e-3
    mask[:2] = mask[-2:] = False  # one-sided endpoint stencils
    # rho'' is only C0 at the bridge ends; d' kinks there and central
    # differences cannot see the one-sided slopes
    mask &= np.abs(d - rho.s0) > 0.05
    mask &= np.abs(d - rho.delay) > 0.05
    rel = np.max(np.abs(fd[mask] - dd[mask]) / np.abs(dd[mask]))
    assert rel < 1e-5


def test_ddot_nonnegative_random():
    rho = build_rho(2.0, 1.0, 0.3)
    rng = np.random.default_rng(9)
    R = rng.uniform(0.01, 1.0, 2000)
    r = rng.uniform(0.0, 2.0, 2000)
    dr = rng.uniform(-3.0, 3.0, 2000)
    for M in (1, 2, 3):
        assert np.min(ddot_closed_form(R, r, dr, M, rho)) >= 0.0


# ---------------------------------------------------------------- ode_rhs

def test_ode_rhs_linear_solution():
    rho = build_rho(1.0)
    for R in (0.1, 0.5, 1.0):
        assert ode_rhs(R, (R, 1.0), 1, rho) == pytest.approx(0.0, abs=1e-14)


def test_ode_rhs_reciprocal_solution():
    # r = 1/R is the second kernel element for M = 1
    rho = build_rho(1.0)
    for R in (0.4, 0.8):
        got = ode_rhs(R, (1.0 / R, -1.0 / R**2), 1, rho)
        assert got == pytest.approx(2.0 / R**3, rel=1e-12)


def test_ode_rhs_kernel_power_law():
    # affine tail active: L r = 0 has kernel R^M, here M = 2, r = R^2
    rho = build_rho(1.0, s0=0.01)
    R = 0.5
    got = ode_rhs(R, (R * R, 2 * R), 2, rho)
    assert got == pytest.approx(2.0, rel=1e-12)


# ---------------------------------------------------------------- shoot

def test_shoot_preserves_exact_solution():
    rho = build_rho(1.0)
    p = shoot(1, rho, 1.0)
    assert np.max(np.abs(p.r - p.grid)) < 1e-8


def test_shoot_zero_seed():
    rho = build_rho(1.0)
    p = shoot(1, rho, 0.0)
    assert np.all(p.r == 0.0) and np.all(p.dr == 0.0)


def test_shoot_against_independent_integrator(rk4_oracle):
    rho = build_rho(1.0, 1.0, 0.0)
    p = shoot(2, rho, 1.0)
    r1, _ = rk4_oracle(2, rho, 1.0)
    assert abs(p.r[-1] - r1) < 1e-6


def test_shoot_divergence_reported():
    rho = build_rho(1.0)
    with pytest.raises(DivergedError):
        shoot(2, rho, 1e12)


def test_shoot_validates_args():
    rho = build_rho(1.0)
    with pytest.raises(ValueError):
        shoot(0, rho, 1.0)
    with pytest.raises(ValueError):
        shoot(1, rho, -1.0)
    with pytest.raises(ValueError):
        shoot(1, rho, 1.0, eps0=2.0)


# ---------------------------------------------------------------- solve_bvp

def test_solve_m1_ground_truth(solve):
    rho, prof, diag = solve(1, 1.0)
    assert np.max(np.abs(prof.r - prof.grid)) < 1e-6
    energy = radial_energy(prof, rho).total
    assert energy == pytest.approx(math.pi * 1.5, rel=1e-8)
    assert diag.residual_sup < 1e-6


def test_solve_m1_unique_bracketed_root():
    rho = build_rho(1.0)
    vals = np.array([_shoot_endpoint(1, rho, s, 1e-6, 1e-9) - 1.0 for s in np.linspace(0.0, 10.0, 41)])
    signs = np.sign(vals[vals != 0.0])
    assert np.count_nonzero(np.diff(signs) != 0) == 1


def test_solve_m2_agrees_with_direct_minimizer(solve):
    from polyelast.direct_min import MinimizeOptions, minimize

    rho, prof, _ = solve(2, 0.5)
    mp, _ = minimize(2, rho, MinimizeOptions(init="identity"))
    sup = np.max(np.abs(np.interp(mp.grid, prof.grid, prof.r) - mp.r))
    assert sup < 1e-3


def test_solve_rejects_bad_m():
    with pytest.raises(ValueError):
        solve_bvp(0, build_rho(1.0))


# ------------------------------------------------- delayed-rho structure

def test_delayed_rho_power_law_segment(solve):
    rho, prof, diag = solve(2, 1.0, delay=0.5)
    assert diag.lift_off.delayed
    delta = diag.lift_off.delta
    a = prof.r[np.searchsorted(prof.grid, delta)]
    mask = prof.grid <= delta * (1 - 1e-12)
    fit = a * (prof.grid[mask] / delta) ** 2
    assert np.max(np.abs(prof.r[mask] / fit - 1.0)) < 1e-4
    # C1 junction: r'(delta) against the power-law slope M a / delta
    i = np.searchsorted(prof.grid, delta)
    assert abs(prof.dr[i] - 2 * a / delta) < 1e-5


def test_delayed_rho_junction_at_d_crossing(solve):
    rho, prof, diag = solve(3, 0.5, delay=0.5)
    d = 3 * prof.r * prof.dr / prof.grid
    delta = diag.lift_off.delta
    i = np.searchsorted(prof.grid, delta)
    assert d[i] <= rho.delay + 1e-8
    if i + 1 < len(d):
        assert d[i + 1] > rho.delay - 1e-8


# ---------------------------------------------------------------- diagnostics

CONFIGS = [(M, g, d) for M in (2, 3) for g in (0.25, 0.5, 2.0) for d in (0.0, 0.5)]


@pytest.mark.parametrize("M,gamma,delay", CONFIGS)
def test_solution_invariants(solve, M, gamma, delay):
    rho, prof, diag = solve(M, gamma, delay=delay)
    assert diag.residual_sup < 1e-6
    assert np.min(prof.r) >= -1e-10
    assert np.min(prof.dr) >= -1e-8
    assert np.min(diag.d) >= -1e-8
    assert np.min(diag.ddot) >= -1e-8
    assert diag.d[0] <= 1e-4
    assert diag.zdot_sign_changes <= 1
    if not diag.lift_off.delayed:
        assert abs(diag.DM_estimate - M) <= 0.05 * M


def test_diagnostics_identity_profile():
    rho = build_rho(1.0)
    g = geom()
    p = RadialProfile(M=1, grid=g, r=g.copy(), dr=np.ones_like(g))
    diag = diagnostics(p, rho)
    assert np.max(np.abs(diag.d - 1.0)) < 1e-14
    assert np.max(np.abs(diag.ddot)) < 1e-12
    from polyelast.rho import f_aux
    assert np.max(np.abs(diag.z - (1.0 + f_aux(rho, 1.0)))) < 1e-14
    assert diag.DM_estimate == pytest.approx(1.0)
    assert not diag.lift_off.delayed


def test_energy_monotone_under_perturbations(solve):
    rho, prof, _ = solve(2, 0.5)
    base = radial_energy(prof, rho).total
    rng = np.random.default_rng(17)
    g = prof.grid
    for _ in range(100):
        c = rng.uniform(0.2, 0.8)
        w = rng.uniform(0.05, 0.2)
        amp = rng.uniform(-0.05, 0.05)
        bump = amp * np.exp(-((g - c) ** 2) / (2 * w * w)) * (1 - g)
        q = RadialProfile(
            M=2, grid=g, r=np.maximum(prof.r + bump, 0.0),
            dr=prof.dr + np.gradient(bump, g),
        )
        q.r[-1] = 1.0
        assert radial_energy(q, rho).total >= base - 1e-6


# ---------------------------------------------------------------- classify

def test_classify_identity_immediate():
    g = geom()
    p = RadialProfile(M=1, grid=g, r=g.copy(), dr=np.ones_like(g))
    assert not classify_liftoff(p).delayed


def test_classify_flat_then_rising():
    g = geom()
    r = np.where(g <= 0.5, 0.0, (g - 0.5) * 2.0)
    p = RadialProfile(M=2, grid=g, r=r, dr=np.gradient(r, g))
    lift = classify_liftoff(p)
    assert lift.delayed
    assert lift.delta == pytest.approx(0.5, abs=0.02)


def test_classify_power_law_layer_is_immediate():
    # r = R^M dips below any tolerance near 0; that thin layer is not a
    # delayed lift-off
    g = geom()
    p = RadialProfile(M=3, grid=g, r=g**3, dr=3 * g**2)
    assert not classify_liftoff(p).delayed


def test_classify_delayed_rho_consistent_with_power_fit(solve):
    rho, prof, diag = solve(2, 1.0, delay=0.5)
    lift = classify_liftoff(prof, rho=rho)
    assert lift.delayed
    # independent fit: last radius where the trajectory still matches the
    # kernel power law c R^M through the first positive samples
    c = prof.r[50] / prof.grid[50] ** 2
    dev = np.abs(prof.r / (c * prof.grid**2) - 1.0)
    i_break = np.argmax(dev > 1e-6)
    cell = prof.grid[min(i_break + 1, len(dev) - 1)] - prof.grid[i_break - 1]
    assert abs(prof.grid[i_break] - lift.delta) <= 2 * cell


# ---------------------------------------------------------------- rescale

def test_rescale_identity_profile():
    rho = build_rho(1.0)
    g = geom()
    p = RadialProfile(M=1, grid=g, r=g.copy(), dr=np.ones_like(g))
    assert rescale_check(p, rho, 0.5) < 1e-12


def test_rescale_solved_profile(solve):
    rho, prof, diag = solve(2, 1.0)
    res = rescale_check(prof, rho, 0.5)
    assert res < 1e-4
    assert res <= 10 * diag.residual_sup + 1e-12


def test_rescale_kernel_square_profile():
    # r = R^2 solves the ODE wherever rho'' = 0, and rescaling preserves it
    rho = build_rho(1.0, s0=1e-4)
    g = np.linspace(0.2, 1.0, 201)
    p = RadialProfile(M=2, grid=g, r=g**2, dr=2 * g)
    assert residual_sup(p, rho) < 1e-10
    assert rescale_check(p, rho, 0.5) < 1e-10


def test_rescale_validates_eps():
    rho = build_rho(1.0)
    g = geom(64)
    p = RadialProfile(M=1, grid=g, r=g.copy(), dr=np.ones_like(g))
    with pytest.raises(ValueError):
        rescale_check(p, rho, 1.5)


# ---------------------------------------------------------------- z bounds

def test_z_bounds_arithmetic_m2():
    lo = 4 - 2 * math.sqrt(3.0)
    hi = 4 + 2 * math.sqrt(3.0)
    assert lo == pytest.approx(0.5358983848622456)
    assert hi == pytest.approx(7.464101615137754)


def test_z_bounds_kernel_profile_inside():
    rho = build_rho(1.0, s0=1e-4)
    g = np.linspace(0.2, 1.0, 201)
    for M in (2, 3):
        p = RadialProfile(M=M, grid=g, r=g**M, dr=M * g ** (M - 1))
        diag = diagnostics(p, rho)
        assert z_interval_bound_check(p, diag)
        assert M * M - M * math.sqrt(M * M - 1) <= M <= M * M + M * math.sqrt(M * M - 1)


def test_z_bounds_solved_m3(solve):
    rho, prof, diag = solve(3, 1.0)
    assert z_interval_bound_check(prof, diag)


def test_z_bounds_reject_m1():
    rho = build_rho(1.0)
    g = geom(64)
    p = RadialProfile(M=1, grid=g, r=g.copy(), dr=np.ones_like(g))
    with pytest.raises(ValueError):
        z_interval_bound_check(p, diagnostics(p, rho))


# ---------------------------------------------------------------- delayed extension

def test_delayed_extension_candidates():
    rho = build_rho(1.0)
    cands = delayed_extension(2, rho, [0.3, 0.5])
    assert len(cands) == 2
    for c in cands:
        assert c.profile.r[-1] == pytest.approx(1.0, abs=1e-9)
        assert c.junction_slope > 0.0  # nonsmooth junction, surfaced not hidden
        tail = c.profile.grid >= c.delta
        tail_prof = RadialProfile(
            M=2, grid=c.profile.grid[tail], r=c.profile.r[tail], dr=c.profile.dr[tail]
        )
        assert residual_sup(tail_prof, rho) < 1e-6
