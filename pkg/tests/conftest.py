"""Shared fixtures and independent numerical oracles.

The fixed-step RK4 integrator below re-solves the radial ODE in log-radius
coordinates; it shares no code with the adaptive solver under test and is
used as the second route wherever the suite cross-checks trajectories.
"""

import math

import pytest

from polyelast.rho import build_rho
from polyelast.radial_bvp import SolveOptions, solve_bvp


def rk4_log_oracle(M, rho, s, eps0=1e-6, n_steps=40000):
    """Integrate the radial ODE with fixed-step RK4 in t = ln R.

    Returns (r(1), r'(1)).  dy/dt = R f(R, y) with R = e^t.
    """
    ddrho = rho.ddrho_scalar
    M2 = M * M

    def f(t, y):
        R = math.exp(t)
        r, v = y
        d = M * r * v / R
        dd = ddrho(d)
        num = M * ((R * v - r) ** 2 + (M2 - 1.0) * r * r)
        den = R**3 + M2 * dd * r * r * R
        ddot = num / den
        acc = (M2 * r / R - v - M * dd * ddot * r) / R
        return (R * v, R * acc)

    t = math.log(eps0)
    h = -t / n_steps
    y = (s * eps0**M, s * M * eps0 ** (M - 1))
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, (y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]))
        k3 = f(t + 0.5 * h, (y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]))
        k4 = f(t + h, (y[0] + h * k3[0], y[1] + h * k3[1]))
        y = (
            y[0] + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0,
            y[1] + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0,
        )
        t += h
    return y


_SOLVE_CACHE = {}


def cached_solve(M, gamma, delay=0.0, s0=1.0, **kw):
    """Memoized solve_bvp across the suite; solves are deterministic."""
    key = (M, gamma, delay, s0, tuple(sorted(kw.items())))
    if key not in _SOLVE_CACHE:
        rho = build_rho(gamma, s0, delay)
        _SOLVE_CACHE[key] = (rho,) + solve_bvp(M, rho, SolveOptions(**kw))
    return _SOLVE_CACHE[key]


@pytest.fixture(scope="session")
def solve():
    return cached_solve


@pytest.fixture(scope="session")
def rk4_oracle():
    return rk4_log_oracle
