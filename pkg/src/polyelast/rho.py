"""The volumetric penalty: zero on the negatives, a convex C^2 bridge on
[delay, s0], and an affine tail gamma*s + kappa beyond s0.

The bridge is defined through its second derivative, a scaled quartic bump
rho''(s) = (30*gamma/h) * t^2 (1-t)^2 with t = (s - delay)/h, h = s0 - delay,
so convexity and C^2 junctions hold by construction.  Integrating twice gives

    rho'(s) = gamma * (10 t^3 - 15 t^4 + 6 t^5)
    rho(s)  = gamma * h * (2.5 t^4 - 3 t^5 + t^6)

and matching the affine tail fixes kappa = -gamma*(s0 + delay)/2.  kappa is
always derived, never user-supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["RhoSpec", "build_rho", "rho_eval", "f_aux", "rho_from_json", "rho_to_json"]


@dataclass(frozen=True)
class RhoSpec:
    gamma: float  # slope of the affine tail
    s0: float     # knee where the tail starts
    delay: float  # lift-off point; rho == 0 on (-inf, delay]
    kappa: float  # derived affine offset

    def eval(self, s):
        """Vectorized (rho, rho', rho'') at s; see rho_eval."""
        return rho_eval(self, s)

    def eval_scalar(self, s):
        """Scalar (rho, rho', rho'') on plain floats; hot path for ODE solves."""
        if s <= self.delay:
            return 0.0, 0.0, 0.0
        if s >= self.s0:
            return self.gamma * s + self.kappa, self.gamma, 0.0
        h = self.s0 - self.delay
        t = (s - self.delay) / h
        t2 = t * t
        omt = 1.0 - t
        g = self.gamma
        rho = g * h * t2 * t2 * (2.5 - 3.0 * t + t2)
        drho = g * t2 * t * (10.0 - 15.0 * t + 6.0 * t2)
        ddrho = (30.0 * g / h) * t2 * omt * omt
        return rho, drho, ddrho

    def ddrho_scalar(self, s):
        """rho''(s) alone, on plain floats."""
        if s <= self.delay or s >= self.s0:
            return 0.0
        h = self.s0 - self.delay
        t = (s - self.delay) / h
        omt = 1.0 - t
        return (30.0 * self.gamma / h) * t * t * omt * omt

    def drho_scalar(self, s):
        if s <= self.delay:
            return 0.0
        if s >= self.s0:
            return self.gamma
        t = (s - self.delay) / (self.s0 - self.delay)
        return self.gamma * t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def build_rho(gamma, s0=1.0, delay=0.0):
    """Construct a RhoSpec with the quintic-by-second-derivative bridge.

    Parameters
    ----------
    gamma : float
        Tail slope, must be > 0.
    s0 : float
        Knee where the affine tail starts.
    delay : float
        Lift-off point in [0, s0); 0 means immediate lift-off.
    """
    gamma = float(gamma)
    s0 = float(s0)
    delay = float(delay)
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if not 0.0 <= delay < s0:
        raise ValueError(f"need 0 <= delay < s0, got delay={delay}, s0={s0}")
    kappa = -gamma * (s0 + delay) / 2.0
    return RhoSpec(gamma=gamma, s0=s0, delay=delay, kappa=kappa)


def rho_eval(spec, s):
    """Piecewise evaluation of (rho, rho', rho'') at s (array or scalar).

    rho' lies in [0, gamma] and rho'' >= 0 everywhere.
    """
    s = np.asarray(s, dtype=float)
    g, s0, delay, kappa = spec.gamma, spec.s0, spec.delay, spec.kappa
    h = s0 - delay
    t = np.clip((s - delay) / h, 0.0, 1.0)
    t2 = t * t
    omt = 1.0 - t

    rho = np.where(
        s >= s0,
        g * s + kappa,
        g * h * t2 * t2 * (2.5 - 3.0 * t + t2),
    )
    drho = np.where(s >= s0, g, g * t2 * t * (10.0 - 15.0 * t + 6.0 * t2))
    ddrho = np.where(s >= s0, 0.0, (30.0 * g / h) * t2 * omt * omt)
    if rho.ndim == 0:
        return float(rho), float(drho), float(ddrho)
    return rho, drho, ddrho


def rho_only(spec, s):
    """Just rho(s), vectorized; lean path for energy quadrature."""
    s = np.asarray(s, dtype=float)
    g, s0, delay, kappa = spec.gamma, spec.s0, spec.delay, spec.kappa
    h = s0 - delay
    t = np.clip((s - delay) / h, 0.0, 1.0)
    t2 = t * t
    return np.where(s >= s0, g * s + kappa, g * h * t2 * t2 * (2.5 - 3.0 * t + t2))


def drho_only(spec, s):
    """Just rho'(s), vectorized; lean path for gradients."""
    s = np.asarray(s, dtype=float)
    g, s0, delay = spec.gamma, spec.s0, spec.delay
    t = np.clip((s - delay) / (s0 - delay), 0.0, 1.0)
    t2 = t * t
    return np.where(s >= s0, g, g * t2 * t * (10.0 - 15.0 * t + 6.0 * t2))


def f_aux(spec, d):
    """f(d) = d rho'(d) - rho(d), the auxiliary integrand of the z field.

    Nonnegative for d >= 0, nondecreasing, and equal to -kappa on the tail.
    """
    d = np.asarray(d, dtype=float)
    rho, drho, _ = rho_eval(spec, d)
    out = d * drho - rho
    if out.ndim == 0:
        return float(out)
    return out


def rho_to_json(spec):
    """Serialize to the {"gamma", "s0", "delay"} wire format plus derived kappa."""
    return {"gamma": spec.gamma, "s0": spec.s0, "delay": spec.delay, "kappa": spec.kappa}


def rho_from_json(obj):
    """Build a RhoSpec from a JSON object or string with gamma/s0/delay keys."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    return build_rho(obj["gamma"], obj.get("s0", 1.0), obj.get("delay", 0.0))
