"""Closed-form coherence/probe solutions for constant control, and the
phase-area machinery that generalizes their trigonometric factors to switched
control fields.

The closed forms describe the response to an impulsive probe at the z = 0
boundary.  Their amplitude convention: a regularized impulse of
time-integrated amplitude A corresponds to probe_amp = 4 A (see
``impulse_equivalent_amplitude``); with that mapping the forms agree with
the numerical dynamics in the broadband regime 1/width >> Omega_c >> Gamma,
converging as Omega_c/Gamma grows (measured: 8% relative L2 at Omega_c =
30 Gamma, 2.4% at 100 Gamma, 1.0% at 300 Gamma).  Well below Omega_c =
Gamma/2 the pair of dressed modes is overdamped and the trigonometric
factors no longer describe the dynamics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.special import j0, j1

from .model import ControlSchedule, ProbePulse, SpatialProfile

__all__ = [
    "AnalyticParams",
    "impulse_equivalent_amplitude",
    "rho31_closed",
    "rho21_closed",
    "probe_closed",
    "phase_area",
    "predict_echo_time",
    "first_order_signal",
]


@dataclass(frozen=True)
class AnalyticParams:
    """Constant-control closed-form parameters.

    eta_z is the product of the coupling constant eta and the observation
    depth z.  The delta part of the probe solution is flagged
    (``has_forward_delta``), never evaluated as a numeric spike.
    """

    omega_c: float
    eta_z: float
    gamma_decay: float = 1.0
    probe_amp: complex = 1.0

    has_forward_delta: bool = True


def impulse_equivalent_amplitude(probe: ProbePulse) -> complex:
    """probe_amp matching a regularized-delta boundary pulse.

    The closed forms carry an extra factor of 4 relative to a unit-area
    impulse response of the propagation equations; this returns
    4 * (time-integrated boundary amplitude).
    """
    return 4.0 * probe.area


def _envelope(p: AnalyticParams, T: np.ndarray) -> np.ndarray:
    return j0(np.sqrt(p.eta_z * T)) * np.exp(-p.gamma_decay * T / 4.0)


def rho31_closed(p: AnalyticParams, T):
    """i (probe_amp/8) J0(sqrt(eta_z T)) exp(-Gamma T/4) cos(Omega_c T/2)."""
    Tarr = np.asarray(T, dtype=float)
    if np.any(Tarr < 0):
        raise ValueError("T must be >= 0")
    out = 1j * (p.probe_amp / 8.0) * _envelope(p, Tarr) * np.cos(p.omega_c * Tarr / 2.0)
    return complex(out) if np.isscalar(T) else out


def rho21_closed(p: AnalyticParams, T):
    """-(probe_amp/8) J0(sqrt(eta_z T)) exp(-Gamma T/4) sin(Omega_c T/2)."""
    Tarr = np.asarray(T, dtype=float)
    if np.any(Tarr < 0):
        raise ValueError("T must be >= 0")
    out = -(p.probe_amp / 8.0) * _envelope(p, Tarr) * np.sin(p.omega_c * Tarr / 2.0)
    return complex(out) if np.isscalar(T) else out


def probe_closed(p: AnalyticParams, T):
    """Scattered tail of the transmitted probe, normalized by probe_amp:

        -(1/4) sqrt(eta_z/T) J1(sqrt(eta_z T)) exp(-Gamma T/4) cos(Omega_c T/2)

    The forward delta component is reported by ``p.has_forward_delta`` and in
    comparisons is represented by the incident regularized pulse itself.
    """
    Tarr = np.asarray(T, dtype=float)
    if np.any(Tarr <= 0):
        raise ValueError("T must be > 0: sqrt(eta_z/T) is singular at T = 0")
    u = np.sqrt(p.eta_z * Tarr)
    out = (-0.25 * np.sqrt(p.eta_z / Tarr) * j1(u)
           * np.exp(-p.gamma_decay * Tarr / 4.0) * np.cos(p.omega_c * Tarr / 2.0))
    return complex(out) if np.isscalar(T) else out


def _gain_integral(schedule: ControlSchedule, t0: float, t: float) -> float:
    """Exact integral of gain(t') over [t0, t], closed form on ramp pieces."""
    if t < t0:
        raise ValueError("t must be >= t0")
    total = 0.0
    segs = schedule.segments
    w = schedule.ramp_time
    bounds = [s[0] for s in segs] + [math.inf]
    for k, (tk, gk) in enumerate(segs):
        a = max(tk, t0)
        b = min(bounds[k + 1], t)
        if b <= a:
            continue
        if w > 0 and k > 0:
            g_prev = segs[k - 1][1]
            ramp_end = min(tk + w, bounds[k + 1])
            ra, rb = max(a, tk), min(b, ramp_end)
            if rb > ra:
                # integral of g_prev + (gk - g_prev)(1 - cos(pi x / w))/2 over [ra, rb]
                def F(x):
                    u = x - tk
                    return (g_prev * u
                            + (gk - g_prev) / 2.0 * (u - (w / math.pi) * math.sin(math.pi * u / w)))
                total += F(rb) - F(ra)
            if b > ramp_end:
                total += gk * (b - max(a, ramp_end))
        else:
            total += gk * (b - a)
    return total


def phase_area(schedule: ControlSchedule, profile: SpatialProfile,
               z: float, t0: float, t: float, length: float = 1.0) -> float:
    """Accumulated half phase (1/2) * integral of Omega_c(t', z) dt' over [t0, t]."""
    omega_z = float(profile.value(z, length))
    return 0.5 * omega_z * _gain_integral(schedule, t0, t)


def predict_echo_time(schedule: ControlSchedule, profile: SpatialProfile,
                      t0: float, t_end: float, z_ref: Optional[float] = None,
                      length: float = 1.0) -> Optional[float]:
    """Earliest zero crossing of the phase area after the last gain sign flip.

    Defaults z_ref to the profile maximum (echo emission is dominated by the
    highest-coherence region).  Returns None when the area never crosses zero
    before t_end.
    """
    last_flip = schedule.last_flip_time()
    if last_flip is None or last_flip >= t_end:
        return None
    z_ref = profile.focus(length) if z_ref is None else z_ref

    def area(t: float) -> float:
        return phase_area(schedule, profile, z_ref, t0, t, length)

    # breakpoints: segment starts and ramp ends after the flip, then t_end
    pts = [last_flip]
    for tk, _ in schedule.segments:
        for cand in (tk, tk + schedule.ramp_time if schedule.ramp_time > 0 else tk):
            if last_flip < cand < t_end:
                pts.append(cand)
    pts.append(t_end)
    pts = sorted(set(pts))
    eps = 1e-15 * max(1.0, t_end)
    for a, b in zip(pts, pts[1:]):
        fa, fb = area(a), area(b)
        if fa == 0.0 and a > last_flip:
            return a
        if fa * fb < 0:
            return float(brentq(area, a, b, xtol=eps))
        if fb == 0.0:
            return b
    return None


def first_order_signal(profile: SpatialProfile, T, nquad: int = 256,
                       length: float = 1.0):
    """|integral_0^L cos(Omega_c(z) T / 2) dz|^2 / L^2 by composite Simpson.

    First-order scattering estimate of the transmitted intensity envelope for
    a static control profile.
    """
    if nquad < 16:
        raise ValueError("nquad must be >= 16")
    n = nquad + (nquad % 2)  # Simpson needs an even interval count
    zs = np.linspace(0.0, length, n + 1)
    omega = np.asarray(profile.value(zs, length), dtype=float)
    Tarr = np.atleast_1d(np.asarray(T, dtype=float))
    vals = np.empty(Tarr.shape, dtype=float)
    for i, t in enumerate(Tarr):
        integ = simpson(np.cos(omega * t / 2.0), x=zs)
        vals[i] = (integ / length) ** 2
    return float(vals[0]) if np.isscalar(T) else vals
