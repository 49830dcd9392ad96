"""Scalar diagnostics over recorded runs: widths, echo detection, storage
efficiency, classical fidelity, the EIT retrieval baseline, delay-bandwidth
product, and experimental feasibility estimates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .solver import FieldRecord

__all__ = [
    "AmbiguousPeakError",
    "UndefinedMetricError",
    "EchoMetrics",
    "EchoDetection",
    "fwhm",
    "detect_echo",
    "storage_efficiency",
    "classical_fidelity",
    "overlap_amplitude",
    "eit_baseline",
    "EitBaseline",
    "feasibility",
    "FeasibilityReport",
    "delay_bandwidth",
    "compute_echo_metrics",
]

NO_ECHO_FLOOR = 1e-10  # relative to the input intensity peak
NOISE_FLOOR = 1e-12    # relative to the trace maximum, for width search


class AmbiguousPeakError(ValueError):
    """Trace has competing peaks; a single width is not meaningful."""


class UndefinedMetricError(ValueError):
    """Metric undefined for this input (zero energy, no echo, ...)."""


def fwhm(times: np.ndarray, intensity: np.ndarray) -> float:
    """Full width at half maximum by linear interpolation between samples.

    The global maximum must dominate: a secondary sample above 80% of the
    peak outside the main lobe raises AmbiguousPeakError.  A peak sitting on
    a window edge uses the edge as that side's crossing.  A reported "half
    duration" corresponds to half this value.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if t.shape != y.shape or t.size < 3:
        raise ValueError("times and intensity must be equal-length, size >= 3")
    i = int(np.argmax(y))
    peak = y[i]
    if peak <= 0:
        raise UndefinedMetricError("trace has no positive maximum")
    half = peak / 2.0

    # left crossing
    below = np.nonzero(y[: i + 1] < half)[0]
    if below.size:
        il = below[-1]
        tl = t[il] + (t[il + 1] - t[il]) * (half - y[il]) / (y[il + 1] - y[il])
        left_edge = il
    else:
        tl = t[0]
        left_edge = 0
    # right crossing
    below = np.nonzero(y[i:] < half)[0]
    if below.size:
        ir = i + below[0]
        tr = t[ir - 1] + (t[ir] - t[ir - 1]) * (half - y[ir - 1]) / (y[ir] - y[ir - 1])
        right_edge = ir
    else:
        tr = t[-1]
        right_edge = t.size - 1

    outside = np.concatenate([y[:left_edge], y[right_edge + 1:]])
    significant = outside[outside > NOISE_FLOOR * peak]
    if significant.size and np.max(significant) > 0.8 * peak:
        raise AmbiguousPeakError(
            f"secondary peak at {np.max(significant) / peak:.2f} of max outside "
            f"the main lobe; width is ambiguous")
    return float(tr - tl)


class EchoDetection(NamedTuple):
    peak_time: float
    peak_value: float


def detect_echo(record: FieldRecord, after: float,
                before: Optional[float] = None) -> Optional[EchoDetection]:
    """Argmax of |probe_out|^2 on t in (after, before], sub-sample refined.

    Returns None when nothing rises above 1e-10 of the input intensity peak
    (no echo is a result, not an error).
    """
    t = record.times
    if after >= t[-1]:
        raise ValueError("'after' lies beyond the recorded window")
    m = t > after
    if before is not None:
        m &= t <= before
    if not np.any(m):
        raise ValueError("empty detection window")
    y = np.abs(record.probe_out) ** 2
    input_peak = float(np.max(np.abs(record.probe_in) ** 2))
    tw, yw = t[m], y[m]
    i = int(np.argmax(yw))
    if yw[i] <= NO_ECHO_FLOOR * input_peak:
        return None
    if 0 < i < yw.size - 1:
        # parabolic refinement through the three samples around the max
        y0, y1, y2 = yw[i - 1], yw[i], yw[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            delta = 0.5 * (y0 - y2) / denom
            delta = float(np.clip(delta, -0.5, 0.5))
            tpk = tw[i] + delta * (tw[min(i + 1, yw.size - 1)] - tw[i - 1]) / 2.0
            vpk = y1 - 0.25 * (y0 - y2) * delta
            return EchoDetection(float(tpk), float(vpk))
    return EchoDetection(float(tw[i]), float(yw[i]))


def storage_efficiency(record: FieldRecord, t_cut: float) -> float:
    """Transmitted intensity integral for t > t_cut over total input integral.

    Trapezoidal quadrature on the recorded grid; the upper limit is the end
    of the recorded window (truncation of the nominal infinite integral).
    """
    t = record.times
    if not t[0] <= t_cut <= t[-1]:
        raise ValueError("t_cut outside the recorded window")
    iin = np.abs(record.probe_in) ** 2
    iout = np.abs(record.probe_out) ** 2
    den = float(np.trapezoid(iin, t))
    if den <= 0:
        raise UndefinedMetricError("input trace carries no energy")
    num = float(np.trapezoid(np.where(t >= t_cut, iout, 0.0), t))
    return num / den


def _uniform(t: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    dt = float(np.min(np.diff(t)))
    n = int(round((t[-1] - t[0]) / dt)) + 1
    tu = t[0] + dt * np.arange(n)
    yu = np.interp(tu, t, y.real) + 1j * np.interp(tu, t, y.imag)
    return dt, yu


def classical_fidelity(t_in: np.ndarray, in_trace: np.ndarray,
                       t_out: np.ndarray, out_trace: np.ndarray,
                       delay_range: Optional[tuple[float, float]] = None) -> float:
    """Delay-optimized normalized cross-correlation squared,

        max over tau_d of |int out*(t) in(t - tau_d) dt|^2
                        / (int |in|^2 dt * int |out|^2 dt),

    a value in [0, 1], invariant under global phase, amplitude scaling and
    (within the searched range) time translation of either trace.
    """
    t_in = np.asarray(t_in, float)
    t_out = np.asarray(t_out, float)
    a = np.asarray(in_trace, complex)
    b = np.asarray(out_trace, complex)
    ea = float(np.trapezoid(np.abs(a) ** 2, t_in))
    eb = float(np.trapezoid(np.abs(b) ** 2, t_out))
    if ea <= 0 or eb <= 0:
        raise UndefinedMetricError("fidelity needs two traces with energy")
    dt = min(float(np.min(np.diff(t_in))), float(np.min(np.diff(t_out))))
    na = int(round((t_in[-1] - t_in[0]) / dt)) + 1
    nb = int(round((t_out[-1] - t_out[0]) / dt)) + 1
    ta = t_in[0] + dt * np.arange(na)
    tb = t_out[0] + dt * np.arange(nb)
    au = np.interp(ta, t_in, a.real) + 1j * np.interp(ta, t_in, a.imag)
    bu = np.interp(tb, t_out, b.real) + 1j * np.interp(tb, t_out, b.imag)
    corr = np.correlate(np.conj(bu), np.conj(au), mode="full") * dt
    # delay of in relative to out for lag index k: tb[0] - ta[0] + (k - (na-1))*dt
    lags = (tb[0] - ta[0]) + dt * (np.arange(corr.size) - (na - 1))
    if delay_range is not None:
        sel = (lags >= delay_range[0]) & (lags <= delay_range[1])
        if not np.any(sel):
            raise ValueError("delay_range excludes every available lag")
        corr = corr[sel]
    eau = float(np.sum(np.abs(au) ** 2) * dt)
    ebu = float(np.sum(np.abs(bu) ** 2) * dt)
    val = float(np.max(np.abs(corr) ** 2) / (eau * ebu))
    return min(val, 1.0)


def overlap_amplitude(t_in, in_trace, t_out, out_trace) -> float:
    """Unnormalized companion to classical_fidelity:
    max over delay of |int out* in|^2 / (int |in|^2)^2, sensitive to
    amplitude mismatch between the traces."""
    t_in = np.asarray(t_in, float)
    t_out = np.asarray(t_out, float)
    a = np.asarray(in_trace, complex)
    b = np.asarray(out_trace, complex)
    ea = float(np.trapezoid(np.abs(a) ** 2, t_in))
    if ea <= 0:
        raise UndefinedMetricError("input trace carries no energy")
    dt = min(float(np.min(np.diff(t_in))), float(np.min(np.diff(t_out))))
    na = int(round((t_in[-1] - t_in[0]) / dt)) + 1
    nb = int(round((t_out[-1] - t_out[0]) / dt)) + 1
    ta = t_in[0] + dt * np.arange(na)
    tb = t_out[0] + dt * np.arange(nb)
    au = np.interp(ta, t_in, a.real) + 1j * np.interp(ta, t_in, a.imag)
    bu = np.interp(tb, t_out, b.real) + 1j * np.interp(tb, t_out, b.imag)
    corr = np.correlate(np.conj(bu), np.conj(au), mode="full") * dt
    eau = float(np.sum(np.abs(au) ** 2) * dt)
    return float(np.max(np.abs(corr) ** 2) / eau**2)


class EitBaseline(NamedTuple):
    value: float
    flagged: bool  # True when xi <= 2.9 and the formula has no meaning


def eit_baseline(xi: float) -> EitBaseline:
    """Optimal EIT retrieval efficiency 1 - 2.9/xi; 0 (flagged) for xi <= 2.9."""
    if xi <= 2.9:
        return EitBaseline(0.0, True)
    return EitBaseline(1.0 - 2.9 / xi, False)


@dataclass(frozen=True)
class FeasibilityReport:
    geometry: str
    b: float
    length_cm: float
    wavelength_nm: float
    lifetime_s: float
    intensity_w_cm2: float
    rayleigh_um: Optional[float] = None
    power_w: Optional[float] = None
    spot_um2: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def feasibility(b: float, length_cm: float, wavelength_nm: float,
                geometry: str = "gaussian",
                lifetime_s: float = 5e-9) -> FeasibilityReport:
    """Laboratory-scale estimates for a control field with focal Rabi
    frequency b/tau.

    Gaussian geometry: Rayleigh length r from b/sqrt(1 + (L/r)^2) = 1 and cw
    power K = (1/2) * I * lambda * r with the dipole-based intensity estimate
    I = 1e-17 (b/tau)^2 W/cm^2.  Perpendicular geometry: focus spot area
    pi L^2 / ln(b).  The default lifetime reproduces the quoted 0.08 W
    example at b = 1000, L = 5 cm, lambda = 780 nm; pass the actual excited
    state lifetime (e.g. 26.2e-9 for the Rb D2 line) for a specific atom.
    """
    if b <= 1:
        raise ValueError("b must exceed 1: the gradient needs the Rabi "
                         "frequency to fall to 1/tau inside the medium")
    intensity = 1e-17 * (b / lifetime_s) ** 2  # W/cm^2
    if geometry == "gaussian":
        r_cm = length_cm / math.sqrt(b * b - 1.0)
        lam_cm = wavelength_nm * 1e-7
        power = 0.5 * intensity * lam_cm * r_cm
        return FeasibilityReport(geometry=geometry, b=b, length_cm=length_cm,
                                 wavelength_nm=wavelength_nm,
                                 lifetime_s=lifetime_s,
                                 intensity_w_cm2=intensity,
                                 rayleigh_um=r_cm * 1e4, power_w=power)
    if geometry == "perpendicular":
        spot_cm2 = math.pi * length_cm**2 / math.log(b)
        return FeasibilityReport(geometry=geometry, b=b, length_cm=length_cm,
                                 wavelength_nm=wavelength_nm,
                                 lifetime_s=lifetime_s,
                                 intensity_w_cm2=intensity,
                                 spot_um2=spot_cm2 * 1e8)
    raise ValueError(f"unknown geometry {geometry!r}")


@dataclass(frozen=True)
class EchoMetrics:
    """Per-run scalar summary; efficiency and fidelity live in [0, 1]."""

    echo_peak_time: float
    echo_fwhm: float
    efficiency_R: float
    fidelity: float
    delay_bandwidth: float
    echo_peak_value: float = math.nan
    input_peak_time: float = math.nan
    input_fwhm: float = math.nan
    overlap_fidelity: float = math.nan
    truncation_time: float = math.nan

    def __post_init__(self) -> None:
        for name in ("echo_peak_time", "echo_fwhm", "efficiency_R",
                     "fidelity", "delay_bandwidth"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.efficiency_R <= 1.0:
            raise ValueError("efficiency_R outside [0, 1]")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity outside [0, 1]")

    def as_dict(self) -> dict:
        return asdict(self)


def delay_bandwidth(echo_peak_time: float, input_peak_time: float,
                    echo_fwhm: float) -> float:
    """Echo formation delay over echo duration (dimensionless)."""
    if echo_fwhm <= 0:
        raise UndefinedMetricError("echo width must be positive")
    return (echo_peak_time - input_peak_time) / echo_fwhm


def compute_echo_metrics(record: FieldRecord, after: float, t_cut: float,
                         before: Optional[float] = None) -> EchoMetrics:
    """Bundle the standard per-run diagnostics for a flip protocol.

    ``after`` restricts echo detection (usually the last flip time); ``t_cut``
    is the storage-efficiency lower integration limit.
    """
    det = detect_echo(record, after, before)
    if det is None:
        raise UndefinedMetricError("no echo above the detection floor")
    t = record.times
    iout = np.abs(record.probe_out) ** 2
    iin = np.abs(record.probe_in) ** 2
    m = t > after
    if before is not None:
        m &= t <= before
    echo_fwhm = fwhm(t[m], iout[m])
    input_fwhm = fwhm(t, iin)
    input_peak_time = float(t[np.argmax(iin)])
    eff = storage_efficiency(record, t_cut)
    fid = classical_fidelity(t, record.probe_in, t[m], record.probe_out[m])
    ovl = overlap_amplitude(t, record.probe_in, t[m], record.probe_out[m])
    dbp = delay_bandwidth(det.peak_time, input_peak_time, echo_fwhm)
    return EchoMetrics(echo_peak_time=det.peak_time, echo_fwhm=echo_fwhm,
                       efficiency_R=eff, fidelity=fid, delay_bandwidth=dbp,
                       echo_peak_value=det.peak_value,
                       input_peak_time=input_peak_time, input_fwhm=input_fwhm,
                       overlap_fidelity=ovl, truncation_time=float(t[-1]))
