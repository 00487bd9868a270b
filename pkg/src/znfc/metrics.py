"""Input pulses, echo detection, and efficiency / fidelity figures of merit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .medium import Waveform
from .nuclear import CombSpec

FOUR_LN2 = 4.0 * math.log(2.0)
CLIP_LEVEL = 1e-8
NOISE_FLOOR = 1e-12


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EchoReport:
    center: Optional[float]
    window: Optional[tuple]
    efficiency: float
    fidelity: float
    leaked: float

    @property
    def found(self) -> bool:
        return self.center is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = None if self.window is None else list(self.window)
        return d


def gaussian_input(fwhm: float, t_center: float = 0.0, grid=None) -> Waveform:
    """Unit-peak Gaussian whose *field* FWHM is ``fwhm``.

    ``grid`` is a ``(t_start, t_stop, dt)`` tuple or a Waveform whose grid is
    reused. Raises :class:`MetricError` if the pulse is not down to 1e-8 of
    its peak at both grid edges.
    """
    if not fwhm > 0:
        raise MetricError("fwhm must be positive")
    if grid is None:
        raise MetricError("a time grid is required")
    if isinstance(grid, Waveform):
        t0, dt, n = grid.t_start, grid.dt, grid.n_samples
        t = t0 + dt * np.arange(n)
    else:
        t0, t1, dt = grid
        n = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
        t = t0 + dt * np.arange(n)
    env = np.exp(-FOUR_LN2 * (t - t_center) ** 2 / fwhm**2)
    if env[0] > CLIP_LEVEL or env[-1] > CLIP_LEVEL:
        raise MetricError("pulse clipped by the time grid")
    return Waveform(t0, dt, env.astype(complex))


def pulse_halfspan(fwhm: float) -> float:
    """Distance from the peak at which the field drops to the clip level."""
    return fwhm * math.sqrt(math.log(1 / CLIP_LEVEL) / FOUR_LN2)


def matched_duration(comb: CombSpec) -> float:
    """Field FWHM 8 ln2 / ((N-1) dw + Gamma) whose spectrum spans the comb."""
    return 8 * math.log(2) / ((comb.tooth_count - 1) * comb.spacing + comb.linewidth)


def measured_fwhm(wf: Waveform) -> float:
    """Field FWHM from samples, linear interpolation at the half-maximum crossings."""
    a = np.abs(wf.samples)
    half = a.max() / 2
    above = np.nonzero(a >= half)[0]
    i0, i1 = above[0], above[-1]
    t = wf.times

    def cross(i_out, i_in):
        return t[i_out] + (half - a[i_out]) * (t[i_in] - t[i_out]) / (a[i_in] - a[i_out])

    left = cross(i0 - 1, i0) if i0 > 0 else t[0]
    right = cross(i1 + 1, i1) if i1 < a.size - 1 else t[-1]
    return float(right - left)


def _check_common(out: Waveform, inp: Waveform):
    if not out.same_grid(inp):
        raise MetricError("waveforms must share a time grid")


def efficiency(out: Waveform, inp: Waveform, window=None) -> float:
    """Output energy inside ``window`` over total input energy."""
    _check_common(out, inp)
    if window is not None:
        if not out.window_mask(window).any():
            raise MetricError("empty window")
    e_in = inp.energy()
    if e_in == 0:
        raise MetricError("input has zero energy")
    return out.energy(window) / e_in


def fidelity(out: Waveform, inp: Waveform, window=None) -> float:
    """Shape fidelity of the output inside ``window`` against the input.

    max over shifts s of |int conj(in(t-s)) out_w(t) dt|^2 / (E_in * E_out_w),
    with ``out_w`` the output restricted to the window and the shifted input
    peak constrained to lie inside it. Insensitive to amplitude and phase.
    """
    _check_common(out, inp)
    n, dt = inp.n_samples, inp.dt
    if window is None:
        window = (out.t_start, out.t_stop)
    mask = out.window_mask(window)
    ow = np.where(mask, out.samples, 0)
    e_out = float(np.sum(np.abs(ow) ** 2) * dt)
    e_in = inp.energy()
    if e_out == 0 or e_in == 0:
        raise MetricError("zero-energy window")

    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    IN = np.fft.fft(inp.samples, nfft)
    OUT = np.fft.fft(ow, nfft)
    w = 2 * math.pi * np.fft.fftfreq(nfft, dt)
    cross = np.conj(IN) * OUT

    t_ref = inp.times[int(np.argmax(np.abs(inp.samples)))]
    s_lo, s_hi = window[0] - t_ref, window[1] - t_ref

    # integer-lag scan, then continuous refinement of the best lag
    corr = np.fft.ifft(cross) * dt
    lags = np.fft.fftfreq(nfft, 1.0 / nfft).astype(int) * dt
    ok = (lags >= s_lo - 1e-12) & (lags <= s_hi + 1e-12)
    if not ok.any():
        ok = np.abs(lags - 0.5 * (s_lo + s_hi)) == np.min(np.abs(lags - 0.5 * (s_lo + s_hi)))
    vals = np.where(ok, np.abs(corr), -1.0)
    k = int(np.argmax(vals))
    s0 = lags[k]

    def overlap(s):
        # Parseval form of sum conj(in(t - s)) out(t) dt for fractional s
        return abs(np.sum(cross * np.exp(1j * w * s)) * dt / nfft)

    res = minimize_scalar(lambda s: -overlap(s),
                          bounds=(max(s0 - dt, s_lo), min(s0 + dt, s_hi)),
                          method="bounded", options={"xatol": 1e-6 * dt})
    best = max(overlap(s0), -res.fun)
    return float(min(best**2 / (e_in * e_out), 1.0))


def detect_echo(out: Waveform, inp: Waveform, t_min: float, T0: float,
                noise_floor: float = NOISE_FLOOR) -> EchoReport:
    """Largest local intensity maximum after ``t_min``, with a window of width T0."""
    _check_common(out, inp)
    t = out.times
    I = out.intensity
    e_in = inp.energy()
    leaked = float(I[t < t_min].sum() * out.dt / e_in) if e_in > 0 else 0.0
    none = EchoReport(None, None, 0.0, 0.0, leaked)
    if not math.isfinite(T0) or T0 <= 0:
        return none
    floor = noise_floor * float(np.max(inp.intensity))
    idx = np.nonzero(t > t_min)[0]
    if idx.size < 3:
        return none
    seg = I[idx]
    interior = np.zeros(seg.size, bool)
    interior[1:-1] = (seg[1:-1] >= seg[:-2]) & (seg[1:-1] >= seg[2:]) & (seg[1:-1] > floor)
    if not interior.any():
        return none
    k = idx[int(np.argmax(np.where(interior, seg, -1.0)))]
    # parabolic refinement of the peak position
    tp = t[k]
    if 0 < k < I.size - 1:
        den = I[k - 1] - 2 * I[k] + I[k + 1]
        if den < 0:
            tp += 0.5 * out.dt * (I[k - 1] - I[k + 1]) / den
    lo = max(tp - T0 / 2, out.t_start)
    hi = min(tp + T0 / 2, out.t_stop)
    win = (float(lo), float(hi))
    return EchoReport(float(tp), win, efficiency(out, inp, win), fidelity(out, inp, win), leaked)
