"""Absorber media, field envelopes and switch events."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .nuclear import (
    CombSpec,
    DomainError,
    IsotopeParams,
    optical_thickness,
    photoelectric_exponent,
)

ZEEMAN_FLIP = "zeeman-flip"
VELOCITY_FLIP = "velocity-flip"
SWITCH_KINDS = (ZEEMAN_FLIP, VELOCITY_FLIP)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Complex field envelope on a uniform retarded-time grid (times in us)."""

    t_start: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 2:
            raise DomainError("samples must be a 1-D array of length >= 2")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def on_grid(cls, t_start: float, t_stop: float, dt: float, fn=None) -> "Waveform":
        n = int(math.floor((t_stop - t_start) / dt + 1e-9)) + 1
        t = t_start + dt * np.arange(n)
        vals = np.zeros(n, complex) if fn is None else np.asarray(fn(t), dtype=complex)
        return cls(t_start, dt, vals)

    @property
    def n_samples(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    @property
    def t_stop(self) -> float:
        return self.t_start + self.dt * (self.n_samples - 1)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def energy(self, window=None) -> float:
        """Integral of |field|^2 (trapezoid-free Riemann sum) over ``window``."""
        I = self.intensity
        if window is not None:
            I = I[self.window_mask(window)]
        return float(I.sum() * self.dt)

    def window_mask(self, window) -> np.ndarray:
        t = self.times
        lo, hi = window
        return (t >= lo - 1e-9 * self.dt) & (t <= hi + 1e-9 * self.dt)

    def with_samples(self, samples) -> "Waveform":
        return Waveform(self.t_start, self.dt, samples)

    def same_grid(self, other: "Waveform") -> bool:
        return (
            self.n_samples == other.n_samples
            and math.isclose(self.dt, other.dt, rel_tol=1e-12)
            and math.isclose(self.t_start, other.t_start, rel_tol=0, abs_tol=1e-9 * self.dt)
        )

    def __mul__(self, c):
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class MediumSegment:
    """One absorber: resonant teeth plus off-resonant loss.

    ``thicknesses`` are the per-tooth resonant optical thicknesses (intensity
    exponents at line centre); ``photo_exponent`` is N*sigma_ph*L for the
    segment; ``doppler_offset`` (rad/us) shifts all teeth uniformly.
    """

    thickness: float
    detunings: np.ndarray
    thicknesses: np.ndarray
    linewidths: np.ndarray
    photo_exponent: float = 0.0
    doppler_offset: float = 0.0

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.detunings, float))
        x = np.atleast_1d(np.asarray(self.thicknesses, float))
        g = np.atleast_1d(np.asarray(self.linewidths, float))
        if g.size == 1 and d.size > 1:
            g = np.full(d.size, g[0])
        if not (d.shape == x.shape == g.shape):
            raise DomainError("detunings, thicknesses, linewidths must have equal length")
        if np.any(x < 0) or np.any(g <= 0) or not self.thickness >= 0 or self.photo_exponent < 0:
            raise DomainError("need thickness >= 0, xi_j >= 0, linewidths > 0, loss >= 0")
        for name, arr in (("detunings", d), ("thicknesses", x), ("linewidths", g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def total_thickness(self) -> float:
        return float(self.thicknesses.sum())

    @property
    def beta(self) -> float:
        return math.exp(-0.5 * self.photo_exponent)

    def to_dict(self) -> dict:
        return {
            "thickness": self.thickness,
            "detunings": self.detunings.tolist(),
            "thicknesses": self.thicknesses.tolist(),
            "linewidths": self.linewidths.tolist(),
            "photo_exponent": self.photo_exponent,
            "doppler_offset": self.doppler_offset,
        }


@dataclass(frozen=True, eq=False)
class MediumStack:
    """Ordered absorber segments; ``slices`` is the default per-segment z resolution."""

    segments: tuple
    slices: int = 32

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise DomainError("stack needs at least one segment")
        if int(self.slices) < 1:
            raise DomainError("slices must be >= 1")

    @property
    def thickness(self) -> float:
        return sum(s.thickness for s in self.segments)

    @property
    def beta(self) -> float:
        return math.exp(-0.5 * sum(s.photo_exponent for s in self.segments))

    @property
    def resonant_thickness(self) -> float:
        return sum(s.total_thickness for s in self.segments)

    def max_detuning(self) -> float:
        """Largest |detuning| any tooth can reach, either side of a flip."""
        return max(
            float(np.max(np.abs(s.detunings)) + abs(s.doppler_offset)) for s in self.segments
        )

    def max_linewidth(self) -> float:
        return max(float(s.linewidths.max()) for s in self.segments)

    def min_linewidth(self) -> float:
        return min(float(s.linewidths.min()) for s in self.segments)

    def spectral_extent(self) -> tuple:
        lo = min(float((s.detunings + s.doppler_offset).min()) for s in self.segments)
        hi = max(float((s.detunings + s.doppler_offset).max()) for s in self.segments)
        g = self.max_linewidth()
        return lo - g / 2, hi + g / 2

    def permuted(self, order: Sequence[int]) -> "MediumStack":
        return replace(self, segments=tuple(self.segments[i] for i in order))

    def to_dict(self) -> dict:
        return {"slices": self.slices, "segments": [s.to_dict() for s in self.segments]}


@dataclass(frozen=True)
class SwitchEvent:
    """Spectral flip at retarded time ``T_sw``.

    ``zeeman-flip`` negates the tooth detunings (field reversal);
    ``velocity-flip`` negates the Doppler offsets (absorber velocity reversal).
    A non-zero ``ramp`` sweeps the sign factor linearly from +1 to -1 over
    [T_sw - ramp/2, T_sw + ramp/2].
    """

    T_sw: float
    kind: str = ZEEMAN_FLIP
    ramp: float = 0.0

    def __post_init__(self):
        if self.kind not in SWITCH_KINDS:
            raise DomainError(f"unknown switch kind {self.kind!r}")
        if self.T_sw < 0 or self.ramp < 0:
            raise DomainError("T_sw and ramp must be non-negative")

    def factor(self, t):
        """Sign factor s(t) applied to the flipped detuning component."""
        t = np.asarray(t, float)
        if self.ramp == 0:
            return np.where(t < self.T_sw, 1.0, -1.0)
        x = (t - (self.T_sw - self.ramp / 2)) / self.ramp
        return 1.0 - 2.0 * np.clip(x, 0.0, 1.0)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def comb_segment(comb: CombSpec, xi: float, thickness: float = 1.0,
                 photo_exponent: float = 0.0, doppler_offset: float = 0.0) -> MediumSegment:
    """Segment whose total resonant thickness ``xi`` is shared by the comb weights."""
    return MediumSegment(
        thickness=thickness,
        detunings=comb.detunings,
        thicknesses=xi * comb.weights,
        linewidths=comb.linewidths,
        photo_exponent=photo_exponent,
        doppler_offset=doppler_offset,
    )


def znfc_stack(comb: CombSpec, xi: float, photo_exponent: float = 0.0,
               thickness: float = 1.0, slices: int = 32) -> MediumStack:
    """Single magnetised foil."""
    return MediumStack((comb_segment(comb, xi, thickness, photo_exponent),), slices)


def dnfc_stack(n_absorbers: int, spacing: float, linewidth: float, xi: float,
               photo_exponent: float = 0.0, thickness: float = 1.0,
               slices: int = 32) -> MediumStack:
    """Train of single-line absorbers with equally spaced Doppler offsets.

    Offsets are centred on the carrier, ``(j - (n-1)/2) * spacing``, so the
    comb is symmetric and a velocity reversal maps it onto itself.
    ``xi``, ``photo_exponent`` and ``thickness`` are totals over the train.
    """
    offs = (np.arange(n_absorbers) - (n_absorbers - 1) / 2) * spacing
    segs = tuple(
        MediumSegment(
            thickness=thickness / n_absorbers,
            detunings=[0.0],
            thicknesses=[xi / n_absorbers],
            linewidths=[linewidth],
            photo_exponent=photo_exponent / n_absorbers,
            doppler_offset=float(o),
        )
        for o in offs
    )
    return MediumStack(segs, slices)


def foil_stack(iso: IsotopeParams, comb: CombSpec, L: float, loss: bool = True,
               slices: int = 32) -> MediumStack:
    """ZNFC foil of physical thickness ``L`` um made of ``iso``."""
    xi = optical_thickness(iso, L)
    pe = photoelectric_exponent(iso, L) if loss else 0.0
    return znfc_stack(comb, xi, pe, L, slices)
