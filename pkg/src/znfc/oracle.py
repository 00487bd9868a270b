"""Frequency-domain response of static media and closed-form echo formulas.

A field component exp(-i Delta tau) is multiplied on transmission by

    T(Delta) = exp(-sum_seg [alpha/2 + sum_j (xi_j/4) Gamma_j / (Gamma_j/2 + i(delta_j - Delta))])

which is the steady-state solution of the equations integrated in
:mod:`znfc.engine`; the two paths are independent checks of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .medium import MediumStack, Waveform


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransferFunction:
    detunings: np.ndarray  # rad/us, in FFT order
    values: np.ndarray
    n_fft: int = 0
    dt: float = 0.0


def transfer_values(stack: MediumStack, detunings) -> np.ndarray:
    D = np.asarray(detunings, float)
    expo = np.zeros(D.shape, complex)
    for seg in stack.segments:
        expo += 0.5 * seg.photo_exponent
        for d, x, g in zip(seg.detunings, seg.thicknesses, seg.linewidths):
            if x:
                expo += (x / 4) * g / (g / 2 + 1j * (d + seg.doppler_offset - D))
    return np.exp(-expo)


def spectral_grid(input: Waveform, stack: MediumStack, min_per_linewidth: int = 16,
                  span_factor: float = 8.0) -> tuple:
    """FFT length and detuning grid for ``input`` that resolves every tooth.

    Returns ``(n_fft, detunings)`` with detunings in FFT bin order. Raises
    :class:`GridError` when the input sampling cannot cover ``span_factor``
    times the comb width.
    """
    lo, hi = stack.spectral_extent()
    width = max(hi - lo, stack.max_linewidth())
    span = 2 * math.pi / input.dt
    if span < span_factor * width:
        raise GridError(
            f"sampling span {span:.3g} rad/us < {span_factor} x comb width {width:.3g}")
    need = min_per_linewidth * span / stack.min_linewidth()
    n = max(2 * input.n_samples, int(math.ceil(need)))
    n_fft = 1 << int(math.ceil(math.log2(n)))
    return n_fft, fft_detunings(n_fft, input.dt)


def fft_detunings(n_fft: int, dt: float) -> np.ndarray:
    # numpy's inverse FFT synthesises exp(+i w t), i.e. Delta = -w
    return -2 * math.pi * np.fft.fftfreq(n_fft, dt)


def transfer_function(stack: MediumStack, grid) -> TransferFunction:
    """Evaluate T on ``grid``: either a detuning array or an ``(n_fft, dt)`` pair."""
    if isinstance(grid, tuple) and len(grid) == 2 and np.isscalar(grid[0]):
        n_fft, dt = grid
        D = fft_detunings(int(n_fft), float(dt))
        return TransferFunction(D, transfer_values(stack, D), int(n_fft), float(dt))
    D = np.asarray(grid, float)
    return TransferFunction(D, transfer_values(stack, D))


def respond(input: Waveform, tf: TransferFunction) -> Waveform:
    """Filter ``input`` by ``tf``; the FFT is zero-padded to ``tf.n_fft``."""
    if tf.n_fft == 0 or not math.isclose(tf.dt, input.dt, rel_tol=1e-12):
        raise GridError("transfer function grid does not match the input sampling")
    if tf.n_fft < input.n_samples:
        raise GridError("transfer function grid shorter than the input")
    spec = np.fft.fft(input.samples, tf.n_fft)
    out = np.fft.ifft(spec * tf.values)[: input.n_samples]
    return input.with_samples(out)


def propagate(input: Waveform, stack: MediumStack, **grid_kw) -> Waveform:
    """Frequency-domain counterpart of :func:`znfc.engine.simulate` (no switch)."""
    n_fft, _ = spectral_grid(input, stack, **grid_kw)
    return respond(input, transfer_function(stack, (n_fft, input.dt)))


def shift(input: Waveform, delay: float) -> Waveform:
    """Delay ``input`` by ``delay`` us (band-limited, zero-padded)."""
    n = input.n_samples
    n_fft = 1 << int(math.ceil(math.log2(2 * n + abs(delay) / input.dt + 1)))
    w = 2 * math.pi * np.fft.fftfreq(n_fft, input.dt)
    spec = np.fft.fft(input.samples, n_fft) * np.exp(-1j * w * delay)
    return input.with_samples(np.fft.ifft(spec)[:n])


def analytic_echo(input: Waveform, xi_eff: float, finesse: float, beta: float,
                  T0: float) -> Waveform:
    """Transmitted pulse plus first echo of a uniform comb memory.

    Later echoes are not synthesised.
    """
    if xi_eff < 0 or finesse <= 0 or beta < 0 or T0 <= 0:
        raise ValueError("parameters must be positive")
    a = math.pi * xi_eff
    direct = beta * math.exp(-a / 4)
    echo = -beta * (a / 2) * math.exp(-a / 4) * math.exp(-math.pi / finesse)
    out = direct * input.samples
    if echo:
        out = out + echo * shift(input, T0).samples
    return input.with_samples(out)


def echo_amplitude(xi_eff: float, finesse: float, beta: float = 1.0) -> float:
    """|first-echo coefficient| of the uniform-comb formula."""
    a = math.pi * xi_eff
    return beta * (a / 2) * math.exp(-a / 4) * math.exp(-math.pi / finesse)


def predetermined_efficiency(xi_eff: float, finesse: float, beta: float = 1.0) -> float:
    """Squared first-echo coefficient: (pi xi/2)^2 exp(-pi xi/2) exp(-2 pi/F) beta^2."""
    return echo_amplitude(xi_eff, finesse, beta) ** 2
