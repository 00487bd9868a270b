import math

import numpy as np
import pytest

from znfc.engine import simulate
from znfc.medium import Waveform
from znfc.metrics import (
    MetricError,
    detect_echo,
    efficiency,
    fidelity,
    gaussian_input,
    matched_duration,
    measured_fwhm,
    pulse_halfspan,
)
from znfc.oracle import shift


def test_gaussian_fwhm():
    wf = gaussian_input(1.41, 0.0, (-5, 5, 0.001))
    assert measured_fwhm(wf) == pytest.approx(1.41, rel=1e-5)
    assert np.abs(wf.samples).max() == pytest.approx(1.0)


def test_gaussian_clipping():
    with pytest.raises(MetricError):
        gaussian_input(2.0, 0.0, (-2, 2, 0.01))
    with pytest.raises(MetricError):
        gaussian_input(-1.0, 0.0, (-2, 2, 0.01))
    h = pulse_halfspan(1.0)
    gaussian_input(1.0, 0.0, (-1.001 * h, 1.001 * h, 0.01))


def test_matched_duration(fig2):
    # time-bandwidth product of a Gaussian field: 4 ln2 / pi in frequency units
    band = (fig2.comb.tooth_count - 1) * fig2.comb.spacing + fig2.comb.linewidth
    assert matched_duration(fig2.comb) * band == pytest.approx(8 * math.log(2))
    assert matched_duration(fig2.comb) == pytest.approx(1.41, abs=0.01)


def test_efficiency_of_identity():
    wf = gaussian_input(1.0, 0.0, (-4, 4, 0.01))
    assert efficiency(wf, wf) == pytest.approx(1.0)
    assert efficiency(wf * 0.5, wf) == pytest.approx(0.25)
    # rectangle rule: the centre sample is counted in the half window
    assert efficiency(wf, wf, (0, 4)) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(MetricError):
        efficiency(wf, wf, (10, 11))


def test_fidelity_invariances():
    wf = gaussian_input(1.0, 0.0, (-5, 15, 0.02))
    assert fidelity(wf, wf) == pytest.approx(1.0, abs=1e-12)
    # amplitude, global phase and fractional delay do not lower the overlap
    moved = shift(wf, 6.013) * (0.2 * np.exp(1.1j))
    assert fidelity(moved, wf) == pytest.approx(1.0, abs=1e-6)


def test_fidelity_detects_distortion():
    wf = gaussian_input(1.0, 0.0, (-5, 15, 0.02))
    wide = gaussian_input(2.0, 5.0, wf)
    # overlap of Gaussians with widths 1 and 2: 2 s1 s2 / (s1^2 + s2^2)
    assert fidelity(wide, wf) == pytest.approx(0.8, rel=1e-4)


def test_fidelity_grid_mismatch():
    a = gaussian_input(1.0, 0.0, (-5, 5, 0.02))
    b = gaussian_input(1.0, 0.0, (-5, 5, 0.01))
    with pytest.raises(MetricError):
        fidelity(a, b)


def test_detect_echo(fig2):
    out = simulate(fig2.input, fig2.stack).output
    rep = detect_echo(out, fig2.input, fig2.T0 / 2 + fig2.fwhm / 2, fig2.T0)
    assert rep.found
    assert rep.window[1] - rep.window[0] == pytest.approx(fig2.T0)
    assert 0 < rep.efficiency < 0.05
    assert 0.85 < rep.fidelity < 0.95
    assert rep.leaked > 0.1
    d = rep.to_dict()
    assert set(d) == {"center", "window", "efficiency", "fidelity", "leaked"}


def test_detect_echo_none():
    wf = gaussian_input(1.0, 0.0, (-5, 20, 0.05))
    rep = detect_echo(wf, wf, 2.0, math.inf)
    assert not rep.found and rep.efficiency == 0.0
    # monotone tail only: no local maximum above the floor
    rep = detect_echo(wf, wf, 5.0, 10.0)
    assert not rep.found


def test_waveform_grid():
    wf = Waveform.on_grid(0.0, 1.0, 0.1)
    assert wf.n_samples == 11
    assert wf.t_stop == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Waveform(0.0, 0.0, [1, 2])
