import math
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from znfc.engine import default_dt, rel_l2, simulate
from znfc.medium import MediumSegment, MediumStack, SwitchEvent
from znfc.metrics import gaussian_input, measured_fwhm, pulse_halfspan
from znfc.nuclear import IsotopeParams, build_comb, clebsch_gordan

SETTINGS = settings(max_examples=100, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


@st.composite
def stacks(draw, max_segments=3):
    segs = []
    for _ in range(draw(st.integers(1, max_segments))):
        n = draw(st.integers(1, 4))
        det = draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
        xi = draw(st.lists(st.floats(0, 6), min_size=n, max_size=n))
        gam = draw(st.lists(st.floats(0.2, 2.0), min_size=n, max_size=n))
        pe = draw(st.floats(0, 1))
        off = draw(st.floats(-1, 1))
        segs.append(MediumSegment(1.0, det, xi, gam, pe, off))
    return MediumStack(tuple(segs), slices=draw(st.integers(4, 16)))


def _pulse(stack, fwhm=1.0, span=8.0):
    pad = 1.05 * pulse_halfspan(fwhm)
    return gaussian_input(fwhm, 0.0, (-pad, span + pad, default_dt(stack)))


@SETTINGS
@given(stacks(), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3,
                                    allow_nan=False, allow_infinity=False),
       st.one_of(st.none(), st.floats(0.5, 6.0)))
def test_linearity(stack, c, T_sw):
    wf = _pulse(stack)
    sw = None if T_sw is None else SwitchEvent(T_sw)
    a = simulate(wf, stack, sw).output.samples
    b = simulate(wf * c, stack, sw).output.samples
    assert rel_l2(b, c * a) < 1e-10


@SETTINGS
@given(stacks(), st.one_of(st.none(), st.floats(0.5, 6.0)), st.floats(0.3, 3.0))
def test_passivity(stack, T_sw, fwhm):
    wf = _pulse(stack, fwhm)
    sw = None if T_sw is None else SwitchEvent(T_sw)
    out = simulate(wf, stack, sw).output
    assert out.energy() <= wf.energy() * (1 + 1e-9)


@SETTINGS
@given(stacks(max_segments=4), st.randoms())
def test_permutation_invariance(stack, rnd):
    order = list(range(len(stack.segments)))
    rnd.shuffle(order)
    wf = _pulse(stack)
    a = simulate(wf, stack).output.samples
    b = simulate(wf, stack.permuted(order)).output.samples
    assert rel_l2(b, a) < 1e-9


@SETTINGS
@given(st.floats(0.05, 20.0), st.floats(-5, 5), st.integers(40, 400))
def test_gaussian_fwhm(fwhm, center, per_fwhm):
    dt = fwhm / per_fwhm
    h = 1.05 * pulse_halfspan(fwhm)
    wf = gaussian_input(fwhm, center, (center - h, center + h, dt))
    # linear interpolation error at the half-maximum is O(dt^2)
    assert abs(measured_fwhm(wf) - fwhm) < 2.0 * fwhm / per_fwhm**2


def _rank1(j1, m, J):
    if J == j1 + 1:
        return ((j1 + 1) ** 2 - m * m) / ((2 * j1 + 1) * (j1 + 1))
    if J == j1:
        return m * m / (j1 * (j1 + 1))
    return (j1 * j1 - m * m) / (j1 * (2 * j1 + 1))


@SETTINGS
@given(st.integers(1, 30), st.sampled_from([-1, 0, 1]), st.data())
def test_cg_closed_form(j1_twice, dJ, data):
    j1 = Fraction(j1_twice, 2)
    J = j1 + dJ
    assume(J >= 0)
    lim = min(j1, J)
    m = Fraction(data.draw(st.integers(0, int(2 * lim))), 1) - lim
    assert clebsch_gordan(j1, m, 1, 0, J, m) == _rank1(j1, m, J)


@SETTINGS
@given(st.floats(1e-4, 2.0), st.floats(1.01, 10.0),
       st.sampled_from([(0.5, 1.5), (3.5, 4.5), (4.5, 2.5), (1.5, 1.5), (2.5, 0.5)]),
       st.floats(-3, 3), st.floats(-3, 3))
def test_b_linearity(B, k, spins, g_g, g_e):
    if abs(g_g - g_e) < 1e-3:
        g_e = g_g + 0.5
    I_g, I_e = spins
    iso = IsotopeParams(name="X", E0=10.0, T1=5.0, I_g=I_g, I_e=I_e, g_g=g_g, g_e=g_e,
                        multipolarity=max(1, int(math.ceil(abs(I_e - I_g)))))
    c1 = build_comb(iso, B)
    c2 = build_comb(iso, k * B)
    assert np.allclose(c2.detunings, k * c1.detunings, rtol=1e-12, atol=0)
    assert math.isclose(c2.spacing, k * c1.spacing, rel_tol=1e-12)
    assert math.isclose(c1.weights.sum(), 1.0, rel_tol=1e-12)
