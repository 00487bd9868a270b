import json
import math
from fractions import Fraction

import pytest
from sympy import Rational
from sympy.physics.wigner import clebsch_gordan as sym_cg

from znfc.nuclear import (
    DomainError,
    IncompleteIsotopeError,
    IsotopeParams,
    build_comb,
    builtin_isotopes,
    cg_weight,
    clebsch_gordan,
    eddy_decay_time,
    effective_thickness,
    g_factor_spacing_rate,
    get_isotope,
    load_isotopes,
    optical_thickness,
    photoelectric_exponent,
    spacing_rate_mhz,
    thickness_for_effective,
    uniform_comb,
    velocity_spacing,
)
from znfc.units import to_khz

def _rank1_closed(j1, m, J):
    # textbook <j1 m; 1 0 | J m>^2 for J = j1 + 1, j1, j1 - 1
    j1, m = Fraction(j1), Fraction(m)
    if J == j1 + 1:
        return ((j1 + 1) ** 2 - m * m) / ((2 * j1 + 1) * (j1 + 1))
    if J == j1:
        return m * m / (j1 * (j1 + 1))
    return (j1 * j1 - m * m) / (j1 * (2 * j1 + 1))


_RANK1_CASES = [(j1, dJ) for j1 in (Fraction(1, 2), 1, Fraction(3, 2), Fraction(7, 2), 4, Fraction(9, 2))
                for dJ in (1, 0, -1) if Fraction(j1) + dJ >= 0]


@pytest.mark.parametrize("j1,dJ", _RANK1_CASES)
def test_cg_rank1_closed_form(j1, dJ):
    J = Fraction(j1) + dJ
    m = -min(Fraction(j1), J)
    while m <= min(Fraction(j1), J):
        assert clebsch_gordan(j1, m, 1, 0, J, m) == _rank1_closed(j1, m, J)
        m += 1


@pytest.mark.parametrize("args", [
    (Fraction(7, 2), Fraction(1, 2), 1, 0, Fraction(9, 2), Fraction(1, 2)),
    (Fraction(9, 2), Fraction(-3, 2), 2, 0, Fraction(5, 2), Fraction(-3, 2)),
    (Fraction(7, 2), Fraction(3, 2), 2, 0, Fraction(3, 2), Fraction(3, 2)),
    (1, 1, 1, -1, 2, 0),
    (Fraction(3, 2), Fraction(1, 2), 1, 1, Fraction(5, 2), Fraction(3, 2)),
    (2, 1, 2, -1, 3, 0),
])
def test_cg_matches_sympy(args):
    j1, m1, j2, m2, J, M = (Rational(x.numerator, x.denominator) if isinstance(x, Fraction)
                            else Rational(x) for x in args)
    ref = sym_cg(j1, j2, J, m1, m2, M) ** 2
    got = clebsch_gordan(*args)
    assert Rational(got.numerator, got.denominator) == ref


def test_cg_selection_rules():
    assert clebsch_gordan(1, 1, 1, 0, 2, 0) == 0  # m1 + m2 != M
    assert clebsch_gordan(1, 0, 1, 0, 1, 0) == 0  # parity zero
    with pytest.raises(DomainError):
        clebsch_gordan(1, 0, 1, 0, 3, 0)
    with pytest.raises(DomainError):
        clebsch_gordan(1, 2, 1, 0, 2, 2)


def test_cg_completeness():
    # sum over J of <j1 m1; j2 m2|J M>^2 = 1
    j1, j2 = Fraction(7, 2), 1
    for m1 in (Fraction(-7, 2), Fraction(1, 2), Fraction(5, 2)):
        tot = sum(clebsch_gordan(j1, m1, j2, 0, J, m1)
                  for J in (Fraction(5, 2), Fraction(7, 2), Fraction(9, 2)) if abs(m1) <= J)
        assert tot == 1


def test_ta_weights():
    comb = build_comb(get_isotope("Ta181"), 0.023)
    w = comb.weights
    assert comb.tooth_count == 8
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    # (81/4 - M^2) shape: centre teeth 20/120, edge teeth 8/120
    assert w[3] == pytest.approx(20 / 120)
    assert w[0] == pytest.approx(8 / 120)
    assert w == pytest.approx(w[::-1])
    # raw edge/centre ratio of the squared couplings
    assert cg_weight(3.5, 4.5, 3.5) / cg_weight(3.5, 4.5, 0.5) == pytest.approx(8 / 20)


def test_ta_cg_values():
    # <7/2 M; 1 0|9/2 M>^2 = (81/4 - M^2)/36
    assert cg_weight(3.5, 4.5, 0.5) == pytest.approx(5 / 9)
    assert cg_weight(3.5, 4.5, 3.5) == pytest.approx(2 / 9)


def test_ge_and_sc_rank2():
    ge = get_isotope("Ge73")
    assert ge.tooth_count == 6 and ge.multipolarity == 2
    c = build_comb(ge, 0.1)
    assert c.tooth_count == 6
    assert c.weights.sum() == pytest.approx(1.0)
    sc = get_isotope("Sc45")
    assert sc.tooth_count == 4
    with pytest.raises(IncompleteIsotopeError):
        build_comb(sc, 0.1)
    with pytest.raises(DomainError):
        cg_weight(4.5, 2.5, 0.5, rank=1)


def test_isotope_lookup_aliases():
    assert get_isotope("181Ta").name == "Ta181"
    assert get_isotope("ta").name == "Ta181"
    with pytest.raises(KeyError):
        get_isotope("U238")


def test_completeness_flags():
    ta, ge, sc = (get_isotope(n) for n in ("Ta181", "Ge73", "Sc45"))
    assert ta.complete
    assert not ge.complete and "sigma_R" in ge.missing_fields
    with pytest.raises(IncompleteIsotopeError):
        optical_thickness(ge, 1.0)
    assert not sc.complete


def test_spacing_rates():
    ta = get_isotope("Ta181")
    assert spacing_rate_mhz(ta) == pytest.approx(3.781)
    # g-factors alone land close to the reported rate
    assert g_factor_spacing_rate(ta) == pytest.approx(3.781, abs=2e-3)
    assert spacing_rate_mhz(get_isotope("Sc45")) is None


@pytest.mark.parametrize("B", [0.001, 0.023, 0.1, 1.0])
def test_b_linearity(B):
    iso = get_isotope("Ta181")
    c1 = build_comb(iso, B)
    c2 = build_comb(iso, 2 * B)
    assert c2.detunings == pytest.approx(2 * c1.detunings, rel=1e-13)
    assert to_khz(c1.spacing) == pytest.approx(3781 * B, rel=1e-12)


def test_zero_field_single_line():
    c = build_comb(get_isotope("Ta181"), 0.0)
    assert c.tooth_count == 1 and math.isinf(c.rephasing_time)
    with pytest.raises(DomainError):
        build_comb(get_isotope("Ta181"), -0.01)


def test_linewidth_floor():
    iso = get_isotope("Ta181")
    with pytest.raises(DomainError):
        build_comb(iso, 0.02, linewidth=0.5 * iso.gamma0)
    c = build_comb(iso, 0.023, broadening=2.0)
    assert c.finesse == pytest.approx(build_comb(iso, 0.023).finesse / 2)


def test_thickness_roundtrip():
    iso = get_isotope("Ta181")
    comb = build_comb(iso, 0.023)
    xi = optical_thickness(iso, 2.6)
    assert effective_thickness(xi, comb) == pytest.approx(xi / (comb.finesse * 8))
    assert thickness_for_effective(iso, effective_thickness(xi, comb), comb) == pytest.approx(2.6)
    assert photoelectric_exponent(iso, 2.6) == pytest.approx(xi / (iso.f_LM * iso.ratio_R_ph))


def test_eddy_decay():
    iso = get_isotope("Ta181")
    tau = eddy_decay_time(2.6e-6, math.inf, 1.0, iso.resistivity)
    assert tau == pytest.approx((2.6e-6) ** 2 * 4e-7 * math.pi / (iso.resistivity * math.pi ** 2),
                                rel=1e-6)
    # finite width only shortens it
    assert eddy_decay_time(2.6e-6, 5e-6, 1.0, iso.resistivity) < tau
    with pytest.raises(DomainError):
        eddy_decay_time(0, 1, 1, 1)


def test_velocity_spacing_order_of_magnitude():
    iso = get_isotope("Ta181")
    v = velocity_spacing(iso, build_comb(iso, 0.023).spacing)
    # sub-micron per second for a ~100 kHz comb at 6 keV
    assert 1e-5 < v < 1e-2


def test_uniform_comb():
    c = uniform_comb(8, 1.0, 0.01)
    assert c.finesse == pytest.approx(100)
    assert c.weights == pytest.approx([1 / 8] * 8)
    assert c.detunings.mean() == pytest.approx(0, abs=1e-15)


def test_isotope_validation_and_roundtrip(tmp_path):
    with pytest.raises(ValueError):
        IsotopeParams(name="X", E0=1.0, T1=-1, I_g=0.5, I_e=1.5)
    with pytest.raises(ValueError):
        IsotopeParams.from_dict({"name": "X", "E0": 1.0, "T1": 1, "I_g": 0.5, "I_e": 1.5, "bogus": 1})
    isos = builtin_isotopes()
    p = tmp_path / "iso.json"
    p.write_text(json.dumps({"schema": "znfc-isotopes/1",
                             "isotopes": [i.to_dict() for i in isos]}))
    assert load_isotopes(p) == isos
