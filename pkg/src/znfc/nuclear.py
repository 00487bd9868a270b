"""Mossbauer isotope constants and Zeeman comb construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .units import C_LIGHT, HBAR, KEV, MU_0, MU_N_OVER_H, MU_N_OVER_HBAR, TWO_PI, UM_TO_CM


class DomainError(ValueError):
    """Arguments outside the physical domain of an operation."""


class IncompleteIsotopeError(ValueError):
    """An isotope record lacks fields needed for the requested computation."""


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients
# ---------------------------------------------------------------------------

def _twice(j) -> int:
    """Return 2*j as an int, rejecting values that are not half-integers."""
    tj = Fraction(j).limit_denominator(4) * 2
    if tj.denominator != 1 or abs(float(tj) - 2 * float(j)) > 1e-9:
        raise DomainError(f"{j!r} is not a half-integer")
    return int(tj)


def _fact(n2: int) -> int:
    # factorial of n2/2, n2 even
    if n2 < 0 or n2 % 2:
        raise DomainError("negative or non-integer factorial argument")
    return math.factorial(n2 // 2)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> Fraction:
    """Squared Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>^2 as an exact rational.

    Uses the Racah single-sum formula on doubled quantum numbers. The sign of
    the amplitude is not needed anywhere in this package, so only the square
    is returned.
    """
    a, b, c = _twice(j1), _twice(j2), _twice(J)
    ma, mb, mc = _twice(m1), _twice(m2), _twice(M)
    if min(a, b, c) < 0:
        raise DomainError("negative angular momentum")
    if c < abs(a - b) or c > a + b or (a + b + c) % 2:
        raise DomainError(f"triangle rule violated for ({j1}, {j2}, {J})")
    for j, m in ((a, ma), (b, mb), (c, mc)):
        if abs(m) > j or (j + m) % 2:
            raise DomainError(f"projection {m / 2} invalid for spin {j / 2}")
    if ma + mb != mc:
        return Fraction(0)

    delta = Fraction(
        _fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c), _fact(a + b + c + 2)
    )
    pref = (c + 1) * delta * (
        _fact(a + ma) * _fact(a - ma) * _fact(b + mb) * _fact(b - mb) * _fact(c + mc) * _fact(c - mc)
    )
    total = Fraction(0)
    for k2 in range(0, a + b - c + 1, 2):
        args = (a + b - c - k2, a - ma - k2, b + mb - k2, c - b + ma + k2, c - a - mb + k2)
        if min(args) < 0:
            continue
        den = _fact(k2)
        for x in args:
            den *= _fact(x)
        total += Fraction((-1) ** (k2 // 2), den)
    return pref * total * total


def cg_weight(I_g, I_e, M, rank: int = 1) -> float:
    """Squared coupling <I_g M; rank 0 | I_e M>^2 for a Delta M = 0 line.

    ``rank`` is the multipolarity of the transition (1 for E1/M1, 2 for E2/M2).
    """
    if abs(float(I_e) - float(I_g)) > rank:
        raise DomainError(f"|I_e - I_g| exceeds multipolarity {rank}")
    if abs(float(M)) > min(float(I_g), float(I_e)) + 1e-12:
        raise DomainError(f"|M|={abs(M)} exceeds min(I_g, I_e)")
    return float(clebsch_gordan(I_g, M, rank, 0, I_e, M))


# ---------------------------------------------------------------------------
# Isotope records
# ---------------------------------------------------------------------------

_REQUIRED_FOR_COMB = ("T1", "I_g", "I_e")
_REQUIRED_FOR_MEDIUM = ("sigma_R", "ratio_R_ph", "f_LM", "number_density")


@dataclass(frozen=True)
class IsotopeParams:
    """Static nuclear and material constants of a Mossbauer species.

    Units: ``E0`` keV, ``T1`` us, ``sigma_R`` cm^2, ``number_density`` cm^-3,
    ``spacing_rate`` MHz/T (reported comb spacing per tesla; when absent it is
    derived from the g-factors), ``resistivity`` Ohm m.
    Fields set to ``None`` are unknown; operations that need them raise
    :class:`IncompleteIsotopeError`.
    """

    name: str
    E0: Optional[float]
    T1: float
    I_g: float
    I_e: float
    g_g: Optional[float] = None
    g_e: Optional[float] = None
    multipolarity: int = 1
    spacing_rate: Optional[float] = None
    sigma_R: Optional[float] = None
    ratio_R_ph: Optional[float] = None
    f_LM: Optional[float] = None
    number_density: Optional[float] = None
    alpha_IC: Optional[float] = None
    resistivity: Optional[float] = None
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        for spin in (self.I_g, self.I_e):
            if spin < 0:
                raise DomainError("nuclear spin must be non-negative")
            _twice(spin)
        if not self.T1 > 0:
            raise DomainError("T1 must be positive")
        if self.f_LM is not None and not 0 < self.f_LM <= 1:
            raise DomainError("f_LM must lie in (0, 1]")
        for name in ("sigma_R", "ratio_R_ph", "number_density"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive")
        if self.multipolarity < 1:
            raise DomainError("multipolarity must be >= 1")

    @property
    def gamma0(self) -> float:
        """Natural linewidth 1/T1 in rad/us."""
        return 1.0 / self.T1

    @property
    def tooth_count(self) -> int:
        return int(round(2 * min(self.I_g, self.I_e))) + 1

    @property
    def missing_fields(self) -> tuple:
        return tuple(
            f.name
            for f in fields(self)
            if getattr(self, f.name) is None and f.name not in ("alpha_IC", "resistivity", "E0")
        )

    @property
    def complete(self) -> bool:
        """True when the record supports a full propagation run."""
        return self.spacing_rate_per_tesla() is not None and all(
            getattr(self, k) is not None for k in _REQUIRED_FOR_MEDIUM
        )

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise IncompleteIsotopeError(f"{self.name}: missing {', '.join(missing)}")

    def spacing_rate_per_tesla(self) -> Optional[float]:
        """Signed tooth-detuning slope per unit M per tesla, in rad/us/T.

        The sign follows ``g_g - g_e``; the magnitude is the reported spacing
        rate when present, otherwise ``|g_g - g_e|`` nuclear magnetons.
        """
        have_g = self.g_g is not None and self.g_e is not None
        sign = 1.0
        if have_g and self.g_g != self.g_e:
            sign = math.copysign(1.0, self.g_g - self.g_e)
        if self.spacing_rate is not None:
            return sign * TWO_PI * self.spacing_rate
        if have_g:
            return (self.g_g - self.g_e) * MU_N_OVER_HBAR
        return None

    @classmethod
    def from_dict(cls, d: dict) -> "IsotopeParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown isotope keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_isotopes(path) -> list:
    """Read isotope records from a JSON file in the ``znfc-isotopes/1`` layout."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [IsotopeParams.from_dict(rec) for rec in doc["isotopes"]]


def builtin_isotopes() -> list:
    """The embedded isotope table: 181Ta (complete), 73Ge and 45Sc (partial)."""
    ref = resources.files("znfc") / "data" / "isotopes.json"
    with resources.as_file(ref) as p:
        return load_isotopes(Path(p))


def get_isotope(name: str, extra: Sequence[IsotopeParams] = ()) -> IsotopeParams:
    key = name.lower().replace("-", "").replace("_", "")
    for iso in list(extra) + builtin_isotopes():
        n = iso.name.lower()
        # accept "Ta181", "181Ta", "ta"
        if key in (n, n[2:] + n[:2], n.rstrip("0123456789")):
            return iso
    raise KeyError(f"unknown isotope {name!r}")


# ---------------------------------------------------------------------------
# Combs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CombTooth:
    detuning: float
    weight: float
    linewidth: float
    M: float


@dataclass(frozen=True)
class CombSpec:
    """Equidistant absorption comb; angular quantities in rad/us."""

    teeth: tuple
    spacing: float
    gamma0: float = 0.0

    def __post_init__(self):
        d = self.detunings
        if np.any(np.diff(d) < 0):
            raise DomainError("teeth must be sorted by detuning")
        w = self.weights
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be non-negative and sum to 1")
        if np.any(self.linewidths <= 0):
            raise DomainError("linewidths must be positive")

    @property
    def tooth_count(self) -> int:
        return len(self.teeth)

    @property
    def detunings(self) -> np.ndarray:
        return np.array([t.detuning for t in self.teeth])

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.teeth])

    @property
    def linewidths(self) -> np.ndarray:
        return np.array([t.linewidth for t in self.teeth])

    @property
    def linewidth(self) -> float:
        return float(self.linewidths.max())

    @property
    def finesse(self) -> float:
        return self.spacing / self.linewidth

    @property
    def rephasing_time(self) -> float:
        return TWO_PI / self.spacing if self.spacing > 0 else math.inf

    T0 = rephasing_time

    @property
    def width(self) -> float:
        """Full spectral extent of the comb including one linewidth."""
        d = self.detunings
        return float(d.max() - d.min() + self.linewidth)


def uniform_comb(n_teeth: int, spacing: float, linewidth: float) -> CombSpec:
    """Symmetric comb of equal-weight teeth (the textbook frequency-comb memory)."""
    if n_teeth < 1 or spacing <= 0 or linewidth <= 0:
        raise DomainError("need n_teeth >= 1 and positive spacing, linewidth")
    offs = (np.arange(n_teeth) - (n_teeth - 1) / 2) * spacing
    teeth = tuple(CombTooth(float(d), 1.0 / n_teeth, linewidth, 0.0) for d in offs)
    return CombSpec(teeth, spacing, linewidth)


def build_comb(
    iso: IsotopeParams,
    B: float,
    linewidth: Optional[float] = None,
    broadening: float = 1.0,
) -> CombSpec:
    """Zeeman comb of ``iso`` in a field ``B`` (tesla).

    The tooth width is ``linewidth`` if given, else ``broadening * gamma0``.
    A zero field gives a single line at zero detuning.
    """
    if B < 0:
        raise DomainError("B must be non-negative; reversal is modeled as a switch event")
    gamma = broadening * iso.gamma0 if linewidth is None else float(linewidth)
    if gamma < iso.gamma0 * (1 - 1e-12):
        raise DomainError("linewidth cannot be narrower than the natural linewidth")

    if B == 0:
        return CombSpec((CombTooth(0.0, 1.0, gamma, 0.0),), 0.0, iso.gamma0)

    slope = iso.spacing_rate_per_tesla()
    if slope is None:
        raise IncompleteIsotopeError(f"{iso.name}: g-factors / spacing rate unknown")

    jmin = min(iso.I_g, iso.I_e)
    n = iso.tooth_count
    Ms = [-jmin + k for k in range(n)]
    raw = np.array([cg_weight(iso.I_g, iso.I_e, M, iso.multipolarity) for M in Ms])
    if raw.sum() == 0:
        raise DomainError("no allowed Delta M = 0 transitions")
    w = raw / raw.sum()
    teeth = [CombTooth(M * B * slope, float(wi), gamma, M) for M, wi in zip(Ms, w)]
    teeth.sort(key=lambda t: t.detuning)
    # exact renormalisation so the invariant holds to rounding
    total = sum(t.weight for t in teeth)
    teeth = tuple(CombTooth(t.detuning, t.weight / total, t.linewidth, t.M) for t in teeth)
    return CombSpec(teeth, abs(slope) * B, iso.gamma0)


# ---------------------------------------------------------------------------
# Thickness, losses, and feasibility helpers
# ---------------------------------------------------------------------------

def optical_thickness(iso: IsotopeParams, L: float) -> float:
    """Total resonant optical thickness of a foil ``L`` um thick."""
    if not L > 0:
        raise DomainError("thickness must be positive")
    iso.require("number_density", "sigma_R", "f_LM")
    return iso.number_density * iso.sigma_R * iso.f_LM * L * UM_TO_CM


def photoelectric_exponent(iso: IsotopeParams, L: float) -> float:
    """Intensity attenuation exponent N*sigma_ph*L of off-resonant absorption."""
    if not L >= 0:
        raise DomainError("thickness must be non-negative")
    iso.require("number_density", "sigma_R", "ratio_R_ph")
    return iso.number_density * (iso.sigma_R / iso.ratio_R_ph) * L * UM_TO_CM


def off_resonant_loss(iso: IsotopeParams, L: float) -> float:
    """Amplitude transmission beta = exp(-N sigma_ph L / 2)."""
    return math.exp(-0.5 * photoelectric_exponent(iso, L))


def effective_thickness(xi: float, comb: CombSpec) -> float:
    """Effective optical thickness per transition, xi / (F N)."""
    return xi / (comb.finesse * comb.tooth_count)


def thickness_for_effective(iso: IsotopeParams, xi_eff: float, comb: CombSpec) -> float:
    """Foil thickness (um) that yields the requested effective thickness."""
    xi = xi_eff * comb.finesse * comb.tooth_count
    return xi / optical_thickness(iso, 1.0)


def eddy_decay_time(L: float, L_y: float, mu_r: float, resistivity: float) -> float:
    """Eddy-current decay time (s) of a conducting slab after a field step.

    Lengths in metres; ``L_y`` may be ``math.inf``.
    """
    if not (L > 0 and L_y > 0 and mu_r > 0 and resistivity > 0):
        raise DomainError("all arguments must be positive")
    geom = L * L if math.isinf(L_y) else (L * L * L_y * L_y) / (L * L + L_y * L_y)
    return geom * mu_r * MU_0 / (resistivity * math.pi**2)


def velocity_spacing(iso: IsotopeParams, spacing: float) -> float:
    """Doppler velocity step (m/s) giving a comb spacing ``spacing`` rad/us."""
    iso.require("E0")
    return C_LIGHT * HBAR * spacing * 1e6 / (iso.E0 * KEV)


def spacing_rate_mhz(iso: IsotopeParams) -> Optional[float]:
    """|Delta omega| / (2 pi B) in MHz/T."""
    s = iso.spacing_rate_per_tesla()
    return None if s is None else abs(s) / TWO_PI


def g_factor_spacing_rate(iso: IsotopeParams) -> Optional[float]:
    """Spacing rate implied by the g-factors alone, MHz/T."""
    if iso.g_g is None or iso.g_e is None:
        return None
    return abs(iso.g_e - iso.g_g) * MU_N_OVER_H
