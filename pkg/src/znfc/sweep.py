"""Parameter-grid sweeps over total optical thickness and rephasing time."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .engine import ResolutionWarning, SimulationError, default_dt, rel_l2, simulate
from .medium import VELOCITY_FLIP, ZEEMAN_FLIP, SwitchEvent, dnfc_stack, znfc_stack
from .metrics import detect_echo, gaussian_input, matched_duration, pulse_halfspan
from .nuclear import (
    CombSpec,
    IncompleteIsotopeError,
    IsotopeParams,
    build_comb,
    get_isotope,
    uniform_comb,
)

MODES = ("predetermined-znfc", "ondemand-znfc", "ondemand-dnfc")
LOSSES = ("ideal", "realistic")


@dataclass(frozen=True)
class SweepPlan:
    """Grid specification.

    ``xi_values`` are total resonant optical thicknesses, ``T0_values``
    rephasing times in us (realised through the field B, or directly for the
    Doppler comb). ``input_fraction`` replaces the matched pulse duration by
    ``input_fraction * T0``; ``uniform_finesse`` swaps the Zeeman comb for an
    equal-weight comb of that finesse.
    """

    mode: str = "predetermined-znfc"
    loss: str = "ideal"
    xi_values: tuple = ()
    T0_values: tuple = ()
    isotope: str = "Ta181"
    broadening: float = 1.0
    switch_fraction: float = 0.5
    input_fraction: Optional[float] = None
    uniform_finesse: Optional[float] = None
    n_teeth: Optional[int] = None
    verify: bool = False
    verify_tol: float = 5e-3

    def __post_init__(self):
        object.__setattr__(self, "xi_values", tuple(float(x) for x in self.xi_values))
        object.__setattr__(self, "T0_values", tuple(float(x) for x in self.T0_values))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        for name in ("xi_values", "T0_values"):
            ax = np.asarray(getattr(self, name))
            if ax.size == 0 or np.any(np.diff(ax) <= 0):
                raise ValueError(f"{name} must be non-empty and strictly increasing")
        if min(self.T0_values) <= 0 or min(self.xi_values) < 0:
            raise ValueError("T0 must be positive and xi non-negative")
        if not 0 < self.switch_fraction < 1:
            raise ValueError("switch_fraction must lie in (0, 1)")

    @property
    def shape(self) -> tuple:
        return len(self.xi_values), len(self.T0_values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["xi_values"] = list(self.xi_values)
        d["T0_values"] = list(self.T0_values)
        return d


@dataclass(eq=False)
class SweepResult:
    plan: SweepPlan
    eta: np.ndarray
    fidelity: np.ndarray
    echo_time: np.ndarray
    converged: np.ndarray
    xi_eff: np.ndarray
    errors: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("i", "j", "xi", "T0", "xi_eff", "eta", "fidelity", "echo_time",
               "converged", "error")

    def rows(self):
        for i, xi in enumerate(self.plan.xi_values):
            for j, T0 in enumerate(self.plan.T0_values):
                yield (i, j, xi, T0, self.xi_eff[i, j], self.eta[i, j], self.fidelity[i, j],
                       self.echo_time[i, j], bool(self.converged[i, j]),
                       self.errors.get((i, j), ""))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# plan: " + json.dumps(self.plan.to_dict(), sort_keys=True) + "\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.COLUMNS)
        for r in self.rows():
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        def grid(a):
            return [[_fmt(v) for v in row] for row in a]

        doc = {
            "plan": self.plan.to_dict(),
            "metadata": self.metadata,
            "eta": grid(self.eta),
            "fidelity": grid(self.fidelity),
            "echo_time": grid(self.echo_time),
            "xi_eff": grid(self.xi_eff),
            "converged": self.converged.tolist(),
            "errors": {f"{i},{j}": m for (i, j), m in sorted(self.errors.items())},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "nan" if not math.isfinite(v) else f"{float(v):.10g}"
    return v


# ---------------------------------------------------------------------------
# single grid point
# ---------------------------------------------------------------------------

def point_comb(plan: SweepPlan, iso: IsotopeParams, T0: float) -> CombSpec:
    spacing = 2 * math.pi / T0
    gamma = plan.broadening * iso.gamma0
    if plan.uniform_finesse is not None:
        n = plan.n_teeth or iso.tooth_count
        return uniform_comb(n, spacing, spacing / plan.uniform_finesse)
    if plan.mode == "ondemand-dnfc":
        n = plan.n_teeth or iso.tooth_count
        return uniform_comb(n, spacing, gamma)
    slope = iso.spacing_rate_per_tesla()
    if slope is None:
        raise IncompleteIsotopeError(f"{iso.name}: comb spacing unknown")
    return build_comb(iso, spacing / abs(slope), broadening=plan.broadening)


def point_setup(plan: SweepPlan, iso: IsotopeParams, xi: float, T0: float):
    """Comb, medium, input pulse and switch event for one grid point."""
    comb = point_comb(plan, iso, T0)
    pe = 0.0
    if plan.loss == "realistic":
        iso.require("f_LM", "ratio_R_ph")
        pe = xi / (iso.f_LM * iso.ratio_R_ph)
    if plan.mode == "ondemand-dnfc":
        stack = dnfc_stack(comb.tooth_count, comb.spacing, comb.linewidth, xi, pe)
    else:
        stack = znfc_stack(comb, xi, pe)
    fwhm = plan.input_fraction * T0 if plan.input_fraction else matched_duration(comb)
    dt = default_dt(stack)
    pad = pulse_halfspan(fwhm) * 1.05
    wf = gaussian_input(fwhm, 0.0, (-pad, 1.5 * T0 + pad, dt))
    switch = None
    if plan.mode != "predetermined-znfc":
        kind = VELOCITY_FLIP if plan.mode == "ondemand-dnfc" else ZEEMAN_FLIP
        switch = SwitchEvent(plan.switch_fraction * T0, kind)
    return comb, stack, wf, switch, fwhm


def evaluate_point(plan: SweepPlan, xi: float, T0: float, iso: Optional[IsotopeParams] = None) -> dict:
    iso = iso or get_isotope(plan.isotope)
    comb, stack, wf, switch, fwhm = point_setup(plan, iso, xi, T0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        res = simulate(wf, stack, switch)
    # the echo of every mode is expected at 2 * T_sw = T0 (for T_sw = T0/2)
    t_echo = 2 * switch.T_sw if switch is not None else T0
    rep = detect_echo(res.output, wf, t_echo / 2 + fwhm / 2, T0)
    converged = True
    if plan.verify:
        from .engine import refine
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            fine = simulate(refine(wf, 2), stack, switch).output.samples[::2]
        converged = rel_l2(res.output.samples, fine) < plan.verify_tol
    xi_eff = xi / (comb.finesse * comb.tooth_count)
    return {
        "eta": rep.efficiency,
        "fidelity": rep.fidelity,
        "echo_time": rep.center if rep.found else math.nan,
        "converged": converged,
        "xi_eff": xi_eff,
        "dt": wf.dt,
        "slices": res.slices,
    }


def _work(args):
    plan, iso, i, j = args
    try:
        return i, j, evaluate_point(plan, plan.xi_values[i], plan.T0_values[j], iso), None
    except (SimulationError, ValueError, FloatingPointError) as exc:
        return i, j, None, f"{type(exc).__name__}: {exc}"


def run_sweep(plan: SweepPlan, workers: int = 1, isotope: Optional[IsotopeParams] = None) -> SweepResult:
    """Evaluate every grid point; failures are recorded per point, not raised."""
    iso = isotope or get_isotope(plan.isotope)
    if plan.uniform_finesse is None and plan.mode != "ondemand-dnfc":
        if iso.spacing_rate_per_tesla() is None:
            raise IncompleteIsotopeError(f"{iso.name}: comb spacing unknown")
    shape = plan.shape
    eta = np.full(shape, np.nan)
    fid = np.full(shape, np.nan)
    echo = np.full(shape, np.nan)
    conv = np.zeros(shape, bool)
    xeff = np.full(shape, np.nan)
    errors = {}
    dts, slices = [], []
    jobs = [(plan, iso, i, j) for i in range(shape[0]) for j in range(shape[1])]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_work, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_work(job) for job in jobs]
    for i, j, out, err in results:
        if err is not None:
            errors[(i, j)] = err
            continue
        eta[i, j] = out["eta"]
        fid[i, j] = out["fidelity"]
        echo[i, j] = out["echo_time"]
        conv[i, j] = out["converged"]
        xeff[i, j] = out["xi_eff"]
        dts.append(out["dt"])
        slices.append(out["slices"])
    meta = {
        "code_version": __version__,
        "isotope": iso.name,
        "engine": {
            "dt_rule": "min(1/Gamma, 2pi/max|delta|)/64",
            "dt_range": [_fmt(min(dts)), _fmt(max(dts))] if dts else None,
            "slices_range": [min(slices), max(slices)] if slices else None,
        },
        "failed_points": len(errors),
    }
    return SweepResult(plan, eta, fid, echo, conv, xeff, errors, meta)


# ---------------------------------------------------------------------------
# optimum search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Optimum:
    i: int
    j: int
    xi: float
    T0: float
    eta: float
    xi_eff: float
    interior: bool
    refined_xi: float
    refined_eta: float


class NoOptimumError(ValueError):
    pass


def _parabola(x, y):
    """Vertex of the parabola through three points."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / den
    if a >= 0:
        return None
    xv = -b / (2 * a)
    return xv, c - b * b / (4 * a)


def find_optimum(result: SweepResult, refine: bool = True) -> Optimum:
    """Grid argmax of efficiency; ties go to the smaller thickness.

    With ``refine`` the thickness coordinate is polished by a parabola through
    the argmax and its two neighbours along the thickness axis.
    """
    eta = np.where(np.isfinite(result.eta), result.eta, -np.inf)
    if not np.any(eta > 0):
        raise NoOptimumError("no positive efficiency on the grid")
    # C-order argmax returns the first maximum, i.e. the smallest xi index
    i, j = np.unravel_index(int(np.argmax(eta)), eta.shape)
    n_xi, n_T = eta.shape
    interior = 0 < i < n_xi - 1 and (n_T == 1 or 0 < j < n_T - 1)
    xs = result.plan.xi_values
    rx, re = xs[i], float(eta[i, j])
    if refine and 0 < i < n_xi - 1:
        v = _parabola(xs[i - 1:i + 2], eta[i - 1:i + 2, j])
        if v is not None and xs[i - 1] <= v[0] <= xs[i + 1]:
            rx, re = v
    xi_eff = result.xi_eff[i, j] * rx / xs[i] if xs[i] > 0 else result.xi_eff[i, j]
    return Optimum(int(i), int(j), xs[i], result.plan.T0_values[j], float(eta[i, j]),
                   float(xi_eff), bool(interior), float(rx), float(re))


def ridge(result: SweepResult) -> list:
    """Per-T0 optimum over thickness: list of (T0, refined xi, refined xi_eff, eta, interior)."""
    out = []
    xs = result.plan.xi_values
    for j, T0 in enumerate(result.plan.T0_values):
        col = np.where(np.isfinite(result.eta[:, j]), result.eta[:, j], -np.inf)
        i = int(np.argmax(col))
        inner = 0 < i < len(xs) - 1
        rx, re = xs[i], float(col[i])
        if inner:
            v = _parabola(xs[i - 1:i + 2], col[i - 1:i + 2])
            if v is not None:
                rx, re = v
        scale = result.xi_eff[i, j] / xs[i] if xs[i] > 0 else 0.0
        out.append((T0, float(rx), float(rx * scale), re, inner))
    return out
