"""JSON run configurations and sweep plans: schemas, loading, resolution."""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass
from typing import Optional

import jsonschema
import numpy as np

from .engine import default_dt
from .medium import MediumStack, SwitchEvent, Waveform, znfc_stack
from .metrics import gaussian_input, matched_duration, pulse_halfspan
from .nuclear import (
    CombSpec,
    IsotopeParams,
    build_comb,
    get_isotope,
    optical_thickness,
    photoelectric_exponent,
    uniform_comb,
)
from .sweep import SweepPlan


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_isotope_inline = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "E0": {"type": ["number", "null"]},
        "T1": {"type": "number", "exclusiveMinimum": 0},
        "I_g": {"type": "number", "minimum": 0},
        "I_e": {"type": "number", "minimum": 0},
        "g_g": {"type": ["number", "null"]},
        "g_e": {"type": ["number", "null"]},
        "multipolarity": {"type": "integer", "minimum": 1},
        "spacing_rate": {"type": ["number", "null"]},
        "sigma_R": {"type": ["number", "null"]},
        "ratio_R_ph": {"type": ["number", "null"]},
        "f_LM": {"type": ["number", "null"]},
        "number_density": {"type": ["number", "null"]},
        "alpha_IC": {"type": ["number", "null"]},
        "resistivity": {"type": ["number", "null"]},
        "notes": {"type": "string"},
    },
    "required": ["name", "T1", "I_g", "I_e"],
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "znfc run configuration",
    "type": "object",
    "properties": {
        "isotope": {"oneOf": [{"type": "string"}, _isotope_inline]},
        "B": {"type": "number", "minimum": 0},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "broadening": {"type": "number", "minimum": 1},
        "loss": {"type": "boolean"},
        "comb": {"enum": ["zeeman", "uniform"]},
        "uniform_finesse": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "input": {
            "type": "object",
            "properties": {
                "fwhm": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                                   {"const": "matched"}]},
                "center": _num,
            },
            "additionalProperties": False,
        },
        "switch": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "properties": {
                        "T_sw": {"type": "number", "minimum": 0},
                        "kind": {"enum": ["zeeman-flip", "velocity-flip"]},
                        "ramp": {"type": "number", "minimum": 0},
                    },
                    "required": ["T_sw"],
                    "additionalProperties": False,
                },
            ]
        },
        "grid": {
            "type": "object",
            "properties": {
                "t_start": {"type": ["number", "null"]},
                "t_stop": {"type": ["number", "null"]},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "slices": {"type": ["integer", "null"], "minimum": 1},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "dir": {"type": "string"},
                "prefix": {"type": "string"},
                "svg": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "strict": {"type": "boolean"},
    },
    "additionalProperties": False,
}

RUN_DEFAULTS = {
    "isotope": "Ta181",
    "B": 0.023,
    "L": 2.6,
    "broadening": 1.0,
    "loss": True,
    "comb": "zeeman",
    "uniform_finesse": None,
    "input": {"fwhm": "matched", "center": 0.0},
    "switch": None,
    "grid": {"t_start": None, "t_stop": None, "dt": None, "slices": None},
    "output": {"dir": ".", "prefix": "run", "svg": False},
    "strict": False,
}

_axis = {
    "oneOf": [
        {"type": "array", "items": _num, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _num, "stop": _num,
                           "num": {"type": "integer", "minimum": 1}},
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}

PLAN_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "znfc sweep plan",
    "type": "object",
    "properties": {
        "mode": {"enum": ["predetermined-znfc", "ondemand-znfc", "ondemand-dnfc"]},
        "loss": {"enum": ["ideal", "realistic"]},
        "isotope": {"type": "string"},
        "xi": _axis,
        "T0": _axis,
        "broadening": {"type": "number", "minimum": 1},
        "switch_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "input_fraction": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "uniform_finesse": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "n_teeth": {"type": ["integer", "null"], "minimum": 1},
        "verify": {"type": "boolean"},
        "workers": {"type": "integer", "minimum": 1},
        "output": RUN_SCHEMA["properties"]["output"],
    },
    "required": ["xi", "T0"],
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# loading with line numbers
# ---------------------------------------------------------------------------

def _line_of(text: str, path, extra_key: Optional[str] = None) -> int:
    pos = 0
    keys = [p for p in path if isinstance(p, str)]
    if extra_key:
        keys.append(extra_key)
    for key in keys:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if not m:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1


def parse_json(text: str, schema: dict, source: str = "<config>") -> dict:
    """Parse and validate; errors carry ``source:line`` positions."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = []
        for err in errors:
            extra = None
            m = re.search(r"\('([^']+)' was unexpected\)|'([^']+)' (?:was|were) unexpected",
                          err.message)
            if m:
                extra = m.group(1) or m.group(2)
            line = _line_of(text, list(err.absolute_path), extra)
            where = "/".join(map(str, err.absolute_path)) or "(root)"
            msgs.append(f"{source}:{line}: {where}: {err.message}")
        raise ConfigError("\n".join(msgs))
    return doc


def load_json(path, schema: dict) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_json(text, schema, str(path))


def merged(defaults: dict, doc: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# resolution into simulation objects
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ResolvedRun:
    config: dict
    isotope: IsotopeParams
    comb: CombSpec
    stack: MediumStack
    input: Waveform
    switch: Optional[SwitchEvent]
    fwhm: float
    xi: float
    slices: Optional[int]


def resolve_isotope(spec) -> IsotopeParams:
    if isinstance(spec, dict):
        return IsotopeParams.from_dict(spec)
    try:
        return get_isotope(spec)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


def resolve_run(cfg: dict) -> ResolvedRun:
    """Turn a validated configuration (defaults merged) into simulation inputs.

    Fills in derived values (matched duration, grid) so the returned
    ``config`` is the complete resolved configuration.
    """
    cfg = copy.deepcopy(cfg)
    iso = resolve_isotope(cfg["isotope"])
    try:
        comb = build_comb(iso, cfg["B"], broadening=cfg["broadening"])
        if cfg["comb"] == "uniform":
            if cfg["B"] == 0:
                raise ConfigError("uniform comb needs B > 0")
            gamma = comb.linewidth
            if cfg.get("uniform_finesse"):
                gamma = comb.spacing / cfg["uniform_finesse"]
            comb = uniform_comb(comb.tooth_count, comb.spacing, gamma)
        xi = optical_thickness(iso, cfg["L"])
        pe = photoelectric_exponent(iso, cfg["L"]) if cfg["loss"] else 0.0
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    stack = znfc_stack(comb, xi, pe, cfg["L"])

    fwhm = cfg["input"]["fwhm"]
    if fwhm == "matched":
        fwhm = matched_duration(comb)
    center = cfg["input"].get("center", 0.0)
    g = cfg["grid"]
    dt = g.get("dt") or default_dt(stack)
    pad = 1.05 * pulse_halfspan(fwhm)
    T0 = comb.rephasing_time
    t_start = g.get("t_start")
    if t_start is None:
        t_start = center - pad
    t_stop = g.get("t_stop")
    if t_stop is None:
        sw = cfg.get("switch")
        horizon = 1.8 * T0 if math.isfinite(T0) else 5 * iso.T1
        if sw:
            horizon = max(horizon, 2 * sw["T_sw"] + T0 / 2 if math.isfinite(T0) else 0)
        t_stop = center + horizon + pad
    try:
        wf = gaussian_input(fwhm, center, (t_start, t_stop, dt))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    switch = None
    if cfg.get("switch"):
        s = cfg["switch"]
        switch = SwitchEvent(s["T_sw"], s.get("kind", "zeeman-flip"), s.get("ramp", 0.0))
        if not wf.t_start <= switch.T_sw <= wf.t_stop:
            raise ConfigError("switch time outside the time grid")

    cfg["input"] = {"fwhm": float(fwhm), "center": float(center)}
    cfg["grid"] = {"t_start": float(wf.t_start), "t_stop": float(wf.t_stop),
                   "dt": float(dt), "slices": g.get("slices")}
    if isinstance(cfg["isotope"], str):
        cfg["isotope"] = iso.name
    return ResolvedRun(cfg, iso, comb, stack, wf, switch, float(fwhm), xi, g.get("slices"))


def axis_values(spec) -> list:
    if isinstance(spec, list):
        return [float(v) for v in spec]
    return np.linspace(spec["start"], spec["stop"], spec["num"]).tolist()


def plan_from_doc(doc: dict) -> SweepPlan:
    keys = ("mode", "loss", "isotope", "broadening", "switch_fraction", "input_fraction",
            "uniform_finesse", "n_teeth", "verify")
    kw = {k: doc[k] for k in keys if k in doc}
    try:
        return SweepPlan(xi_values=axis_values(doc["xi"]), T0_values=axis_values(doc["T0"]), **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
