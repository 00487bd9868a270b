"""Command-line front end: ``znfc simulate | sweep | oracle | isotope``.

Exit codes: 0 success, 1 usage or configuration error, 2 tolerance failure
under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    PLAN_SCHEMA,
    RUN_DEFAULTS,
    RUN_SCHEMA,
    ConfigError,
    load_json,
    merged,
    parse_json,
    plan_from_doc,
    resolve_run,
)
from .engine import ResolutionWarning, SimulationError, rel_l2, simulate
from .metrics import detect_echo
from .nuclear import (
    build_comb,
    builtin_isotopes,
    eddy_decay_time,
    g_factor_spacing_rate,
    get_isotope,
    spacing_rate_mhz,
)
from .oracle import analytic_echo, echo_amplitude, propagate
from .sweep import NoOptimumError, find_optimum, run_sweep
from . import svg
from .units import to_khz

log = logging.getLogger("znfc")

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2
ORACLE_FFT_TOL = 1e-3
ORACLE_EQ2_TOL = 0.05


def _f(v) -> str:
    return f"{float(v):.10g}"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _meta(out_dir: Path, prefix: str, command: str, started: float) -> None:
    meta = {"command": command, "version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
            "runtime_s": round(time.time() - started, 3)}
    _write(out_dir / f"{prefix}_meta.json", _dump(meta))


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _run_config(args) -> dict:
    doc = {}
    if args.config:
        doc = load_json(args.config, RUN_SCHEMA)
    cfg = merged(RUN_DEFAULTS, doc)
    over = {
        "isotope": args.isotope, "B": args.B, "L": args.L, "broadening": args.broadening,
    }
    for k, v in over.items():
        if v is not None:
            cfg[k] = v
    if args.no_loss:
        cfg["loss"] = False
    if args.uniform is not None:
        cfg["comb"] = "uniform"
        cfg["uniform_finesse"] = args.uniform or None
    if args.fwhm is not None:
        cfg["input"]["fwhm"] = "matched" if args.fwhm == "matched" else float(args.fwhm)
    if args.T_sw is not None:
        cfg["switch"] = {"T_sw": args.T_sw, "kind": args.switch_kind, "ramp": args.ramp}
    for k in ("dt", "slices", "t_stop"):
        if getattr(args, k) is not None:
            cfg["grid"][k] = getattr(args, k)
    if args.out_dir is not None:
        cfg["output"]["dir"] = args.out_dir
    if args.prefix is not None:
        cfg["output"]["prefix"] = args.prefix
    if args.svg is not None:
        cfg["output"]["svg"] = args.svg
    if args.strict:
        cfg["strict"] = True
    # re-validate after overrides so flags obey the same schema
    parse_json(json.dumps(cfg, indent=1), RUN_SCHEMA, "<resolved config>")
    return cfg


def _add_run_flags(p):
    p.add_argument("config", nargs="?", help="JSON run configuration")
    p.add_argument("--isotope")
    p.add_argument("--B", type=float, help="magnetic field (T)")
    p.add_argument("--L", type=float, help="absorber thickness (um)")
    p.add_argument("--broadening", type=float, help="linewidth multiple of Gamma0")
    p.add_argument("--no-loss", action="store_true", help="disable off-resonant loss")
    p.add_argument("--uniform", type=float, nargs="?", const=0.0, default=None,
                   metavar="FINESSE", help="equal-weight comb, optionally with this finesse")
    p.add_argument("--fwhm", help="input field FWHM (us) or 'matched'")
    p.add_argument("--T-sw", dest="T_sw", type=float, help="switch time (us)")
    p.add_argument("--switch-kind", default="zeeman-flip",
                   choices=["zeeman-flip", "velocity-flip"])
    p.add_argument("--ramp", type=float, default=0.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-stop", dest="t_stop", type=float)
    p.add_argument("--slices", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--prefix")
    p.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--strict", action="store_true", help="warnings and tolerance breaches fail")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def timeseries_csv(cfg: dict, inp, out) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg, sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["tau_us", "in_intensity", "out_intensity", "out_phase"])
    for t, a, b in zip(inp.times, inp.samples, out.samples):
        w.writerow([_f(t), _f(abs(a) ** 2), _f(abs(b) ** 2), _f(np.angle(b))])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _run_config(args)
    run = resolve_run(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("error" if cfg["strict"] else "default", ResolutionWarning)
        res = simulate(run.input, run.stack, run.switch, slices=run.slices,
                       strict=cfg["strict"])
    T0 = run.comb.rephasing_time
    report = None
    if math.isfinite(T0):
        t_min = (run.switch.T_sw if run.switch else T0 / 2) + run.fwhm / 2
        rep = detect_echo(res.output, run.input, t_min, T0)
        report = rep.to_dict() if rep.found else None
    out_dir = Path(cfg["output"]["dir"])
    prefix = cfg["output"]["prefix"]
    resolved = run.config
    _write(out_dir / f"{prefix}_timeseries.csv", timeseries_csv(resolved, run.input, res.output))
    comb = {"tooth_count": run.comb.tooth_count, "spacing_khz": _f(to_khz(run.comb.spacing)),
            "finesse": _f(run.comb.finesse) if run.comb.spacing else None,
            "T0_us": _f(T0) if math.isfinite(T0) else None,
            "xi": _f(run.xi), "beta": _f(run.stack.beta),
            "xi_eff": _f(run.xi / (run.comb.finesse * run.comb.tooth_count))
            if run.comb.spacing else None}
    doc = {"config": resolved, "comb": comb, "slices": res.slices,
           "echo": None if report is None else {k: (_f(v) if isinstance(v, float) else
                                                    [_f(x) for x in v] if isinstance(v, list) else v)
                                                for k, v in report.items()}}
    _write(out_dir / f"{prefix}_echo.json", _dump(doc))
    if cfg["output"]["svg"]:
        text = svg.line_plot(run.input.times, {"input |Omega|^2": run.input.intensity,
                                               "output |Omega|^2": res.output.intensity},
                             title=f"{run.isotope.name}  B={cfg['B']} T  L={cfg['L']} um",
                             xlabel="retarded time (us)", ylabel="intensity")
        text = text.replace("\n", "\n<!-- config: " + json.dumps(resolved, sort_keys=True)
                            .replace("--", "- -") + " -->\n", 1)
        _write(out_dir / f"{prefix}.svg", text)
    _meta(out_dir, prefix, "simulate", started)
    if report:
        print(f"echo at {report['center']:.3f} us  efficiency {report['efficiency']:.4f}  "
              f"fidelity {report['fidelity']:.4f}")
    else:
        print("no echo")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def grid_csv(plan, values, label) -> str:
    buf = io.StringIO()
    buf.write("# plan: " + json.dumps(plan.to_dict(), sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([f"{label} \\ T0_us"] + [_f(v) for v in plan.T0_values])
    for xi, row in zip(plan.xi_values, values):
        w.writerow([_f(xi)] + ["nan" if not np.isfinite(v) else _f(v) for v in row])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    started = time.time()
    doc = load_json(args.plan, PLAN_SCHEMA)
    plan = plan_from_doc(doc)
    workers = args.workers or doc.get("workers", 1)
    out = RUN_DEFAULTS["output"] | doc.get("output", {})
    if args.out_dir:
        out["dir"] = args.out_dir
    if args.prefix:
        out["prefix"] = args.prefix
    if args.svg is not None:
        out["svg"] = args.svg
    out_dir, prefix = Path(out["dir"]), out["prefix"]
    result = run_sweep(plan, workers=workers)
    _write(out_dir / f"{prefix}.csv", result.to_csv())
    _write(out_dir / f"{prefix}.json", result.to_json() + "\n")
    _write(out_dir / f"{prefix}_eta_grid.csv", grid_csv(plan, result.eta, "xi"))
    _write(out_dir / f"{prefix}_fidelity_grid.csv", grid_csv(plan, result.fidelity, "xi"))
    if out["svg"]:
        text = svg.heatmap(plan.T0_values, plan.xi_values, result.eta,
                           title=f"efficiency, {plan.mode}, {plan.loss}",
                           xlabel="T0 (us)", ylabel="xi")
        _write(out_dir / f"{prefix}_eta.svg", text)
    _meta(out_dir, prefix, "sweep", started)
    try:
        opt = find_optimum(result)
        print(f"optimum eta {opt.refined_eta:.4f} at xi {opt.refined_xi:.3f} "
              f"(xi_eff {opt.xi_eff:.3f}), T0 {opt.T0:.3f} us"
              + ("" if opt.interior else "  [grid boundary]"))
    except NoOptimumError:
        print("no optimum")
    if result.errors:
        print(f"{len(result.errors)} grid points failed", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def oracle_report(run) -> dict:
    if run.switch is not None:
        raise ConfigError("oracle comparison needs a static medium (no switch)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        td = simulate(run.input, run.stack, slices=run.slices).output
    fd = propagate(run.input, run.stack)
    comb = run.comb
    uniform = bool(np.allclose(comb.weights, comb.weights[0]))
    rep = {"engine_vs_fft": rel_l2(td.samples, fd.samples), "uniform_comb": uniform}
    if comb.spacing > 0:
        T0 = comb.rephasing_time
        xi_eff = run.xi / (comb.finesse * comb.tooth_count)
        eq2 = analytic_echo(run.input, xi_eff, comb.finesse, run.stack.beta, T0)
        t = run.input.times
        m = (t > T0 / 2) & (t < 1.5 * T0)
        a_td = float(np.abs(td.samples[m]).max())
        a_eq = echo_amplitude(xi_eff, comb.finesse, run.stack.beta) * float(
            np.abs(run.input.samples).max())
        rep["engine_vs_eq2_echo"] = abs(a_td - a_eq) / a_eq if a_eq > 0 else 0.0
        rep["engine_vs_eq2_l2"] = rel_l2(td.samples, eq2.samples)
    else:
        # empty comb limit: all three routes reduce to beta * input
        eq2 = run.input.samples * run.stack.beta
        rep["engine_vs_eq2_l2"] = rel_l2(td.samples, eq2)
        rep["engine_vs_eq2_echo"] = 0.0
    rep["fft_ok"] = rep["engine_vs_fft"] < ORACLE_FFT_TOL
    rep["eq2_gated"] = uniform and comb.spacing > 0
    rep["eq2_ok"] = (not rep["eq2_gated"]) or rep["engine_vs_eq2_echo"] < ORACLE_EQ2_TOL
    return rep


def cmd_oracle(args) -> int:
    cfg = _run_config(args)
    run = resolve_run(cfg)
    rep = oracle_report(run)
    doc = {"config": run.config, "report": {k: (_f(v) if isinstance(v, float) else v)
                                           for k, v in rep.items()}}
    out_dir = Path(cfg["output"]["dir"])
    _write(out_dir / f"{cfg['output']['prefix']}_oracle.json", _dump(doc))
    print(f"engine vs FFT    rel L2 {rep['engine_vs_fft']:.3e}  "
          f"[{'ok' if rep['fft_ok'] else 'FAIL'} < {ORACLE_FFT_TOL:g}]")
    gate = ("ok" if rep["eq2_ok"] else "FAIL") if rep["eq2_gated"] else "not gated"
    print(f"engine vs closed form  echo amplitude dev {rep['engine_vs_eq2_echo']:.3e}  [{gate}]")
    if cfg["strict"] and not (rep["fft_ok"] and rep["eq2_ok"]):
        return EXIT_TOLERANCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# isotope
# ---------------------------------------------------------------------------

def isotope_report(name: str, fields=(0.01, 0.023, 0.05, 0.1, 1.0), L_um: float = 2.6) -> dict:
    iso = get_isotope(name)
    rep = {
        "name": iso.name,
        "I_g": iso.I_g,
        "I_e": iso.I_e,
        "tooth_count": iso.tooth_count,
        "T1_us": iso.T1,
        "gamma0_over_2pi_khz": to_khz(iso.gamma0),
        "spacing_rate_mhz_per_T": spacing_rate_mhz(iso),
        "g_factor_spacing_rate_mhz_per_T": g_factor_spacing_rate(iso),
        "complete": iso.complete,
        "missing": list(iso.missing_fields),
        "combs": [],
        "eddy_decay_ps": None,
    }
    if iso.spacing_rate_per_tesla() is not None:
        for B in fields:
            c = build_comb(iso, B)
            rep["combs"].append({"B_T": B, "spacing_khz": to_khz(c.spacing),
                                 "finesse": c.finesse, "T0_us": c.rephasing_time})
    if iso.resistivity is not None:
        rep["eddy_decay_ps"] = eddy_decay_time(L_um * 1e-6, math.inf, 1.0, iso.resistivity) * 1e12
    return rep


def cmd_isotope(args) -> int:
    if args.name in (None, "all"):
        names = [i.name for i in builtin_isotopes()]
    else:
        names = [args.name]
    reps = []
    for n in names:
        try:
            reps.append(isotope_report(n, L_um=args.L or 2.6))
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if args.json:
        print(_dump(reps), end="")
        return EXIT_OK
    for r in reps:
        rate = r["spacing_rate_mhz_per_T"]
        print(f"{r['name']}: I_g={r['I_g']:g} I_e={r['I_e']:g}  teeth={r['tooth_count']}  "
              f"Gamma0/2pi={r['gamma0_over_2pi_khz']:.4g} kHz  "
              f"spacing rate={'unknown' if rate is None else f'{rate:.4f} MHz/T'}")
        if r["missing"]:
            print(f"  incomplete: missing {', '.join(r['missing'])}")
        for c in r["combs"]:
            print(f"  B={c['B_T']:<6g} T  spacing={c['spacing_khz']:9.3f} kHz  "
                  f"F={c['finesse']:8.3f}  T0={c['T0_us']:9.3f} us")
        if r["eddy_decay_ps"] is not None:
            print(f"  eddy-current decay ({args.L or 2.6} um foil): {r['eddy_decay_ps']:.2f} ps")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="znfc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="single propagation run")
    _add_run_flags(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="efficiency / fidelity grid")
    s.add_argument("plan", help="JSON sweep plan")
    s.add_argument("--workers", type=int)
    s.add_argument("--out-dir")
    s.add_argument("--prefix")
    s.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle", help="time domain vs FFT vs closed form")
    _add_run_flags(s)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("isotope", help="comb properties of a built-in isotope")
    s.add_argument("name", nargs="?", default="all")
    s.add_argument("--L", type=float, help="foil thickness for the eddy estimate (um)")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_isotope)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResolutionWarning, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE if getattr(args, "strict", False) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
