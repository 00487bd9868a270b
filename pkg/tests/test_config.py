import json

import pytest

from znfc.config import (
    PLAN_SCHEMA,
    RUN_DEFAULTS,
    RUN_SCHEMA,
    ConfigError,
    axis_values,
    merged,
    parse_json,
    plan_from_doc,
    resolve_run,
)


def test_defaults_resolve_to_reference_setup():
    run = resolve_run(merged(RUN_DEFAULTS, {}))
    assert run.comb.tooth_count == 8
    assert run.fwhm == pytest.approx(1.41, abs=0.01)
    assert run.config["input"]["fwhm"] == run.fwhm
    assert run.config["grid"]["dt"] > 0
    assert run.switch is None


def test_error_carries_line_number():
    text = '{\n  "B": 0.02,\n  "L": -1\n}\n'
    with pytest.raises(ConfigError, match=r"cfg.json:3: L"):
        parse_json(text, RUN_SCHEMA, "cfg.json")


def test_unknown_key_line_number():
    text = '{\n  "B": 0.02,\n\n  "colour": "red"\n}\n'
    with pytest.raises(ConfigError, match=r"cfg.json:4:.*colour"):
        parse_json(text, RUN_SCHEMA, "cfg.json")


def test_bad_json_line_number():
    with pytest.raises(ConfigError, match=r"x:2: invalid JSON"):
        parse_json('{"B": 1,\n oops}', RUN_SCHEMA, "x")


def test_switch_and_isotope_inline():
    doc = {"isotope": {"name": "Tx", "E0": 6.0, "T1": 8.0, "I_g": 0.5, "I_e": 1.5,
                       "g_g": 1.0, "g_e": 0.5, "sigma_R": 1e-18, "ratio_R_ph": 10.0,
                       "f_LM": 0.9, "number_density": 5e22},
           "B": 0.05, "switch": {"T_sw": 2.0}}
    parse_json(json.dumps(doc), RUN_SCHEMA)
    run = resolve_run(merged(RUN_DEFAULTS, doc))
    assert run.comb.tooth_count == 2
    assert run.switch.T_sw == 2.0 and run.switch.kind == "zeeman-flip"


def test_switch_outside_grid():
    cfg = merged(RUN_DEFAULTS, {"switch": {"T_sw": 500.0}, "grid": {"t_stop": 20.0}})
    with pytest.raises(ConfigError):
        resolve_run(cfg)


def test_uniform_comb_config():
    run = resolve_run(merged(RUN_DEFAULTS, {"comb": "uniform", "uniform_finesse": 40}))
    assert run.comb.finesse == pytest.approx(40)
    assert run.comb.weights == pytest.approx([1 / 8] * 8)
    with pytest.raises(ConfigError):
        resolve_run(merged(RUN_DEFAULTS, {"comb": "uniform", "B": 0.0}))


def test_incomplete_isotope_is_config_error():
    with pytest.raises(ConfigError):
        resolve_run(merged(RUN_DEFAULTS, {"isotope": "Sc45"}))
    with pytest.raises(ConfigError):
        resolve_run(merged(RUN_DEFAULTS, {"isotope": "nope"}))


def test_plan_axes():
    assert axis_values([1, 2]) == [1.0, 2.0]
    assert axis_values({"start": 0, "stop": 1, "num": 3}) == [0.0, 0.5, 1.0]
    doc = parse_json(json.dumps({"xi": {"start": 5, "stop": 35, "num": 4}, "T0": [10],
                                 "loss": "realistic"}), PLAN_SCHEMA)
    plan = plan_from_doc(doc)
    assert plan.shape == (4, 1) and plan.loss == "realistic"
    with pytest.raises(ConfigError):
        plan_from_doc({"xi": [3, 1], "T0": [1]})
