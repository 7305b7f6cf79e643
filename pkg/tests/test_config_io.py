import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgmarket.builtin import builtin_scenarios, get_builtin
from bgmarket.config_io import (
    ScenarioParseError,
    config_hash,
    emit_result,
    parse_scenario,
    read_csv,
    run_directory,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
    series_to_csv,
)
from bgmarket.experiments import ConfigError, run_scenario

GOOD = """\
name: demo
kind: ReducedComparison
params: {a: 2, b: 1, r: 0.1, F: 3, epsilon: 1e-1, gamma: 1}
limit: LiquidMarket
t_span: [0, 10]
"""


@pytest.mark.parametrize("name", sorted(builtin_scenarios()))
def test_builtin_roundtrip(name):
    sc = get_builtin(name)
    back = parse_scenario(serialize_scenario(sc))
    assert back == sc
    assert config_hash(back) == config_hash(sc)


def test_parse_minimal_and_defaults():
    sc = parse_scenario(GOOD)
    assert sc.params.epsilon == 0.1
    assert sc.start == (3.0, 0.1)
    assert sc.integrator.t_span == (0.0, 10.0)
    assert len(config_hash(sc)) == 16


def test_zero_epsilon_names_the_field():
    with pytest.raises(ConfigError) as info:
        parse_scenario(GOOD.replace("epsilon: 1e-1", "epsilon: 0"))
    assert any(e.startswith("params.epsilon") for e in info.value.errors)


def test_all_errors_collected():
    text = """\
name: ''
kind: Nope
params: {a: x, b: 1, r: 0.1, F: 3, epsilon: 1}
surprise: 1
"""
    with pytest.raises(ConfigError) as info:
        parse_scenario(text)
    errs = " | ".join(info.value.errors)
    for frag in ("name", "kind", "params.a", "params.gamma", "surprise"):
        assert frag in errs, frag


def test_unsorted_values_rejected():
    text = GOOD.replace("ReducedComparison", "ConvergenceSweep") + "values: [0.1, 0.01, 0.05]\n"
    with pytest.raises(ConfigError, match="values: must be strictly sorted"):
        parse_scenario(text)


def test_malformed_yaml_position():
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario("name: x\nparams: {a: 1,\n  b: [\n")
    assert info.value.line is not None
    with pytest.raises(ScenarioParseError):
        parse_scenario("- just\n- a list\n")


def test_hash_changes_with_content():
    a = parse_scenario(GOOD)
    b = parse_scenario(GOOD.replace("gamma: 1", "gamma: 2"))
    assert config_hash(a) != config_hash(b)
    assert run_directory("out", a).name == f"demo-{config_hash(a)}"


def test_dict_roundtrip():
    sc = get_builtin("fig10")
    assert scenario_from_dict(scenario_to_dict(sc)) == sc


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_csv_float_roundtrip(tmp_path_factory, xs):
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    arr = np.array(xs)
    path.write_text(series_to_csv({"t": np.arange(len(arr), dtype=float), "v": arr}))
    back = read_csv(path)
    assert np.array_equal(back["v"], arr)


def test_emit_writes_everything(tmp_path):
    sc = get_builtin("fig02b")
    res = run_scenario(sc)
    out = run_directory(tmp_path, sc)
    man = emit_result(res, out, ("csv", "summary", "svg"), sc)
    for f in ("scenario.yaml", "trajectory.csv", "summary.json", "trajectory.svg", "manifest.json"):
        assert (out / f).exists(), f
        assert f in man.files
    summary = json.loads((out / "summary.json").read_text())
    assert summary["metrics"]["P_inf"] == pytest.approx(2.9775)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(sc)
    assert config_hash(sc) in (out / "trajectory.svg").read_text()
    assert parse_scenario((out / "scenario.yaml").read_text()) == sc


def test_emit_is_byte_reproducible(tmp_path):
    sc = get_builtin("fig09")
    res = run_scenario(sc)
    emit_result(res, tmp_path / "a", ("csv", "summary", "svg"), sc)
    emit_result(run_scenario(sc), tmp_path / "b", ("csv", "summary", "svg"), sc)
    for f in ("comparison.csv", "summary.json", "comparison.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_emit_io_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    sc = get_builtin("fig02b")
    with pytest.raises(OSError, match="file"):
        emit_result(run_scenario(sc), blocker / "sub", ("csv",), sc)
