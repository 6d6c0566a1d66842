import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maserlab.config import (RunManifest, SweepSpec, config_hash, parse_config, parse_config_text, parse_range,
                             table_one_config)
from maserlab.core import table_one
from maserlab.errors import ConfigError
from maserlab.io import csv_text, format_value, read_csv, write_csv


def dump(obj):
    return json.dumps(obj, indent=2)


def test_table_one_config(tmp_path):
    path = tmp_path / "t1.json"
    path.write_text(dump(table_one_config()))
    cfg = parse_config(path)
    p = cfg.physical
    assert p.omega_m == pytest.approx(2 * math.pi * 50, rel=1e-15)
    assert p.gamma_m == pytest.approx(3.14e-2, rel=1e-3)
    assert p.g == pytest.approx(31.4159, rel=1e-5)
    ref = table_one()
    for name in ("omega_m", "gamma_m", "gamma_up", "gamma_down", "gamma_phi", "g", "delta", "n_bath"):
        assert getattr(p, name) == pytest.approx(getattr(ref, name), rel=1e-15), name


def test_eta_shorthand():
    cfg = parse_config_text(dump(table_one_config(eta=0.25)))
    assert cfg.physical.g == pytest.approx(78.5, rel=1e-3)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    with pytest.raises(ConfigError):
        parse_config(path)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")


def test_unknown_key_has_location():
    raw = table_one_config()
    raw["physical"]["gama_m"] = 1.0
    with pytest.raises(ConfigError, match=r"cfg\.json:\d+: physical\.gama_m: unknown key"):
        parse_config_text(dump(raw), source="cfg.json")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config_text(dump({"physical": {}, "plots": {}}))


def test_invalid_json_has_location():
    with pytest.raises(ConfigError, match=r"cfg\.json:2:"):
        parse_config_text('{\n  "physical": ,\n}', source="cfg.json")


def test_hz_prefix_only_on_rates():
    raw = table_one_config()
    raw["physical"]["gamma_1"] = "hz:100"
    cfg = parse_config_text(dump(raw))
    assert cfg.physical.gamma_1 == pytest.approx(200 * math.pi, rel=1e-15)
    raw["physical"]["n_bath"] = "hz:5"
    with pytest.raises(ConfigError, match="only allowed on rate fields"):
        parse_config_text(dump(raw))
    raw = table_one_config()
    raw["physical"]["gamma_1"] = "fast"
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config_text(dump(raw))


def test_dressing_conflicts_with_explicit_coupling():
    raw = table_one_config()
    raw["dressing"] = {"Delta": "hz:30", "Omega": "hz:40", "g0": 40.0}
    with pytest.raises(ConfigError, match="conflicts with the dressing section"):
        parse_config_text(dump(raw))
    del raw["physical"]["eta"]
    cfg = parse_config_text(dump(raw))
    assert cfg.physical.g == pytest.approx(40.0 * 0.8, rel=1e-15)
    assert abs(cfg.physical.delta) < 1e-9  # 30-40-50 triangle: dressed splitting equals omega_m


def test_quality_factor_rules():
    raw = table_one_config()
    raw["physical"]["gamma_m"] = 0.1
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config_text(dump(raw))


def test_pump_and_relaxation_forms_are_exclusive():
    raw = table_one_config()
    raw["physical"]["gamma_up"] = 1.0
    with pytest.raises(ConfigError, match="mixes"):
        parse_config_text(dump(raw))
    raw = table_one_config()
    del raw["physical"]["s_z0"]
    with pytest.raises(ConfigError, match="together"):
        parse_config_text(dump(raw))


def test_langevin_and_oracle_sections():
    raw = table_one_config()
    raw["langevin"] = {"n_traj": 10, "dt": 0.05, "seed": 7, "init": "point", "point": [1.0, 2.0],
                       "omega_rot": "hz:1"}
    raw["oracle"] = {"fock": 12, "n_start": 2}
    cfg = parse_config_text(dump(raw))
    assert cfg.langevin.point == (1.0, 2.0)
    assert cfg.langevin.omega_rot == pytest.approx(2 * math.pi, rel=1e-15)
    assert cfg.oracle.fock == 12
    raw["oracle"] = {"fock": 1}
    with pytest.raises(ConfigError):
        parse_config_text(dump(raw))
    raw["oracle"] = {"fock": 10}
    raw["langevin"]["n_traj"] = 0
    with pytest.raises(ConfigError):
        parse_config_text(dump(raw))


def _shuffled(d, rng):
    if isinstance(d, dict):
        keys = list(d)
        rng.shuffle(keys)
        return {k: _shuffled(d[k], rng) for k in keys}
    return d


@given(st.integers(0, 2 ** 32 - 1))
def test_hash_invariant_under_key_order(seed):
    raw = table_one_config()
    raw["langevin"] = {"n_traj": 10, "dt": 0.05, "seed": 7}
    shuffled = _shuffled(raw, np.random.default_rng(seed))
    assert config_hash(shuffled) == config_hash(raw)
    assert parse_config_text(json.dumps(shuffled)).config_hash == config_hash(raw)


def test_hash_changes_with_content():
    a, b = table_one_config(), table_one_config(s_z0=0.3)
    assert config_hash(a) != config_hash(b)


def test_sweep_spec_validation():
    spec = SweepSpec.parse("delta", "-1000:1000:5")
    np.testing.assert_array_equal(spec.values(), [-1000, -500, 0, 500, 1000])
    assert SweepSpec.parse("eta", "0.01:1:3", scale="log").values()[1] == pytest.approx(0.1, rel=1e-15)
    assert parse_range("hz:1:hz:2:3")[:2] == (pytest.approx(2 * math.pi), pytest.approx(4 * math.pi))
    for bad in [("omega_m", "0:1:3"), ("delta", "0:1:1"), ("delta", "1:0:3"), ("s_z0", "0:1:3", "log"),
                ("s_z0", "0:1:3", "cubic"), ("delta", "0:1"), ("delta", "a:1:3"), ("delta", "0:1:2.5")]:
        with pytest.raises(ConfigError):
            SweepSpec.parse(*bad)


def test_manifest(tmp_path):
    m = RunManifest(config_hash="abc", seed=3, command="maserlab tables", outputs=["x.csv"])
    m.write(tmp_path / "manifest.json")
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["config_hash"] == "abc" and data["seed"] == 3
    assert {"maserlab", "numpy", "scipy", "numba", "python"} <= set(data["versions"])


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_value(x)) == x


def test_format_special_values():
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(np.int64(3)) == "3"
    assert format_value(np.float64(0.1)) == "0.10000000000000001"
    assert format_value(True) == "true"


def test_csv_is_rfc4180(tmp_path):
    text = csv_text(["a", "b,c"], [[1.0, 2], [0.1, -0.25]])
    assert text == 'a,"b,c"\r\n1,2\r\n0.10000000000000001,-0.25\r\n'
    path = tmp_path / "x.csv"
    rows = np.random.default_rng(0).normal(size=(20, 3)) * 10.0 ** np.arange(-100, 200, 100)
    write_csv(path, ["x", "y", "z"], rows)
    header, back = read_csv(path)
    assert header == ["x", "y", "z"]
    np.testing.assert_array_equal(back, rows)
    assert path.read_bytes().count(b"\r\n") == 21


def test_csv_to_stdout(capsys):
    write_csv("-", ["x"], [[1.5]])
    assert capsys.readouterr().out == "x\r\n1.5\r\n"
