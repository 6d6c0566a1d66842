import json
import math
import subprocess
import sys

import numpy as np
import pytest

from maserlab.cli import RATE_FIELDS, main
from maserlab.config import table_one_config
from maserlab.io import read_csv

BENCHMARK_EXACT = {  # eta: (g, s_z_th, gamma_opt_max, gain_margin, n_sat) from 40-digit arithmetic
    0.05: (15.707963267948966, 0.063661977236758134, 0.49348022005446793, 15.707963267948966, 506.60591821168885),
    0.10: (31.415926535897932, 0.015915494309189534, 1.9739208802178717, 62.831853071795865, 126.65147955292221),
    0.25: (78.539816339744831, 0.0025464790894703255, 12.337005501361698, 392.69908169872415, 20.264236728467555),
}


def write_cfg(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw, indent=2))
    return str(path)


def test_tables(tmp_path):
    out = tmp_path / "t2.csv"
    assert main(["tables", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["eta", "g", "s_z_th", "gamma_opt_max", "gain_margin", "n_sat"]
    for row in rows:
        np.testing.assert_allclose(row[1:], BENCHMARK_EXACT[row[0]], rtol=1e-13)


def test_rates_delta_sweep_threshold_center(tmp_path):
    raw = table_one_config(s_z0=0.015915494309189534)
    out = tmp_path / "rates.csv"
    assert main(["rates", "--config", write_cfg(tmp_path, raw), "--delta-sweep=-1000:1000:5",
                 "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["delta", *RATE_FIELDS]
    np.testing.assert_array_equal(rows[:, 0], [-1000, -500, 0, 500, 1000])
    gamma_m = 2 * math.pi * 50 / 1e4
    center = rows[2, header.index("gamma_opt")] / gamma_m
    assert center == pytest.approx(-1.0, rel=1e-12)
    # the Lorentzian is even in delta
    col = rows[:, header.index("gamma_opt")]
    assert col[0] == pytest.approx(col[4], rel=1e-14) and col[1] == pytest.approx(col[3], rel=1e-14)


def test_rates_to_stdout(capsys):
    assert main(["rates"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("delta,gamma_minus,")
    assert text.endswith("\r\n")


def test_fp_sidecar(tmp_path):
    out = tmp_path / "fp.csv"
    assert main(["fp", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "fp.json").read_text())
    assert side["mean_n"] == pytest.approx(1501.81387790193, rel=1e-8)
    assert side["n_las"] == pytest.approx(1464.8979513660311, rel=1e-13)
    assert side["mode_r"] == pytest.approx(math.sqrt(2 * side["n_las"]), rel=1e-2)
    header, rows = read_csv(out)
    assert header == ["r", "density"] and rows.shape == (4096, 2)


def test_meanfield_converges(tmp_path):
    out = tmp_path / "mb.csv"
    assert main(["meanfield", "--stop-at-steady", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["t", "re_alpha", "im_alpha", "abs_alpha2", "re_s", "im_s", "w"]
    assert rows[-1, 3] == pytest.approx(1464.8979513660311, rel=1e-3)
    assert rows[-1, 6] == pytest.approx(0.015915494309189534, rel=1e-3)


def test_langevin_emitters(tmp_path):
    base = ["langevin", "--traj", "64", "--t-end", "600", "--seed", "1"]
    out = tmp_path / "m.csv"
    assert main(base + ["--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["t", "mean_n", "var_n"]
    assert main(base + ["--emit", "radial", "--bins", "50", "--out", str(tmp_path / "r.csv")]) == 0
    assert read_csv(tmp_path / "r.csv")[1].shape == (50, 2)
    assert main(base + ["--emit", "g2", "--out", str(tmp_path / "g2.json")]) == 0
    g2 = json.loads((tmp_path / "g2.json").read_text())
    assert set(g2) == {"value", "stderr", "window"} and 0.9 < g2["value"] < 1.2
    assert main(base + ["--emit", "wigner", "--cell", "0.5", "--out", str(tmp_path / "w.csv")]) == 0
    assert read_csv(tmp_path / "w.csv")[0] == ["z", "p", "W"]


def test_oracle_small_case(tmp_path):
    raw = {"physical": {"omega_m": 1.0, "gamma_m": 1e-3, "gamma_1": 1.0, "gamma_2": 1.0, "s_z0": -1.0,
                        "g": 0.04, "n_bath": 1.0},
           "oracle": {"fock": 20, "n_start": 3}}
    cfg = write_cfg(tmp_path, raw)
    out = tmp_path / "o.csv"
    assert main(["oracle", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["t", "mean_n", "sz", "trace_err", "tail"]
    assert rows[0, 1] == pytest.approx(3.0)
    assert rows[:, 3].max() < 1e-10
    # an undersized truncation is reported as a numerical failure
    assert main(["oracle", "--config", cfg, "--fock", "6", "--n-start", "5", "--out", str(out)]) == 3


def test_exit_codes(tmp_path, capsys):
    raw = table_one_config()
    raw["physical"]["bogus"] = 1
    assert main(["tables", "--config", write_cfg(tmp_path, raw)]) == 2
    assert "unknown key 'bogus'" in capsys.readouterr().err
    assert main(["tables", "--config", str(tmp_path / "nope.json")]) == 2
    detuned = table_one_config()
    detuned["physical"]["delta"] = 10.0
    assert main(["meanfield", "--config", write_cfg(tmp_path, detuned, "d.json"), "--t-end", "1"]) == 4
    assert main(["sweep", "--var", "delta", "--range", "0:1:1"]) == 2
    assert main(["sweep", "--var", "delta", "--range", "0:1:3", "--diag", "plots"]) == 2


def test_sweep_rates_only_and_order(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--var", "s_z0", "--range=-0.2:0.2:9", "--threads", "4", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["s_z0", *RATE_FIELDS]
    np.testing.assert_allclose(rows[:, 0], np.linspace(-0.2, 0.2, 9), rtol=0, atol=1e-16)
    assert np.all(np.diff(rows[:, header.index("gamma_opt")]) < 0)
    assert (tmp_path / "s.csv.manifest.json").exists()


def test_sweep_is_byte_identical_across_runs_and_threads(tmp_path):
    args = ["sweep", "--var", "s_z0", "--range", "0.05:0.2:3", "--diag", "meanfield,langevin", "--traj", "32",
            "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--threads", "1", "--out", str(a)]) == 0
    assert main(args + ["--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header[-5:] == ["mb_n", "mb_w", "mean_n", "g2", "g2_stderr"]


def test_sweep_gamma_cool_columns(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["sweep", "--var", "gamma_cool", "--range", "0.01:1:4", "--scale", "log", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header[-5:] == ["gamma_tot", "n_eff", "s_z_th_tot", "threshold_occupation_product", "t_eff_max"]
    assert np.all(np.diff(rows[:, header.index("gamma_tot")]) > 0)


def test_oracle_validate_small(tmp_path):
    out = tmp_path / "v.json"
    code = main(["oracle-validate", "--draws", "1", "--out", str(out)])
    verdict = json.loads(out.read_text())
    assert code == (0 if verdict["passed"] else 3)
    assert len(verdict["draws"]) == 1 and len(verdict["detuning"]) == 5
    assert verdict["passed"]


def test_figure2_quick(tmp_path):
    out = tmp_path / "op_point"
    assert main(["figure2", "--quick", "--traj", "200", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"a_gain.csv", "b_mean_n.csv", "b_reference.json", "c_radial.csv", "c_reference.json",
                     "d_g2.csv", "d_reference.json", "manifest.json"}
    header, gmap = read_csv(out / "a_gain.csv")
    center = gmap[np.argmin(np.abs(gmap[:, 0])), header.index("s_z0=0.2")]
    assert center == pytest.approx(-0.39478417604357434 / (2 * math.pi * 50 / 1e4), rel=1e-12)
    assert center == pytest.approx(-12.6, rel=1e-2)
    assert json.loads((out / "b_reference.json").read_text())["n_las"] == pytest.approx(1464.898, rel=1e-6)
    assert json.loads((out / "d_reference.json").read_text())["s_z_th"] == pytest.approx(0.016, rel=1e-2)
    g2 = read_csv(out / "d_g2.csv")[1]
    assert g2.shape == (8, 5)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "maserlab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("maserlab ")
