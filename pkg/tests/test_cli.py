import csv
import json
import math
import subprocess
import sys

import pytest

from totalpower import __version__
from totalpower import channel as ch
from totalpower import graphlab as gl
from totalpower import optimizer as op
from totalpower.checks import _graph
from totalpower.cli import load_config, main, sample_config_path


def run(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "totalpower", *map(str, args)], capture_output=True, text=True, cwd=cwd
    )


CONFIG = """\
[channel]
mode = physical
f_c_hz = 60e9
bandwidth_hz = 7e9
temperature_k = 300
alpha = 3

[system]
r_data_bps = 7e9

[data]
code_table = sample:code_table_sample.csv
characterization = sample:node_characterization_sample.csv
algorithms = A, B

[grid]
distances_m = {dist}
pe = {pe}

[options]
wire_mode = worst
include_uncoded = true
seed = 3
"""


def write_config(tmp_path, dist="3.2", pe="1e-6", name="run.ini"):
    path = tmp_path / name
    path.write_text(CONFIG.format(dist=dist, pe=pe))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ------------------------------------------------------------ threshold


def test_threshold_gallager_a():
    out = run("threshold", "--alg", "A", "--dv", 3, "--dc", 6)
    assert out.returncode == 0
    text = out.stdout.strip()
    assert len(text.split(".")[1]) == 6
    assert float(text) == pytest.approx(0.0394, abs=5e-4)


def test_threshold_b_equals_a_at_dv3(capsys):
    assert main(["threshold", "--alg", "A", "--dv", "3", "--dc", "6"]) == 0
    a = capsys.readouterr().out
    assert main(["threshold", "--alg", "B", "--dv", "3", "--dc", "6"]) == 0
    assert capsys.readouterr().out == a


def test_threshold_missing_degree_is_usage_error():
    out = run("threshold", "--alg", "A", "--dv", 3)
    assert out.returncode == 2
    assert "usage" in out.stderr


def test_threshold_invalid_degrees(capsys):
    assert main(["threshold", "--alg", "A", "--dv", "1", "--dc", "6"]) == 2


def test_version():
    out = run("--version")
    assert out.returncode == 0
    assert __version__ in out.stdout


# ------------------------------------------------------------ iters


def test_iters_feasible_and_infeasible(capsys):
    assert main(["iters", "--alg", "A", "--dv", "3", "--dc", "6", "--p0", "0.02", "--pe", "1e-9"]) == 0
    assert int(capsys.readouterr().out) > 0
    assert main(["iters", "--alg", "A", "--dv", "3", "--dc", "6", "--p0", "0.08", "--pe", "1e-9"]) == 1
    assert "infeasible" in capsys.readouterr().out


# ------------------------------------------------------------ bounds


def test_bounds_girth_eight(capsys):
    assert main(["bounds", "--dv", "3", "--dc", "6", "--girth", "8"]) == 0
    out = capsys.readouterr().out
    assert "blocklength lower bound: 10" in out
    assert "gamma interval" in out


def test_bounds_dense_branch(capsys):
    assert main(["bounds", "--dv", "5", "--dc", "20", "--girth", "10"]) == 0
    out = capsys.readouterr().out
    line = next(ln for ln in out.splitlines() if ln.startswith("dense crossing branch"))
    assert "applicable" in line and "not" not in line
    assert float(line.rsplit(" ", 1)[1]) == pytest.approx(math.log(32), abs=1e-5)


def test_bounds_odd_girth_rejected():
    assert run("bounds", "--dv", 3, "--dc", 6, "--girth", 7).returncode == 2


def test_bounds_conflicting_groups():
    out = run("bounds", "--dv", 3, "--dc", 6, "--girth", 8, "--pe", "1e-6", "--pt", 2, "--eta", 1)
    assert out.returncode == 2
    assert run("bounds", "--dv", 3, "--dc", 6, "--pe", "1e-6").returncode == 2


def test_bounds_pe_group(capsys):
    assert main(["bounds", "--dv", "3", "--dc", "6", "--pe", "1e-9", "--pt", "2", "--eta", "1"]) == 0
    assert "order level" in capsys.readouterr().out


# ------------------------------------------------------------ layout / power / mc


def test_layout_from_sample_graph(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    gl.write_graph(_graph("peg_3_6_g6.txt"), graph)
    seg = tmp_path / "seg.csv"
    assert main(["layout", "--graph", str(graph), "--segments", str(seg)]) == 0
    assert "girth 6" in capsys.readouterr().out
    assert seg.exists()
    # write-once
    assert main(["layout", "--graph", str(graph), "--segments", str(seg)]) == 3
    assert main(["layout", "--graph", str(graph), "--segments", str(seg), "--force"]) == 0


def test_layout_missing_graph_file(tmp_path):
    assert run("layout", "--graph", tmp_path / "nope.txt").returncode == 3


def test_layout_needs_some_graph():
    assert run("layout", "--dv", 3).returncode == 2


def test_power_report(capsys):
    assert main(["power", "--alg", "A", "--dv", "3", "--dc", "6", "--girth", "8", "--n", "268"]) == 0
    out = capsys.readouterr().out
    assert "parallel decoders" in out and "dBm" in out


def test_power_missing_characterization(tmp_path):
    out = run("power", "--alg", "A", "--dv", 3, "--dc", 6, "--girth", 8, "--n", 268,
              "--characterization", tmp_path / "none.csv")
    assert out.returncode == 3


def test_mc_validate_is_deterministic(tmp_path):
    path = tmp_path / "g.txt"
    gl.write_graph(_graph("peg_3_6_g8.txt"), path)
    a = run("mc-validate", "--graph", path, "--p0", 0.03, "--trials", 4096, "--seed", 5)
    b = run("mc-validate", "--graph", path, "--p0", 0.03, "--trials", 4096, "--seed", 5)
    assert a.returncode in (0, 1)
    assert a.stdout == b.stdout
    assert "density evolution" in a.stdout


# ------------------------------------------------------------ config


def test_config_sample_loads():
    cfg = load_config(sample_config_path())
    assert cfg.distances == [1.0, 3.2, 10.0]
    assert cfg.include_uncoded


def test_config_missing_reference(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG.format(dist="1", pe="1e-6").replace("sample:code_table_sample.csv", "missing.csv"))
    out = run("sweep", "--config", path, "--out", tmp_path / "o.csv")
    assert out.returncode == 3
    assert "missing.csv" in out.stderr
    assert not (tmp_path / "o.csv").exists()


def test_config_not_found(tmp_path):
    assert run("optimize", "--config", tmp_path / "x.ini", "--distance", 1, "--pe", "1e-6").returncode == 3


def test_config_malformed(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[channel]\nmode = physical\n")
    assert run("optimize", "--config", path, "--distance", 1, "--pe", "1e-6").returncode == 3


# ------------------------------------------------------------ optimize / sweep


def test_one_point_sweep_matches_optimize(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "one.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 1
    capsys.readouterr()
    assert main(["optimize", "--config", str(cfg), "--distance", "3.2", "--pe", "1e-6"]) == 0
    text = capsys.readouterr().out
    assert f"strategy: {rows[0]['strategy_label']} " in text
    total = next(ln for ln in text.splitlines() if ln.startswith("total power"))
    dbm = float(total.split("(")[1].split()[0])
    assert float(rows[0]["p_total_dbm"]) == pytest.approx(dbm, abs=5e-4)


def test_sweep_column_monotone_in_pe(tmp_path):
    cfg = write_config(tmp_path, dist="3.2", pe="1e-4, 1e-6, 1e-8, 1e-10, 1e-12")
    out = tmp_path / "col.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    totals = [float(r["p_total_dbm"]) for r in read_rows(out)]
    assert totals == sorted(totals)


def test_sweep_is_byte_identical_and_write_once(tmp_path):
    cfg = write_config(tmp_path, dist="1.0, 10.0", pe="1e-5, 1e-9")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("sweep", "--config", cfg, "--out", a).returncode == 0
    assert run("sweep", "--config", cfg, "--out", b).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_rows(a)[0].keys() == set(op.SWEEP_COLUMNS)

    meta = json.loads((tmp_path / "a.csv.json").read_text())
    assert meta["seed"] == 3
    assert meta["tool_version"] == __version__
    assert meta["tie_break"] == op.TIE_BREAK_RULE
    assert meta["code_table_provenance"] == "sample"
    assert meta["rows"] == 4

    before = a.read_bytes()
    again = run("sweep", "--config", cfg, "--out", a)
    assert again.returncode == 3
    assert "refusing to overwrite" in again.stderr
    assert a.read_bytes() == before
    assert run("sweep", "--config", cfg, "--out", a, "--force").returncode == 0


def test_sweep_leaves_inputs_untouched(tmp_path):
    cfg = write_config(tmp_path)
    before = cfg.read_bytes()
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 0
    assert cfg.read_bytes() == before


def test_sweep_cli_grid_override(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--distance", "1", "--distance", "2",
                 "--pe", "1e-5"]) == 0
    assert [r["r_m"] for r in read_rows(out)] == ["1", "2"]


def test_sweep_needs_out():
    assert run("sweep").returncode == 2


def test_optimize_rejects_bad_pe():
    assert run("optimize", "--distance", 1, "--pe", 0.7).returncode == 2


def test_optimize_infeasible_exit(tmp_path, capsys):
    # only a girth-4 code: no independent iteration, so nothing is feasible
    table = tmp_path / "t.csv"
    table.write_text("# provenance: sample\ngirth,d_v,d_c,n_min\n4,3,6,100\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(
        CONFIG.format(dist="1", pe="1e-6")
        .replace("sample:code_table_sample.csv", str(table))
        .replace("include_uncoded = true", "include_uncoded = false")
    )
    assert main(["optimize", "--config", str(cfg), "--distance", "1", "--pe", "1e-6"]) == 1
    assert "infeasible" in capsys.readouterr().out


def test_include_uncoded_flag(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG.format(dist="1", pe="1e-4").replace("include_uncoded = true", "include_uncoded = false"))
    assert main(["optimize", "--config", str(cfg), "--distance", "1", "--pe", "1e-4"]) == 0
    coded = capsys.readouterr().out
    assert main(["--include-uncoded", "optimize", "--config", str(cfg), "--distance", "1", "--pe", "1e-4"]) == 0
    either = capsys.readouterr().out

    def total(text):
        return float(next(ln for ln in text.splitlines() if ln.startswith("total")).split()[2])

    assert total(either) <= total(coded)


# ------------------------------------------------------------ verify


def test_verify_lambert():
    out = run("verify", "lambert")
    assert out.returncode == 0
    assert "FAIL" not in out.stdout
    assert out.stdout.count("PASS") == 3


def test_verify_qbounds(capsys):
    assert main(["verify", "qbounds"]) == 0


def test_verify_unknown_suite():
    out = run("verify", "bogus")
    assert out.returncode == 2
    assert "invalid choice" in out.stderr


def test_verify_de_mc_quick(capsys):
    # the full-size run lives in the acceptance suite
    code = main(["verify", "de-mc", "--trials", "20000"])
    out = capsys.readouterr().out
    assert out.count("PASS") + out.count("FAIL") == 8
    assert code == (0 if "FAIL" not in out else 1)


def test_verify_scaling_node(capsys):
    assert main(["verify-scaling", "--model", "node"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_dbm_in_csv_matches_watts(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    row = read_rows(out)[0]
    assert float(row["p_total_dbm"]) == pytest.approx(
        float(ch.to_dbm(ch.from_dbm(float(row["p_t_dbm"])) + ch.from_dbm(float(row["p_dec_dbm"])))), abs=1e-6
    )
