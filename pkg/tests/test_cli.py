import csv
import io
import json
import subprocess
import sys

import pytest

from systolic_cost.cli import main
from systolic_cost.hardware import network_cost


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def table_cells(text):
    lines = text.splitlines()
    return [line.split() for line in lines[2:]]


def test_estimate_table_and_csv_agree(capsys, data_dir):
    code, table, _ = run(capsys, "estimate", data_dir / "conv3.yaml")
    assert code == 0
    code, text, _ = run(capsys, "estimate", data_dir / "conv3.yaml", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["idx", "kind", "dims", "macs", "cycles", "runtime_us", "util_pct"]
    # numeric cells are identical strings in both layouts
    for csv_row, line in zip(rows[1:], table.splitlines()[2:]):
        for cell in (csv_row[3], csv_row[4], csv_row[5], csv_row[6]):
            assert cell in line.split()
    total = rows[-1]
    assert total[0] == "total" and int(total[4]) == 163_488 and total[6] == "99.5"


def test_estimate_json_totals(capsys, data_dir, load):
    code, out, _ = run(capsys, "estimate", data_dir / "dws3.yaml", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["total_cycles"] == network_cost(load("dws3.yaml")).total_cycles == 969_376
    assert all("kind" in layer and "dims" in layer for layer in doc["layers"])


def test_flops_never_slower_than_hard(capsys, data_dir):
    _, hard, _ = run(capsys, "estimate", data_dir / "flat.yaml", "--format", "csv")
    _, flops, _ = run(capsys, "estimate", data_dir / "flat.yaml", "--format", "csv", "--model", "flops")
    hard_rows = list(csv.DictReader(io.StringIO(hard)))
    flops_rows = list(csv.DictReader(io.StringIO(flops)))
    assert len(hard_rows) == len(flops_rows)
    for h, f in zip(hard_rows, flops_rows):
        assert float(f["runtime_us"]) <= float(h["runtime_us"])


def test_roofline_model_runs(capsys, data_dir):
    code, out, _ = run(capsys, "estimate", data_dir / "fc_stack.yaml", "--model", "roofline", "--format", "json")
    assert code == 0
    assert json.loads(out)["total_cycles"] > 0


def test_blackbox_needs_lut(capsys, data_dir):
    code, _, err = run(capsys, "estimate", data_dir / "flat.yaml", "--model", "blackbox")
    assert code == 2 and "error" in err


def test_lut_round_trip(capsys, data_dir, tmp_path):
    lut = tmp_path / "lut.json"
    code, out, _ = run(capsys, "lut", "build", data_dir / "flat.yaml", "--out", lut)
    assert code == 0 and "wrote" in out and lut.exists()
    code, out, _ = run(capsys, "estimate", data_dir / "flat.yaml", "--model", "blackbox", "--lut", lut,
                       "--format", "json")
    assert code == 0
    assert json.loads(out)["model"] == "blackbox"
    lut.write_text("{}")
    code, _, _ = run(capsys, "estimate", data_dir / "flat.yaml", "--model", "blackbox", "--lut", lut)
    assert code == 1


def test_simulate_matches_estimate_when_compute_bound(capsys, data_dir):
    _, sim, _ = run(capsys, "simulate", data_dir / "exact.yaml", "--format", "json")
    _, est, _ = run(capsys, "estimate", data_dir / "exact.yaml", "--format", "json")
    sim, est = json.loads(sim), json.loads(est)
    for s, e in zip(sim["layers"], est["layers"]):
        assert s["compute_cycles"] == e["runtime_cycles"]
        if s["bound"] == "compute":
            assert s["total_cycles"] == e["runtime_cycles"]


def test_simulate_trace(capsys, data_dir, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "simulate", data_dir / "flat.yaml", "--trace", trace, "--format", "json")
    assert code == 0
    tiles = sum(layer["tiles"] for layer in json.loads(out)["layers"])
    rows = trace.read_text().splitlines()
    assert rows[0].startswith("layer_idx,tile_i,tile_j")
    assert len(rows) - 1 == tiles


def test_simulate_table(capsys, data_dir):
    code, out, _ = run(capsys, "simulate", data_dir / "flat.yaml")
    assert code == 0
    assert out.splitlines()[0].split()[-1] == "bound"
    assert table_cells(out)[-1][0] == "total"


def test_infeasible_is_model_error(capsys, data_dir, tmp_path):
    hw = tmp_path / "tiny.yaml"
    hw.write_text("onchip_bytes: 1000\n")
    code, _, err = run(capsys, "simulate", data_dir / "conv3.yaml", "--hw", hw)
    assert code == 2 and "on chip" in err


def test_optimize_report_is_deterministic(capsys, data_dir, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["optimize", data_dir / "pointwise1.yaml", "--lambda", "0", "--beta", "1", "--restarts", "2"]
    code, out, _ = run(capsys, *args, "--report", a)
    assert code == 0
    run(capsys, *args, "--report", b)
    assert a.read_text() == b.read_text()
    doc = json.loads(a.read_text())
    assert doc["final_channels"][0] in (128, 256)
    assert doc["lambda"] == 0.0 and doc["trajectory"]
    assert "cell0_channels" in out


@pytest.mark.parametrize("argv", [
    ["optimize", "flat.yaml"],
    ["optimize", "conv2.yaml", "--min-c", "300"],
    ["optimize", "conv2.yaml", "--lambda", "-1"],
])
def test_optimize_input_errors(capsys, data_dir, argv):
    argv = [argv[0], data_dir / argv[1], *argv[2:]]
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_optimize_failure_exit_code(capsys, data_dir, monkeypatch):
    from systolic_cost import optimizer
    from systolic_cost.dual import DiffScalar
    monkeypatch.setattr(optimizer, "hardware_loss", lambda *a, **k: DiffScalar(float("inf"), {"cell0": 1.0}))
    code, _, err = run(capsys, "optimize", data_dir / "pointwise1.yaml")
    assert code == 3 and "iteration 0" in err


def test_hypervolume(capsys, data_dir):
    code, out, _ = run(capsys, "hypervolume", data_dir / "front_points.csv")
    assert code == 0 and out.strip().endswith("hypervolume: 12.705")
    _, out, _ = run(capsys, "hypervolume", data_dir / "front_points.csv", "--format", "csv")
    assert out.strip().splitlines()[-1] == "hypervolume,12.705"
    _, out, _ = run(capsys, "hypervolume", data_dir / "front_points.csv", "--format", "json")
    assert json.loads(out) == {"hypervolume": pytest.approx(12.705), "front": [[1.05, 87.9]]}


@pytest.mark.parametrize("argv", [["estimate", "missing.yaml"], ["simulate", "missing.yaml"],
                                  ["hypervolume", "missing.csv"], ["estimate", "conv3.yaml", "--hw", "nope.yaml"]])
def test_missing_files(capsys, data_dir, argv):
    code, _, err = run(capsys, argv[0], data_dir / argv[1], *argv[2:])
    assert code == 1 and err.startswith("error:")


def test_usage_errors_exit_with_input_code(data_dir):
    for argv in (["estimate"], ["bogus"], ["estimate", str(data_dir / "conv3.yaml"), "--format", "xml"]):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 1


def test_module_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "systolic_cost", "hypervolume", str(data_dir / "front_points.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "12.705" in proc.stdout
