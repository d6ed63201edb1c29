from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from ptwell.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_square_well_spectrum(capsys):
    code, doc = run_json(capsys, "spectrum", "--a", "0.5", "--xi", "0", "--n-max", "4")
    assert code == 0 and doc["ok"]
    ks = [lv["kappa"]["re"] for lv in doc["result"]["points"][0]["levels"]]
    assert ks == pytest.approx([math.pi / 2 * n for n in range(1, 5)], abs=1e-12)
    man = doc["manifest"]
    assert man["command"] == "spectrum" and man["params"]["xi"] == "0"
    assert {"version", "tolerances", "timestamp"} <= set(man)


def test_crossing_reports_merger(capsys):
    code, doc = run_json(capsys, "spectrum", "--a", "0.5", "--xi", "4.442882938", "--n-max", "2")
    levels = doc["result"]["points"][0]["levels"]
    assert code == 0 and doc["result"]["merger"]
    assert all(lv["degenerate"] for lv in levels)
    assert all(abs(lv["kappa"]["re"] - math.pi) < 1e-6 for lv in levels)


def test_broken_phase_needs_flag(capsys):
    code, doc = run_json(capsys, "spectrum", "--a", "0.5", "--xi", "5.5", "--n-max", "4")
    assert code == 2 and doc["error"]["type"] == "MergerError"
    code, doc = run_json(capsys, "spectrum", "--a", "0.5", "--xi", "5.5", "--n-max", "4",
                         "--allow-complex")
    levels = doc["result"]["points"][0]["levels"]
    assert code == 0
    assert [lv["regime"] for lv in levels] == ["real", "complex-pair", "complex-pair", "real"]
    assert levels[2]["energy"]["im"] == pytest.approx(3.95052, abs=1e-4)


def test_csv_has_manifest_line(capsys):
    code, out = run(capsys, "spectrum", "--xi", "1", "--n-max", "3", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# manifest {")
    assert lines[1].startswith("xi,n,kappa") and len(lines) == 5


def test_sweep_marks_failed_points(capsys):
    code, out = run(capsys, "spectrum", "--sweep-xi", "4.9:5.2:0.1", "--n-max", "4",
                    "--workers", "2", "--format", "csv")
    rows = out.splitlines()[2:]
    assert code == 1
    assert sum(r.endswith("MergerError") for r in rows) == 2


def test_out_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PTWELL_OUT_DIR", str(tmp_path))
    code, out = run(capsys, "crossings", "--m-max", "1", "--format", "csv")
    target = tmp_path / "crossings.csv"
    assert code == 0 and out.strip() == str(target) and target.exists()


def test_critical(capsys):
    code, doc = run_json(capsys, "critical", "--a", "0.5")
    assert code == 0
    assert doc["result"]["xi_crit"] == pytest.approx(5.059764944, abs=1e-8)
    assert doc["result"]["merging_levels"] == [2, 3]


def test_series_table(capsys):
    code, doc = run_json(capsys, "series", "--kind", "z", "--order", "11")
    cmp = doc["result"]["z"]["printed_comparison"]
    assert code == 0 and cmp["exact"] and cmp["checked"] == 12
    terms = {tuple(t["exponents"]): t["coefficient"] for t in doc["result"]["z"]["terms"]}
    assert terms[(6, 6)] == "7/6" and terms[(10, 10)] == "83/40"


def test_matrix_series_reports_mismatches(capsys):
    _, doc = run_json(capsys, "series", "--kind", "matrix")
    mism = doc["result"]["sqrt2_S"]["printed_comparison"]["mismatches"]
    assert [m[0] for m in mism] == [[5, 4], [7, 6], [8, 6]]


def test_metric_summary(capsys):
    code, doc = run_json(capsys, "metric", "--a", "0.5", "--xi", "2", "--N", "8")
    r = doc["result"]
    assert code == 0
    assert r["gram_residual"] < 1e-9 and r["positivity_margin"] > 0
    assert r["quasi_hermiticity_residual"] < 1e-8
    assert r["signs_mixed"]


def test_wavefunction_header(capsys):
    code, doc = run_json(capsys, "wavefunction", "--a", "0.25", "--xi", "2", "--n", "2",
                         "--grid-points", "11")
    r = doc["result"]
    assert code == 0 and len(r["grid"]) == 11
    assert r["jump_residual"] < 1e-10 and r["coefficients"]["alpha"] == 1.0


def test_wavefunction_on_double_root_fails(capsys):
    code, doc = run_json(capsys, "wavefunction", "--a", "0.5", "--xi", "4.442882938158366", "--n", "1")
    assert code == 2 and doc["error"]["type"] == "ExceptionalPointError"


def test_oracle_comparison(capsys):
    code, doc = run_json(capsys, "oracle", "--a", "0.5", "--xi", "3", "--M", "128",
                         "--richardson", "--rel-tol", "1e-3")
    assert code == 0
    assert max(doc["result"]["comparison"]["relative_error"]) < 1e-3


def test_verify_subset(capsys):
    code, doc = run_json(capsys, "verify", "--only", "1,2,4")
    assert code == 0
    assert [c["number"] for c in doc["result"]["criteria"]] == [1, 2, 4]


def test_output_is_reproducible(capsys):
    outs = []
    for _ in range(2):
        _, doc = run_json(capsys, "crossings", "--m-max", "2")
        doc["manifest"].pop("timestamp")
        outs.append(json.dumps(doc, sort_keys=True))
    assert outs[0] == outs[1]


def test_bad_decimal_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["spectrum", "--xi", "1e"])
    assert info.value.code == 2


def test_domain_error_record(capsys):
    code, doc = run_json(capsys, "spectrum", "--a", "1.2", "--xi", "1")
    assert code == 2 and doc["error"]["type"] == "DomainError"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ptwell.cli", "crossings", "--m-max", "1"],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["ok"]
