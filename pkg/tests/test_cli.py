import csv
import io
import json
import math
import subprocess
import sys

import pytest

from sponge_spectra.cli import fmt, main, parse_range, q_grid, UsageError
from sponge_spectra.scenes import load_scene, scene_to_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_helpers():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true" and fmt(7) == "7" and fmt(float("nan")) == "nan"
    assert parse_range("3..5") == [3, 4, 5]
    assert parse_range("4,9") == [4, 9]
    with pytest.raises(UsageError):
        parse_range("5..3")
    assert q_grid(1.0, 1.0, 61).tolist() == [1.0]
    with pytest.raises(UsageError):
        q_grid(0.0, 1.0, 1)


def test_validate_builtins(capsys):
    code, out, _ = run(capsys, "validate", "--scene", "baranski-planar", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert report["valid"] and report["sppc"]
    assert sorted(report["admissible"]) == [[1, 2], [2, 1]]
    assert {o["status"] for o in report["orderings"]} == {"certified-in"}
    code, out, _ = run(capsys, "validate", "--scene", "fraser-jurga", "--format", "json")
    assert code == 0
    assert sorted(json.loads(out)["admissible"]) == [[1, 2, 3], [2, 1, 3]]
    code, out, _ = run(capsys, "validate", "--scene", "LG")
    assert code == 0 and "admissible: (1,2)" in out


def test_validate_duplicate_map(capsys, tmp_path):
    path = tmp_path / "dup.json"
    path.write_text(json.dumps({"dim": 2, "maps": [
        {"diag": ["1/2", "1/2"], "trans": ["0", "0"]},
        {"diag": ["1/2", "1/2"], "trans": ["0", "0"]}]}))
    code, out, _ = run(capsys, "validate", "--scene", str(path))
    assert code == 1
    assert "duplicate maps" in out


def test_validate_overlapping_scene_fails_separation(capsys, tmp_path):
    path = tmp_path / "overlap.json"
    path.write_text(json.dumps({"dim": 2, "maps": [
        {"diag": ["0.6", "1/2"], "trans": ["0", "0"]},
        {"diag": ["1/2", "1/2"], "trans": ["1/2", "1/2"]}]}))
    code, out, _ = run(capsys, "validate", "--scene", str(path), "--format", "json")
    report = json.loads(out)
    assert code == 1
    assert report["valid"] and not report["sppc"]
    assert report["sppc_witnesses"]


def test_parse_error_exit_code(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n "dim": 2,\n "maps": [\n')
    code, _, err = run(capsys, "validate", "--scene", str(path))
    assert code == 2
    assert "line" in err and "column" in err
    assert run(capsys, "spectrum", "--scene", "baranski-planar", "--measure", "a,b")[0] == 2
    assert run(capsys, "spectrum", "--scene", "baranski-planar", "--measure", "1")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2


def test_invalid_scene_rejected_by_computations(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 1, "maps": [{"diag": ["1"], "trans": ["0"]}]}))
    assert run(capsys, "spectrum", "--scene", str(path))[0] == 1


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--scene", "baranski-planar",
                       "--q-min", "-1", "--q-max", "2", "--q-steps", "4")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["q", "T", "argmax_ordering", "certified", "gap_to_upper_bound"]
    assert [float(r["q"]) for r in table] == [-1, 0, 1, 2]
    assert float(table[2]["T"]) == pytest.approx(0, abs=1e-9)
    assert float(table[3]["T"]) == pytest.approx(-2 / 3, abs=1e-6)


def test_spectrum_single_row(capsys):
    code, out, _ = run(capsys, "spectrum", "--scene", "baranski-planar", "--q-min", "1", "--q-max", "1")
    table = rows(out)
    assert code == 0 and len(table) == 1
    assert float(table[0]["T"]) == pytest.approx(0, abs=1e-12)


def test_spectrum_regime_switch(capsys):
    u = 0.6
    q_star = math.log(2) / math.log((1 - u) / u ** 2)
    assert q_star == pytest.approx(6.579, abs=1e-3)
    _, out, _ = run(capsys, "spectrum", "--scene", "baranski-planar", "--measure", "0.6,0.4",
                    "--q-min", "6", "--q-max", "7.2", "--q-steps", "7")
    table = rows(out)
    before = {r["argmax_ordering"] for r in table if float(r["q"]) < q_star}
    after = {r["argmax_ordering"] for r in table if float(r["q"]) > q_star}
    assert len(before) == 1 and len(after) == 1 and before != after


def test_spectrum_json_and_file_output(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "spectrum", "--scene", "self-similar", "--q-min", "-2", "--q-max", "2",
                       "--q-steps", "5", "--format", "json", "--output", str(target))
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert [r["T"] for r in data["rows"]] == pytest.approx([3, 2, 1, 0, -1], abs=1e-10)


def test_dimensions(capsys):
    code, out, _ = run(capsys, "dimensions", "--scene", "baranski-planar")
    data = json.loads(out)
    assert code == 0
    s = math.log((math.sqrt(5) - 1) / 2) / math.log(0.5)
    assert data["box_dimension"] == pytest.approx(s, abs=1e-9)
    _, out, _ = run(capsys, "dimensions", "--scene", "self-similar")
    data = json.loads(out)
    for key in ("box_dimension", "frostman_dimension", "box_dimension_of_measure"):
        assert data[key] == pytest.approx(1, abs=1e-10)
    _, out, _ = run(capsys, "dimensions", "--scene", "LG")
    data = json.loads(out)
    assert data["frostman_dimension"] == pytest.approx(data["closed_lower_bound_frostman"], abs=1e-9)
    assert data["box_dimension_of_measure"] == pytest.approx(data["closed_upper_bound_box_of_measure"],
                                                             abs=1e-9)


def test_oracle_self_similar(capsys):
    code, out, _ = run(capsys, "oracle", "--scene", "self-similar", "--q", "0", "--delta-exponents", "4..12")
    table = rows(out)
    assert code == 0 and len(table) == 9
    assert all(float(r["estimate"]) == 1 for r in table)
    assert list(table[0])[:5] == ["k", "delta", "estimate", "variational", "gap"]
    assert "contribution_(1,2)" in table[0]


def test_oracle_budget_rows(capsys):
    code, out, err = run(capsys, "oracle", "--scene", "fraser-jurga", "--delta-exponents", "6,40")
    table = rows(out)
    assert code == 3
    assert [r["status"] for r in table] == ["ok", "skipped"]
    assert "budget" in table[1]["message"] and "budget" in err


def test_oracle_json(capsys):
    code, out, _ = run(capsys, "oracle", "--scene", "baranski-planar", "--q", "2",
                       "--delta-exponents", "8", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["variational"] == pytest.approx(-2 / 3, abs=1e-6)
    assert set(data["rows"][0]["per_ordering"]) == {"(1,2)", "(2,1)"}


def test_legendre(capsys):
    code, out, _ = run(capsys, "legendre", "--scene", "self-similar", "--q-min", "-2", "--q-max", "2",
                       "--q-steps", "5")
    table = rows(out)
    assert code == 0 and len(table) == 1
    assert float(table[0]["alpha"]) == pytest.approx(1) and float(table[0]["f"]) == pytest.approx(1)
    assert run(capsys, "legendre", "--scene", "self-similar", "--q-min", "1", "--q-max", "1")[0] == 2


def test_round_trip_gives_identical_output(capsys, tmp_path):
    path = tmp_path / "carpet.json"
    path.write_text(scene_to_json(load_scene("baranski-planar")))
    argv = ["spectrum", "--q-min", "-1", "--q-max", "3", "--q-steps", "5", "--measure", "0.7,0.3"]
    _, a, _ = run(capsys, *argv, "--scene", "baranski-planar")
    _, b, _ = run(capsys, *argv, "--scene", str(path))
    assert a == b
    _, a, _ = run(capsys, "oracle", "--scene", "baranski-planar", "--delta-exponents", "6..8")
    _, b, _ = run(capsys, "oracle", "--scene", str(path), "--delta-exponents", "6..8")
    strip = lambda text: [{k: v for k, v in r.items() if k != "seconds"} for r in rows(text)]
    assert strip(a) == strip(b)


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "sponge_spectra.cli", "validate", "--scene", "LG"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "valid: true" in proc.stdout


def test_worked_examples_alias_is_registered():
    from sponge_spectra.cli import build_parser
    parser = build_parser()
    for name in ("worked-examples", "paper-examples"):
        args = parser.parse_args([name])
        assert args.func.__name__ == "cmd_worked_examples"
