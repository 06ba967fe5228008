import csv
import io
import json
import subprocess
import sys

import pytest

from congested_waters import parse_scenario, preset
from congested_waters.cli import COLUMNS, main, render


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    assert tuple(header) == COLUMNS
    return [tuple(r) for r in reader]


def value(rows, quantity, key):
    return float(next(r[3] for r in rows if r[1] == quantity and r[2] == key))


def test_legal_csv(capsys):
    code, out, _ = run(capsys, "legal", "--preset", "example1")
    assert code == 0
    rows = rows_of(out)
    assert value(rows, "quota", "J1") == pytest.approx(791.667)
    assert value(rows, "utility", "China") == pytest.approx(0.486, abs=5e-4)
    assert all(r[0] == "example1" for r in rows)


def test_csv_uses_six_significant_digits():
    text = render([("s", "q", "k", 1 / 3), ("s", "q", "flag", True)], "csv")
    assert text.splitlines() == ["scenario,quantity,key,value", "s,q,k,0.333333", "s,q,flag,true"]


def test_json_keeps_full_precision(capsys):
    code, out, _ = run(capsys, "legal", "--preset", "example1", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert set(data[0]) == set(COLUMNS)
    q = next(d["value"] for d in data if d["quantity"] == "quota" and d["key"] == "J1")
    assert q == pytest.approx(2375 / 3, rel=1e-15)


def test_preset_list_and_dump(capsys):
    code, out, _ = run(capsys, "preset", "--list")
    names = out.split()
    assert code == 0 and {"example1", "example2", "example3", "table5-II-I-I"} <= set(names)
    code, out, _ = run(capsys, "preset", "example2")
    assert code == 0
    assert parse_scenario(json.loads(out)) == preset("example2")


def test_subgame_command(capsys):
    code, out, _ = run(capsys, "subgame", "--preset", "example1", "--quotas", "J1=989,S1=1185,C1=1596")
    assert code == 0
    rows = rows_of(out)
    assert value(rows, "effort", "J1:C1") == pytest.approx(265, abs=2)
    assert next(r[3] for r in rows if r[1] == "status") == "true"


def test_equilibrium_converged_and_not(capsys):
    code, out, _ = run(capsys, "equilibrium", "--preset", "example2")
    assert code == 0
    assert value(rows_of(out), "quota", "C1") == pytest.approx(788.889, abs=0.01)
    code, _, err = run(capsys, "equilibrium", "--preset", "example1", "--max-rounds", "1", "--tol", "1e-9")
    assert code == 2
    assert "did not converge" in err


def test_check_legal_eq(capsys):
    code, out, err = run(capsys, "check-legal-eq", "--preset", "example2")
    assert code == 0
    assert "equilibrium: true" in err
    assert ("example2", "verdict", "equilibrium", "true") in rows_of(out)
    code, _, err = run(capsys, "check-legal-eq", "--preset", "example1", "--quiet")
    assert code == 0 and err == ""


def test_check_legal_eq_rejects_multi_fishery(capsys):
    code, _, err = run(capsys, "check-legal-eq", "--preset", "example3")
    assert code == 1 and "three players" in err


def test_bargain_is_reproducible(capsys, tmp_path):
    args = ["bargain", "--preset", "example1", "--alpha", ".33,.33,.33", "--threat", "0.1951,0.2977,0.5094",
            "--budget", "600", "--seed", "7"]
    code, first, _ = run(capsys, *args)
    assert code == 0
    _, second, _ = run(capsys, *args)
    assert first == second
    rows = rows_of(first)
    assert ("example1", "status", "feasible", "true") in rows
    assert value(rows, "utility", "Japan") >= 0.1951


def test_bargain_infeasible_exit_code(capsys):
    code, _, err = run(capsys, "bargain", "--preset", "example1", "--alpha", "1,1,1", "--threat", "5,5,5",
                       "--budget", "200")
    assert code == 2 and "infeasible" in err


def test_sweep_command(capsys, tmp_path):
    spec = tmp_path / "cut.json"
    spec.write_text(json.dumps({"path": "quotas.S1", "values": [1185, 833], "mode": "fix-others",
                                "record": ["fishing"], "base_quotas": {"J1": 989, "C1": 1596},
                                "responders": ["China"]}))
    code, out, _ = run(capsys, "sweep", "--preset", "example1", str(spec))
    assert code == 0
    keys = [r[2] for r in rows_of(out) if r[1] == "fishing"]
    assert keys[0] == "quotas.S1=1185:J1" and keys[-1] == "quotas.S1=833:C1"


def test_out_file(capsys, tmp_path):
    target = tmp_path / "legal.csv"
    code, out, _ = run(capsys, "legal", "--preset", "example2", "--out", str(target))
    assert code == 0 and out == ""
    assert rows_of(target.read_text())


def test_scenario_file(capsys, tmp_path):
    from congested_waters import emit_scenario

    path = tmp_path / "mine.json"
    doc = emit_scenario(preset("example1"))
    doc["name"] = ""
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "legal", "--scenario", str(path))
    assert code == 0
    assert rows_of(out)[0][0] == "mine"


@pytest.mark.parametrize("argv", [
    ["legal"],
    ["legal", "--preset", "example1", "--scenario", "x.json"],
    ["legal", "--preset", "nowhere"],
    ["subgame", "--preset", "example1"],
    ["subgame", "--preset", "example1", "--quotas", "J1:989"],
    ["subgame", "--preset", "example1", "--quotas", "X9=5"],
    ["bargain", "--preset", "example1", "--alpha", "1,1"],
    ["frobnicate"],
    ["legal", "--preset", "example1", "--format", "xml"],
])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_invalid_scenario_exits_3(capsys, tmp_path):
    from congested_waters import emit_scenario

    doc = emit_scenario(preset("example1"))
    doc["players"][0]["fisheries"][0]["Z"] = -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "legal", "--scenario", str(path))
    assert code == 3 and "Z" in err
    path.write_text("{")
    assert run(capsys, "legal", "--scenario", str(path))[0] == 3


def test_invalid_sweep_file_exits_3(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"path": "players.China.c", "values": [1e-4]}))
    assert run(capsys, "sweep", "--preset", "example1", str(spec))[0] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "congested_waters", "preset", "--list"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and "example1" in proc.stdout
