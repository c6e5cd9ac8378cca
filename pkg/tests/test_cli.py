import json
import subprocess
import sys

import pytest

from realshield import benchmark
from realshield.cli import ERROR, OK, UNREALIZABLE, VIOLATION, main


@pytest.fixture
def shield(tmp_path):
    out = tmp_path / "shield.json"
    assert main(["synth", str(benchmark("running_example")), "-o", str(out)]) == OK
    return out


def test_synth_report(shield, capsys):
    doc = json.loads(shield.read_text())
    assert doc["report"]["P_I"] == 1 and doc["report"]["P_O"] == 2


def test_check_clean(shield, capsys):
    assert main(["check", str(shield)]) == OK
    assert json.loads(capsys.readouterr().out)["violations"] == []


def test_check_skip_rf(tmp_path, capsys):
    out = tmp_path / "raw.json"
    assert main(["synth", str(benchmark("running_example")), "-o", str(out), "--skip-rf"]) == OK
    capsys.readouterr()
    assert main(["check", str(out)]) == VIOLATION
    v = json.loads(capsys.readouterr().out)["violations"]
    assert {"L1": False, "M1": False, "M2": False} in [x["input"] for x in v]


def test_unrealizable(tmp_path, capsys):
    d = json.loads(benchmark("running_example_bool").read_text())
    d["automaton"]["init"] = "2"
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps(d))
    assert main(["synth", str(spec), "-o", str(tmp_path / "s.json")]) == UNREALIZABLE
    assert "counterexample" in capsys.readouterr().out


def test_errors(tmp_path, shield):
    assert main(["check", str(tmp_path / "missing.json")]) == ERROR
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["synth", str(bad), "-o", str(tmp_path / "x.json")]) == ERROR
    # shield synthesized from another spec
    assert main(["simulate", str(benchmark("powertrain_r32_r33")), str(shield)]) == ERROR
    assert main(["simulate", str(benchmark("running_example")), str(shield),
                 "--error-rate", "2"]) == ERROR


def test_simulate_csv_deterministic(tmp_path, shield, capsys):
    spec = str(benchmark("running_example"))
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main(["simulate", spec, str(shield), "--steps", "150", "--error-rate", "0.1",
                     "--seed", "4", "--csv", str(out), "--no-timings"]) == OK
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    metrics, _ = json.JSONDecoder().raw_decode(capsys.readouterr().out)
    assert metrics["steps"] == 150 and metrics["violations_shielded"] == 0


def test_simulate_script_file(tmp_path, capsys):
    spec = benchmark("driving")
    sh = tmp_path / "d.json"
    assert main(["synth", str(spec), "-o", str(sh)]) == OK
    script = tmp_path / "errs.json"
    script.write_text(json.dumps([[12, "v_ego", "1.5"]]))
    capsys.readouterr()
    assert main(["simulate", str(spec), str(sh), "--script", str(script)]) == OK
    m = json.loads(capsys.readouterr().out)
    assert m["steps"] == 40 and m["corrections"] >= 1 and m["violations_shielded"] == 0


def test_bench_table(capsys):
    assert main(["bench", str(benchmark("running_example")), "--steps", "200"]) == OK
    header, row = capsys.readouterr().out.strip().split("\n")
    assert header.split("\t")[0] == "benchmark" and row.startswith("running_example\t")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "realshield", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "synth" in res.stdout
