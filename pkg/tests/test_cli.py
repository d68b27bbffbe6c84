import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from loslap.cli import main
from loslap.core import haar_random_unitary
from loslap.formats import parse_state, save_matrix_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_round_trip_normalised(capsys):
    code, out, _ = run(capsys, "simulate", "--haar-seed", "7", "--m", "5", "--n", "3")
    assert code == 0
    data = rows(out)
    assert len(data) == 35
    total = sum(float(r["re"]) ** 2 + float(r["im"]) ** 2 for r in data)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert all(len(parse_state(r["state"])) == 5 for r in data)


def test_output_is_deterministic(capsys):
    args = ("simulate", "--haar-seed", "3", "--m", "4", "--n", "2", "--sort")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


@pytest.mark.parametrize("engine", ["slos", "permanent", "steiner-plan"])
def test_engines_agree_through_cli(capsys, engine):
    base = rows(run(capsys, "simulate", "--haar-seed", "7", "--m", "4", "--n", "2", "--sort")[1])
    other = rows(run(capsys, "simulate", "--haar-seed", "7", "--m", "4", "--n", "2", "--sort",
                     "--engine", engine)[1])
    assert [r["state"] for r in base] == [r["state"] for r in other]
    for a, b in zip(base, other):
        assert abs(float(a["re"]) - float(b["re"])) < 1e-12
        assert abs(float(a["im"]) - float(b["im"])) < 1e-12


def test_compare(capsys):
    code, out, _ = run(capsys, "compare", "--haar-seed", "7", "--m", "4", "--n", "2")
    assert code == 0
    diff = float(out.split("max_abs_diff=")[1].split()[0])
    assert diff <= 1e-10
    assert "flops_loslap=56" in out


def test_iterate_limit_on_identity(capsys, tmp_path):
    path = tmp_path / "eye.json"
    save_matrix_json(np.eye(2), path)
    code, out, _ = run(capsys, "iterate", "--matrix", str(path), "--n", "2", "--limit", "1")
    assert code == 0
    assert out.strip().splitlines()[1:] == ['"2,0",0,0,0']


def test_cost_table_contains_known_value(capsys):
    code, out, _ = run(capsys, "cost", "table", "--n", "5", "--m", "5")
    assert code == 0
    assert "loslap,,6810," in out


def test_cost_frontier_and_crossover(capsys):
    code, out, _ = run(capsys, "cost", "frontier", "--n-max", "30")
    assert code == 0
    last = out.strip().splitlines()[-1].split(",")
    assert last[0] == "30" and last[-1] == "0"
    code, out, _ = run(capsys, "cost", "crossover", "--n", "15", "--m-min", "20", "--m-max", "20")
    assert code == 0
    assert len(out.strip().splitlines()) == 21


def test_validation_errors(capsys, tmp_path):
    code, _, err = run(capsys, "lossy", "--haar-seed", "1", "--m", "3", "--n", "2", "--eta", "1.5")
    assert code == 2 and "eta must lie in [0,1]" in err
    code, _, err = run(capsys, "simulate", "--haar-seed", "1", "--m", "70", "--n", "64")
    assert code == 2 and "cap" in err
    u = haar_random_unitary(3, 0)
    u[:, 0] *= 0.9
    path = tmp_path / "u.json"
    save_matrix_json(u, path)
    code, _, err = run(capsys, "simulate", "--matrix", str(path), "--n", "2", "--require-unitary")
    assert code == 2 and "deviate" in err and "0.19" in err
    code, _, err = run(capsys, "simulate", "--n", "2")
    assert code == 2 and "--matrix" in err
    code, _, _ = run(capsys, "simulate", "--haar-seed", "1", "--m", "3", "--n", "2", "--bogus")
    assert code == 2
    path.write_text(json.dumps({"m": 2, "n": 2, "re": [[1, 0], [0, 1]]}))
    code, _, err = run(capsys, "simulate", "--matrix", str(path), "--n", "2")
    assert code == 2 and "'im'" in err


def test_budget_refusal_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("LOSLAP_MEMORY_CAP_BYTES", "100")
    code, out, err = run(capsys, "simulate", "--haar-seed", "1", "--m", "5", "--n", "4")
    assert code == 3 and out == "" and "cap" in err


def test_lossy_and_groups(capsys):
    code, out, _ = run(capsys, "lossy", "--haar-seed", "2", "--m", "3", "--n", "2", "--eta", "0.3")
    data = rows(out)
    assert code == 0 and data[0]["photons"] == "0"
    assert sum(float(r["probability"]) for r in data) == pytest.approx(1.0)
    code, out, _ = run(capsys, "lossy", "--haar-seed", "2", "--m", "3", "--n", "2",
                       "--groups", "1|2")
    assert code == 0
    assert sum(float(r["probability"]) for r in rows(out)) == pytest.approx(1.0)


def test_adaptive_command(capsys, tmp_path):
    from loslap.adaptive import AdaptivePolicy, save_policy

    swap = np.array([[0, 1], [1, 0]])
    save_policy(AdaptivePolicy(1, 3, {(0,): np.eye(2), (1,): swap, (2,): np.eye(2)}),
                tmp_path / "p.json")
    outs = []
    for engine in ("loslap", "slos"):
        code, out, _ = run(capsys, "adaptive", "--haar-seed", "4", "--m", "3", "--n", "2",
                           "--policy", str(tmp_path / "p.json"), "--engine", engine)
        assert code == 0
        outs.append(rows(out))
    for a, b in zip(*outs):
        assert a["state"] == b["state"]
        assert abs(float(a["re"]) - float(b["re"])) < 1e-12
    save_policy(AdaptivePolicy(1, 3, {(0,): np.eye(2)}), tmp_path / "short.json")
    code, _, err = run(capsys, "adaptive", "--haar-seed", "4", "--m", "3", "--n", "2",
                       "--policy", str(tmp_path / "short.json"))
    assert code == 2 and "outcome" in err


def test_steiner_commands(capsys, tmp_path):
    plan = tmp_path / "plan.json"
    code, out, _ = run(capsys, "steiner", "optimize", "--n", "5", "--m", "5",
                       "--output", str(plan))
    assert code == 0 and "flops=5210" in out
    code, out, err = run(capsys, "steiner", "execute", "--plan", str(plan),
                         "--haar-seed", "3", "--m", "5")
    assert code == 0 and len(rows(out)) == 126 and "flops=5210" in err
    code, out, _ = run(capsys, "steiner", "export-stp", "--n", "5", "--m", "5",
                       "--output", str(tmp_path / "g.stp"))
    assert code == 0 and "nodes=19" in out


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "loslap.cli", "simulate", "--n", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
