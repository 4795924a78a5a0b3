import json
import subprocess
import sys

import pytest

from causalvote.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_describe(capsys):
    code, doc = run(capsys, "describe")
    assert code == 0
    assert len(doc["nodes"]) == 8
    assert doc["dimensions"]["party_to_future_by_l_pr"] == {"0": 1, "1": 4}


def test_describe_seven_parties(capsys):
    code, doc = run(capsys, "describe", "--n", "7")
    assert code == 0 and doc["threshold"] == 4


def test_validate_passes(capsys):
    code, doc = run(capsys, "validate")
    assert code == 0 and doc["passed"]
    assert doc["allowed"] == {"count": 964, "with_chancellor": 200, "with_president": 20}
    assert all(v["passed"] for v in doc["verdicts"].values())
    assert doc["verdicts"]["partition"]["details"]["sum"] == 1_048_576


@pytest.mark.parametrize("mutation", ["drop-majority-recheck", "lower-threshold"])
def test_mutations_fail_validate(capsys, mutation):
    code, doc = run(capsys, "validate", "--mutate", mutation)
    assert code == 1 and not doc["passed"]
    assert doc["mutation"] == mutation
    assert not doc["verdicts"]["univocality"]["passed"]


def test_even_party_count_fails(capsys):
    code, doc = run(capsys, "validate", "--n", "6", "--samples", "300")
    assert code == 1
    assert doc["exhaustive"] is False
    assert doc["verdicts"]["univocality"]["details"]["multi_valued"] > 0
    assert "skipped" in doc["verdicts"]["weak_loops"]["details"]


@pytest.mark.parametrize("argv", [
    ["validate", "--n", "4"],
    ["validate", "--mutate", "bogus"],
    ["game", "--parallelism", "0"],
    ["game", "--mutate", "lower-threshold"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_game(capsys):
    code, doc = run(capsys, "game")
    assert code == 0 and doc["passed"]
    assert doc["process"]["probability"] == "1/1"
    assert doc["dco"]["probability"] == "3/4"
    assert "traces" not in doc["process"]


def test_game_trace(capsys):
    _, doc = run(capsys, "game", "--trace")
    assert len(doc["process"]["traces"]) == 40


def test_output_file(tmp_path, capsys):
    out = tmp_path / "game.json"
    assert main(["game", "--output", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["passed"]


def test_output_independent_of_parallelism(capsys):
    main(["game", "--trace"])
    serial = capsys.readouterr().out
    main(["game", "--trace", "--parallelism", "2"])
    assert capsys.readouterr().out == serial


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "causalvote", "validate", "--mutate", "drop-majority-recheck"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["passed"] is False
