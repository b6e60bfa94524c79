import json

import numpy as np
import pytest

from bncut.cli import EXIT_ERROR, EXIT_OK, EXIT_TRUNCATED, RunConfig, main
from bncut.ip_model import build_model
from bncut.oracle import dp_optimal
from bncut.scores import read_dataset, read_score_file, write_dataset
from bncut.synthetic import asia_like

from conftest import DATA

HAND = """3
a 2
-10 0
-1 1 b
b 2
-10 0
-2 1 c
c 2
-10 0
-3 1 a
"""


@pytest.fixture(scope="module")
def asia_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("asia") / "asia.csv"
    path.write_text(write_dataset(asia_like().sample(1000, np.random.default_rng(7))))
    return path


def summary_of(err: str) -> dict:
    line = next(ln for ln in err.splitlines() if ln.startswith("SUMMARY "))
    return json.loads(line[len("SUMMARY "):])


def test_score_prunes_asia(asia_csv, tmp_path, caplog):
    out = tmp_path / "asia.scores"
    caplog.set_level("INFO")
    assert main(["score", str(asia_csv), "-m", "3", "-o", str(out)]) == EXIT_OK
    assert "512 before pruning" in caplog.text.replace("parent sets ", "")
    table = read_score_file(out.read_text())
    assert table.n == 8 and table.num_entries() < 512
    assert all(entries[0][0] == () for entries in table.entries)


def test_score_without_parents(asia_csv, tmp_path):
    out = tmp_path / "empty.scores"
    assert main(["score", str(asia_csv), "-m", "0", "-o", str(out)]) == EXIT_OK
    assert read_score_file(out.read_text()).num_entries() == 8


def test_score_then_solve_matches_dp(asia_csv, tmp_path, capsys):
    scores = tmp_path / "asia.scores"
    main(["score", str(asia_csv), "-o", str(scores)])
    capsys.readouterr()
    assert main(["solve", str(scores), "--verify"]) == EXIT_OK
    cap = capsys.readouterr()
    s = summary_of(cap.err)
    assert s["verified"] and s["proven"]
    ref = dp_optimal(read_score_file(scores.read_text())).score
    assert f"score {ref:.6f}" in cap.out


def test_hand_file(tmp_path, capsys):
    path = tmp_path / "hand.scores"
    path.write_text(HAND)
    assert main(["solve", str(path), "--no-heuristics"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out == "a <- b\nb <- c\nc <- \nscore -13.000000\n"


@pytest.mark.parametrize("flag", ["--no-gomory", "--no-k2-cuts", "--no-heuristics"])
def test_switches_keep_score(flag, capsys):
    path = str(DATA / "gomory4.scores")
    main(["solve", path])
    base = summary_of(capsys.readouterr().err)
    main(["solve", path, flag])
    other = summary_of(capsys.readouterr().err)
    assert other["score"] == pytest.approx(base["score"], abs=1e-9)
    if flag == "--no-gomory":
        assert other["gomory_cuts"] == 0 and base["gomory_cuts"] >= 1


def test_output_is_byte_identical(tmp_path):
    path = str(DATA / "gomory4.scores")
    outs = []
    for i in range(2):
        o, d = tmp_path / f"g{i}.txt", tmp_path / f"g{i}.dot"
        assert main(["solve", path, "-o", str(o), "--dot", str(d)]) == EXIT_OK
        outs.append((o.read_bytes(), d.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith(b"digraph bn {")


def test_error_exit_codes(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.scores")]) == EXIT_ERROR
    bad = tmp_path / "bad.scores"
    bad.write_text("2\na 1\n-1 0\n")
    assert main(["solve", str(bad)]) == EXIT_ERROR
    assert main(["score", str(bad), "--ess", "0"]) == EXIT_ERROR
    with pytest.raises(ValueError):
        RunConfig("solve", bad, time_limit=-1.0)


def test_truncated_run_exit_code(capsys):
    code = main(["solve", str(DATA / "gomory4.scores"), "--no-gomory", "--no-heuristics",
                 "--time-limit", "1e-9"])
    assert code == EXIT_TRUNCATED
    s = summary_of(capsys.readouterr().err)
    assert not s["proven"] and s["limit_reached"] and s["bound"] is None
