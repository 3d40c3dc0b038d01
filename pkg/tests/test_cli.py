import io
import json
from contextlib import redirect_stdout

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowgame.cli import main
from shadowgame.lp import write_payoff

from conftest import MATCHING_PENNIES, random_game

DIAMOND = "nodes 4 budget 1\nedge 0 1\nedge 0 2\nedge 1 3\nedge 2 3\nsource 0\ntarget 3\n"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.splitlines(), err


def field(lines, key):
    return next(ln.split(None, 1)[1] for ln in lines if ln.startswith(key + " "))


@pytest.fixture
def mp_state(tmp_path, capsys):
    write_payoff(MATCHING_PENNIES, tmp_path / "mp.txt")
    code, _, _ = run(capsys, "solve", tmp_path / "mp.txt", "--state", tmp_path / "mp.json")
    assert code == 0
    return tmp_path / "mp.json"


def test_solve_matching_pennies(tmp_path, capsys):
    write_payoff(MATCHING_PENNIES, tmp_path / "mp.txt")
    code, lines, _ = run(capsys, "solve", tmp_path / "mp.txt")
    assert code == 0
    assert lines[:2] == ["value 0", "strategy 0.5 0.5"]


def test_solve_zero_game(tmp_path, capsys):
    write_payoff(np.zeros((3, 2)), tmp_path / "z.txt")
    code, lines, _ = run(capsys, "solve", tmp_path / "z.txt")
    assert code == 0 and field(lines, "value") == "0"
    s = [float(v) for v in field(lines, "strategy").split()]
    assert sum(s) == pytest.approx(1) and min(s) >= 0


def test_solve_input_errors(tmp_path, capsys):
    assert run(capsys, "solve", tmp_path / "nope.txt")[0] == 2
    (tmp_path / "bad.txt").write_text("2 2\n1 x\n0 1\n")
    code, _, err = run(capsys, "solve", tmp_path / "bad.txt")
    assert code == 2 and err.startswith("error:")


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


@pytest.mark.parametrize("col, word, value", [("0 0", "retained", "0"), ("-2 -0.5", "recomputed", "-0.7142857143")])
def test_extend_examples(mp_state, tmp_path, capsys, col, word, value):
    (tmp_path / "g.txt").write_text(col + "\n")
    code, lines, _ = run(capsys, "extend", mp_state, tmp_path / "g.txt", "--out", tmp_path / "next.json")
    assert code == 0
    assert lines[0] == word
    assert field(lines, "value") == value
    if word == "retained":
        assert field(lines, "pivots") == "0"
    assert json.loads((tmp_path / "next.json").read_text())["m"] == 3
    assert run(capsys, "verify", tmp_path / "next.json")[0] == 0


def test_extend_chains(mp_state, tmp_path, capsys):
    (tmp_path / "g1.txt").write_text("-2 -0.5\n")
    (tmp_path / "g2.txt").write_text("-0.5 -3\n")
    run(capsys, "extend", mp_state, tmp_path / "g1.txt", "--out", tmp_path / "s1.json")
    code, lines, _ = run(capsys, "extend", tmp_path / "s1.json", tmp_path / "g2.txt")
    assert code == 0
    G = np.column_stack([MATCHING_PENNIES, [-2, -0.5], [-0.5, -3]])
    write_payoff(G, tmp_path / "all.txt")
    _, fresh, _ = run(capsys, "solve", tmp_path / "all.txt")
    assert float(field(lines, "value")) == pytest.approx(float(field(fresh, "value")), abs=1e-9)


def test_extend_state_errors(mp_state, tmp_path, capsys):
    (tmp_path / "g.txt").write_text("0 0\n")
    doc = json.loads(mp_state.read_text())
    doc["lp_digest"] = "0" * len(doc["lp_digest"])
    (tmp_path / "stale.json").write_text(json.dumps(doc))
    assert run(capsys, "extend", tmp_path / "stale.json", tmp_path / "g.txt")[0] == 4
    (tmp_path / "junk.json").write_text("not json")
    assert run(capsys, "extend", tmp_path / "junk.json", tmp_path / "g.txt")[0] == 4
    assert run(capsys, "verify", tmp_path / "junk.json")[0] == 4
    assert run(capsys, "extend", tmp_path / "none.json", tmp_path / "g.txt")[0] == 2


def test_extend_rejects_other_game(mp_state, tmp_path, capsys):
    (tmp_path / "g.txt").write_text("0 0\n")
    write_payoff(np.eye(2), tmp_path / "eye.txt")
    assert run(capsys, "extend", mp_state, tmp_path / "g.txt", "--matrix", tmp_path / "eye.txt")[0] == 4
    write_payoff(MATCHING_PENNIES, tmp_path / "same.txt")
    assert run(capsys, "extend", mp_state, tmp_path / "g.txt", "--matrix", tmp_path / "same.txt")[0] == 0


@pytest.mark.parametrize("col", ["1 2 3", "", "1 nan"])
def test_extend_bad_column(mp_state, tmp_path, capsys, col):
    (tmp_path / "g.txt").write_text(col)
    assert run(capsys, "extend", mp_state, tmp_path / "g.txt")[0] == 2


def test_verify_reports_damage(mp_state, tmp_path, capsys):
    assert run(capsys, "verify", mp_state)[0] == 0
    doc = json.loads(mp_state.read_text())
    doc["entries"][0]["table"]["phi"][1] = -5.0
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    code, lines, _ = run(capsys, "verify", tmp_path / "bad.json")
    assert code == 1 and lines


def test_simulate_csv_and_determinism(tmp_path, capsys):
    args = ["simulate", "--n", 4, "--m", 6, 12, "--trials", 15, "--seed", 1, "--low", -10, "--high", 10]
    assert run(capsys, *args, "--out", tmp_path / "a.csv")[0] == 0
    code, lines, _ = run(capsys, *args, "--out", tmp_path / "b.csv")
    assert code == 0 and len(lines) == 2
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 3


@pytest.mark.parametrize("bad", [["--trials", 0], ["--low", 3, "--high", 3], ["--n", 1], ["--m", 0]])
def test_simulate_bad_flags(tmp_path, capsys, bad):
    assert run(capsys, "simulate", *bad, "--out", tmp_path / "x.csv")[0] == 2


def test_simulate_unwritable_output(tmp_path, capsys):
    args = ["simulate", "--n", 3, "--m", 4, "--trials", 2, "--out", tmp_path / "no" / "x.csv"]
    assert run(capsys, *args)[0] == 2


def test_scenario_diamond(tmp_path, capsys):
    (tmp_path / "d.txt").write_text(DIAMOND)
    code, lines, _ = run(capsys, "scenario", tmp_path / "d.txt", "--out", tmp_path / "o.txt")
    assert code == 0 and lines[0] == "value 0.5"
    probs = [float(ln.split()[-1]) for ln in lines if ln.startswith("edge")]
    assert len(probs) == 4 and sum(probs) == pytest.approx(1)
    assert (tmp_path / "o.txt").read_text().startswith("value 0.5\n")


def test_scenario_add_target(tmp_path, capsys):
    (tmp_path / "d.txt").write_text(DIAMOND)
    code, lines, _ = run(capsys, "scenario", tmp_path / "d.txt", "--add-target", 1)
    assert code == 0
    assert any(ln.startswith("add-target 1 ") for ln in lines)
    updated = float([ln for ln in lines if ln.startswith("value")][-1].split()[1])
    (tmp_path / "d2.txt").write_text(DIAMOND + "target 1\n")
    _, fresh, _ = run(capsys, "scenario", tmp_path / "d2.txt")
    assert updated == pytest.approx(float(field(fresh, "value")), abs=1e-9)


def test_scenario_errors(tmp_path, capsys):
    (tmp_path / "d.txt").write_text(DIAMOND)
    assert run(capsys, "scenario", tmp_path / "d.txt", "--add-target", 9)[0] == 2
    assert run(capsys, "scenario", tmp_path / "d.txt", "--add-target", 0)[0] == 2
    assert run(capsys, "scenario", tmp_path / "missing.txt")[0] == 2
    (tmp_path / "bad.txt").write_text("nodes 2 budget 1\nedge 0 5\n")
    assert run(capsys, "scenario", tmp_path / "bad.txt")[0] == 2


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(2, 8))
def test_pipeline_idempotence(tmp_path_factory, seed, n, m):
    d = tmp_path_factory.mktemp("pipe")
    rng = np.random.default_rng(seed)
    G = random_game(rng, n, m)
    g = random_game(rng, n, 1)[:, 0]
    write_payoff(G, d / "g.txt")
    write_payoff(np.column_stack([G, g]), d / "ext.txt")
    (d / "col.txt").write_text(" ".join(format(v, ".17g") for v in g))
    outs = []
    for argv in (["solve", d / "g.txt", "--state", d / "s.json"], ["extend", d / "s.json", d / "col.txt"],
                 ["solve", d / "ext.txt"]):
        buf = io.StringIO()
        with redirect_stdout(buf):
            assert main([str(a) for a in argv]) == 0
        outs.append(buf.getvalue().splitlines())
    assert float(field(outs[1], "value")) == pytest.approx(float(field(outs[2], "value")), abs=1e-9)
