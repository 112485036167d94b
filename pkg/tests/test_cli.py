import io
import json

import pytest

from massa.cli import COUNTER, FAILED, NOT_AI, OK, PARSE, main

CR = "dia box p -> box dia p"
MCK = "box dia p -> dia box p"


def call(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exit_code_values():
    assert (OK, NOT_AI, PARSE, FAILED, COUNTER) == (0, 1, 2, 3, 4)


@pytest.mark.parametrize("text,code", [(CR, OK), ("p", OK), (MCK, NOT_AI), ("p & (q", PARSE)])
def test_classify_exit_codes(capsys, text, code):
    assert call(capsys, "classify", text)[0] == code


def test_parse_error_points_at_offset(capsys):
    code, _, err = call(capsys, "classify", "p & (q")
    assert code == PARSE
    assert "byte 6" in err and "^" in err


def test_classify_json(capsys):
    code, out, _ = call(capsys, "classify", CR, "--format", "json")
    d = json.loads(out)
    assert code == OK and d["status"] == "analytic_inductive"
    assert d["conjuncts"][0]["sahlqvist"] is True


def test_run_json_fields(capsys):
    code, out, _ = call(capsys, "run", CR, "--format", "json")
    d = json.loads(out)
    assert code == OK
    assert {"status", "formula", "classification", "rule", "raw_axiom", "axiom", "derivation"} <= set(d)
    assert set(d["rule"]) == {"name", "conclusion_rel", "premises"}
    assert set(d["rule"]["premises"][0]) == {"eigen", "extra_rel", "bottom"}
    assert d["rule"]["name"] == "Dir"
    assert {"rule", "conclusion", "premises"} <= set(d["derivation"])


def test_run_text_and_verify(capsys):
    code, out, _ = call(capsys, "run", CR, "--verify", "3")
    assert code == OK
    assert "Dir" in out and "verified" in out


def test_run_failure(capsys):
    code, out, _ = call(capsys, "run", MCK)
    assert code == FAILED
    assert "stuck at" in out


def test_run_k_gives_top(capsys):
    code, out, _ = call(capsys, "run", "box(p -> q) -> (box p -> box q)", "--format", "json")
    assert code == OK and json.loads(out)["axiom"] == "true"


def test_run_latex(capsys):
    code, out, _ = call(capsys, "run", CR, "--format", "latex")
    assert code == OK and r"\begin{prooftree}" in out


def test_run_then_derive_round_trip(capsys, monkeypatch):
    _, out, _ = call(capsys, "run", "box(box p -> q) | box(box q -> p)", "--format", "json")
    code, tex, _ = call(capsys, "derive", "-", "--format", "latex", stdin=out, monkeypatch=monkeypatch)
    assert code == OK and r"\infer2" in tex


def test_derive_rejects_tampered_json(capsys, monkeypatch):
    _, out, _ = call(capsys, "run", CR, "--format", "json")
    d = json.loads(out)
    d["derivation"]["premises"] = []
    code, _, _ = call(capsys, "derive", "-", stdin=json.dumps(d), monkeypatch=monkeypatch)
    assert code == FAILED


def test_verify_codes(capsys):
    assert call(capsys, "verify", "box p -> dia p", "forall x. exists y. x R y", "3")[0] == OK
    code, out, _ = call(capsys, "verify", "box p -> p", "forall x. exists y. x R y", "--bound", "2")
    assert code == COUNTER and "n=" in out
    assert call(capsys, "verify", "box p -> p", "forall x. x R", "2")[0] == PARSE
    assert call(capsys, "verify", "box p -> p", "forall x. x R x", "5", "--all-frames")[0] == PARSE


def test_frames(capsys):
    code, out, _ = call(capsys, "frames", "4", "--all-frames")
    assert code == OK and "66066" in out
    code, out, _ = call(capsys, "frames", "4")
    assert "3160" in out
    assert call(capsys, "frames", "6")[0] == PARSE


def test_needs_exactly_one_source(capsys):
    assert call(capsys, "run")[0] == PARSE
    assert call(capsys, "run", CR, "--seed", "1")[0] == PARSE


def test_batch_stdin(capsys, monkeypatch):
    lines = f"{CR}\n# comment\n\n{MCK}\np &\n"
    code, out, _ = call(capsys, "run", "-", stdin=lines, monkeypatch=monkeypatch)
    rows = [json.loads(l) for l in out.splitlines()]
    assert [r["exit"] for r in rows] == [OK, FAILED, PARSE]
    assert code == max(r["exit"] for r in rows)


def test_batch_seed_is_deterministic(capsys):
    _, a, _ = call(capsys, "run", "--seed", "3", "--count", "5", "--format", "json")
    _, b, _ = call(capsys, "run", "--seed", "3", "--count", "5", "--format", "json")
    assert a == b and len(a.splitlines()) == 5
    assert all(json.loads(l)["exit"] == OK for l in a.splitlines())


def test_batch_file(capsys, tmp_path):
    f = tmp_path / "in.txt"
    f.write_text("dia p -> box p\nbox p -> p\n")
    code, out, _ = call(capsys, "classify", "--file", str(f))
    assert code == OK and len(out.splitlines()) == 2


def test_bad_subcommand(capsys):
    assert call(capsys, "nonsense")[0] == PARSE


def test_classify_reports_dependency_order(capsys):
    text = "box(p1 -> p2) -> (box p1 -> box p2)"
    _, out, _ = call(capsys, "classify", text)
    assert "omega p1 < p2" in out and "critical p2" in out
    _, out, _ = call(capsys, "classify", text, "--format", "json")
    assert json.loads(out)["conjuncts"][0]["omega"] == [{"lower": "p1", "upper": "p2"}]
