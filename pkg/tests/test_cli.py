import json
import subprocess
import sys
from fractions import Fraction as F

from statl.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, main
from statl.corpus import corpus_manifest, digest, load
from statl.semantics import eval_prob
from statl.syntax import parse


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, (json.loads(out) if out.strip() else None), err


def test_eval_report_shape(capsys):
    code, rep, _ = run_json(capsys, "eval", "corpus/bern_score.statl")
    assert code == EXIT_OK
    assert rep["command"] == "eval" and rep["digest"] == digest(load("bern_score"))
    assert rep["result"]["mass"] == "1/1" and rep["result"]["kind"] == "p1"
    assert [w for _, w in rep["result"]["support"]] == ["2/3", "1/3"]
    assert isinstance(rep["wall_time_ms"], float)


def test_no_timing_reports_are_byte_identical(capsys):
    for cmd in (["eval", "corpus/nested_norm.statl"], ["compile", "corpus/bern_score.statl"],
                ["approx", "corpus/nested_stat.statl", "--steps", "3"],
                ["verify", "corpus/ergodic_stat.statl", "--steps", "4"],
                ["check-eliminability", "corpus/three_way_case.statl"]):
        first = run(capsys, *cmd, "--no-timing")
        second = run(capsys, *cmd, "--no-timing")
        assert first == second
        assert "wall_time_ms" not in json.loads(first[1])


def test_verify_bern_score(capsys):
    code, rep, _ = run_json(capsys, "verify", "corpus/bern_score.statl", "--steps", "5")
    assert code == EXIT_OK and rep["pass"] and rep["compiled"]
    res = rep["result"]
    assert res["total"] == "1/1024"
    assert F(res["empirical_tv"]) <= F(res["total"])
    assert res["sites"][0]["certificate"]["rho"] == "1/4"


def test_verify_uncertified_site_exit_code(capsys):
    code, rep, _ = run_json(capsys, "verify", "corpus/periodic_stat.statl", "--steps", "3")
    assert code == EXIT_VERIFY and rep["pass"] is False and rep["result"]["site"] == 0


def test_list_sites(capsys):
    code, rep, _ = run_json(capsys, "verify", "corpus/nested_stat.statl", "--list-sites")
    assert code == EXIT_OK
    assert [s["label"] for s in rep["result"]["sites"]] == [0, 1]


def test_approx_per_site_steps(capsys):
    code, rep, _ = run_json(capsys, "approx", "corpus/nested_stat.statl", "--steps", "0=2,1=5")
    assert code == EXIT_OK and rep["result"]["plan"] == {"0": 2, "1": 5}


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.statl"
    bad.write_text("let x = in return x\n")
    code, out, err = run(capsys, "eval", str(bad))
    assert code == EXIT_INPUT and out == ""
    diag = json.loads(err)
    assert diag["error"] == "parse" and (diag["line"], diag["column"]) == (1, 9)


def test_type_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.statl"
    bad.write_text("score(tt)\n")
    code, _, err = run(capsys, "eval", str(bad))
    assert code == EXIT_INPUT and json.loads(err)["error"] == "type"


def test_usage_errors(capsys, tmp_path):
    f = tmp_path / "det.statl"
    f.write_text("1/2\n")
    assert run(capsys, "eval", str(f))[0] == EXIT_INPUT
    assert run(capsys, "eval", "corpus/bern_score.statl", "--state-budget", "0")[0] == EXIT_INPUT
    assert run(capsys, "approx", "corpus/ergodic_stat.statl", "--steps", "7=1")[0] == EXIT_INPUT


def test_state_budget_exit_code(capsys, tmp_path):
    f = tmp_path / "walk.statl"
    f.write_text("stat(return 0, fn x => return add(x, 1))\n")
    code, _, err = run(capsys, "eval", str(f), "--state-budget", "50")
    assert code == EXIT_BUDGET and json.loads(err)["budget"] == 50


def test_compiled_output_reenters_the_pipeline(capsys, tmp_path):
    for name in ("bern_score", "nested_norm", "mh_with_context"):
        out = tmp_path / f"{name}.statl"
        code, rep, _ = run_json(capsys, "compile", f"corpus/{name}.statl", "-o", str(out))
        assert code == EXIT_OK
        c = parse(out.read_text())
        assert digest(c) == rep["result"]["digest"]
        code, again, _ = run_json(capsys, "eval", str(out), "--no-timing")
        _, orig, _ = run_json(capsys, "eval", f"corpus/{name}.statl", "--no-timing")
        assert again["result"]["support"] == orig["result"]["support"]


def test_bundled_compiled_program_matches_compiler(capsys):
    _, rep, _ = run_json(capsys, "compile", "corpus/bern_score.statl")
    assert rep["result"]["digest"] == digest(load("bern_score_compiled"))


def test_check_eliminability_on_corpus(capsys):
    for entry in corpus_manifest():
        if not entry.program:
            continue
        code, rep, _ = run_json(capsys, "check-eliminability", str(entry.path), "--no-timing")
        assert code == EXIT_OK and rep["pass"] and rep["result"]["tv"] == "0/1", entry.name


def test_text_format(capsys):
    code, out, _ = run(capsys, "verify", "corpus/ergodic_stat.statl", "--steps", "2", "--format", "text")
    assert code == EXIT_OK
    assert "total 1/16" in out and out.rstrip().endswith("PASS")


def test_console_entry_point_and_stdin():
    proc = subprocess.run([sys.executable, "-m", "statl", "eval", "-", "--no-timing"],
                          input="sample(bern 1/4)\n", capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    rep = json.loads(proc.stdout)
    assert [w for _, w in rep["result"]["support"]] == ["1/4", "3/4"]
    assert rep["result"]["mass"] == "1/1"
    assert eval_prob(parse("sample(bern 1/4)")).mass == 1
