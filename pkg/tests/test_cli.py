from __future__ import annotations

import pytest

from gradedhoare.cli import EXIT_ERROR, EXIT_OK, EXIT_REJECT, main
from gradedhoare.corpus import corpus_dir

ROOT = corpus_dir()


def case_args(name, instance, model, tables=None, derivation=True):
    args = ["--instance", instance, "--model", str(ROOT / "models" / f"{model}.ini")]
    if tables:
        args += ["--tables", str(ROOT / "tables" / f"{tables}.tbl")]
    args += ["--judgment", str(ROOT / "cases" / f"{name}.j")]
    if derivation:
        args += ["--derivation", str(ROOT / "cases" / f"{name}.d")]
    return args


def ghl(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_skip(capsys):
    code, out, _ = ghl(capsys, "check", *case_args("cost_skip", "cost", "cost", "cost"))
    assert code == EXIT_OK and "verdict=accepted" in out


def test_check_dataflow_example(capsys):
    code, out, _ = ghl(capsys, "check", *case_args("df_example", "dataflow", "dataflow", "dataflow"))
    assert code == EXIT_OK
    assert "grade=mat:[[0,1,0],[0,0,0],[1,2,0]]" in out


def test_check_lowered_matrix_is_localized(capsys):
    code, out, _ = ghl(capsys, "check", *case_args("df_lowered", "dataflow", "dataflow", "dataflow"))
    assert code == EXIT_REJECT
    assert "verdict=rejected rule=Seq premise=grade path=root" in out


def test_strict_check(capsys):
    args = case_args("ub_two_coins_loose", "union-bound", "coins", "coins_loose")
    assert ghl(capsys, "check", *args)[0] == EXIT_OK
    code, out, _ = ghl(capsys, "check", "--strict", *args)
    assert code == EXIT_REJECT and "status=fail" in out


def test_soundness_cost(capsys):
    code, out, _ = ghl(capsys, "soundness", *case_args("cost_loop3", "cost", "cost", "cost"))
    assert code == EXIT_OK and "verdict=pass" in out and "max_cost=3" in out


def test_soundness_under_graded(capsys):
    code, out, _ = ghl(capsys, "soundness", *case_args("cost_loop3_under", "cost", "cost", derivation=False))
    assert code == EXIT_REJECT and "verdict=counterexample" in out


def test_soundness_insecure_witness_pair(capsys):
    code, out, _ = ghl(capsys, "soundness", *case_args("pc_insecure_T", "pc-security", "pc", derivation=False))
    assert code == EXIT_REJECT
    assert "witness=({x=0,y=1},{x=0,y=0})" in out and "'T' vs 'F'" in out


def test_soundness_seclevel_reports_clearances(capsys):
    code, out, _ = ghl(capsys, "soundness", *case_args("sl_two", "seclevel", "seclevel", "seclevel"))
    assert code == EXIT_OK and "clearances=7..8" in out


def test_laws_kleisli(capsys):
    code, out, _ = ghl(capsys, "laws", "--suite", "kleisli", "--trials", "200")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "suite=kleisli verdict=pass laws=26 seed=1729 trials=200"


def test_laws_fibration(capsys):
    assert ghl(capsys, "laws", "--suite", "fibration")[0] == EXIT_OK


def test_laws_broken_double(capsys):
    code, out, _ = ghl(capsys, "laws", "--suite", "lifting", "--instance", "broken-cost")
    assert code == EXIT_REJECT and "status=fail" in out and "counterexample=" in out


def test_axioms(capsys):
    ok = ghl(capsys, "axioms", "--instance", "union-bound", "--model", str(ROOT / "models/coins.ini"),
             "--tables", str(ROOT / "tables/coins.tbl"))
    assert ok[0] == EXIT_OK
    bad = ghl(capsys, "axioms", "--instance", "union-bound", "--model", str(ROOT / "models/coins.ini"),
              "--tables", str(ROOT / "tables/coins_loose.tbl"))
    assert bad[0] == EXIT_REJECT and "1/2" in bad[1]


def test_run_single_memory(capsys, tmp_path):
    prog = tmp_path / "p.ghl"
    prog.write_text("do tick; x := x + 1; do tick")
    code, out, _ = ghl(capsys, "run", "--instance", "cost", "--model", str(ROOT / "models/cost.ini"),
                       "--program", str(prog), "--memory", "x=1,y=0")
    assert code == EXIT_OK
    assert out.strip() == "memory={x=1,y=0} result=({x=2,y=0},nat:2)"


def test_parse_with_pc_elaboration(capsys, tmp_path):
    prog = tmp_path / "p.ghl"
    prog.write_text("if x {skip} else {skip}")
    code, out, _ = ghl(capsys, "parse", "--model", str(ROOT / "models/pc.ini"), "--program", str(prog), "--elaborate-pc")
    assert code == EXIT_OK
    assert "do cfTrue ; skip" in out and "do cfFalse ; skip" in out


def test_identical_inputs_identical_output(capsys):
    args = ["soundness", *case_args("ub_two_coins", "union-bound", "coins", "coins")]
    assert ghl(capsys, *args) == ghl(capsys, *args)


@pytest.mark.parametrize(
    "argv",
    [
        ["laws", "--suite", "nope"],
        ["check"],
        ["soundness", "--instance", "nope", "--model", "m", "--judgment", "j"],
        ["run", "--instance", "cost", "--model", "/nonexistent.ini", "--program", "p"],
        ["soundness", "--relational", *case_args("cost_skip", "cost", "cost", "cost")],
    ],
)
def test_usage_errors(capsys, argv):
    assert ghl(capsys, *argv)[0] == EXIT_ERROR


def test_parse_errors_exit_one(capsys, tmp_path):
    prog = tmp_path / "p.ghl"
    prog.write_text("x := ;")
    code, _, err = ghl(capsys, "parse", "--model", str(ROOT / "models/cost.ini"), "--program", str(prog))
    assert code == EXIT_ERROR and "error=ParseError" in err


def test_budget_errors_exit_one(capsys):
    code, _, err = ghl(capsys, "soundness", "--budget", "3", *case_args("cost_skip", "cost", "cost", "cost"))
    assert code == EXIT_ERROR and "error=BudgetError" in err
