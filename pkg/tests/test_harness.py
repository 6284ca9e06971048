from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradedhoare.assertions import PredModel
from gradedhoare.errors import BackendError, BudgetError
from gradedhoare.ghl import elaborate_pc, parse_judgment, parse_tables
from gradedhoare.harness import clearance_levels, refute, validate_axioms, verify_soundness
from gradedhoare.syntax import Memory, Model, load_model

COST = Model.make(("x", "y"), 0, 3, nat_bound=4)
COINS = Model.make(("v1", "v2"), 0, 1)
PC = Model.make(("x", "y"), 0, 1)
REL = PredModel(relational=True)


def jd(text, model, pm=None):
    return parse_judgment(text, model, pm)


# ---------------------------------------------------------------- soundness


def test_three_ticks_cost_three():
    j = jd("grade = nat:3\nprog = loop 3 {do tick}", COST)
    report = verify_soundness(j, "cost", model=COST)
    assert report.ok and report.checked == 16
    assert report.worst == "max_cost=3"
    assert report.lines()[0] == "check=soundness instance=cost grade=nat:3 points=16 verdict=pass"


def test_two_coins_fail_with_mass_one_quarter():
    j = jd("grade = rat:1/4\nprog = v1 <- coin(); v2 <- coin()\npost = v1 = 1 || v2 = 1", COINS)
    report = verify_soundness(j, "union-bound", model=COINS)
    assert report.ok and report.worst == "max_failure_mass=1/4"
    tight = jd("grade = rat:1/5\nprog = v1 <- coin(); v2 <- coin()\npost = v1 = 1 || v2 = 1", COINS)
    assert not verify_soundness(tight, "union-bound", model=COINS).ok


def test_insecure_control_flow_is_refuted():
    prog = "if y {x := 1} else {x := 1}"
    j = jd(f"grade = bits:T\npre = eqPub(x) && y<1> = 1\nprog = {prog}\npost = eqPub(x)", PC, REL)
    j = type(j)(j.grade, j.pre, elaborate_pc(j.prog), j.post)
    cx = refute(j, "pc-security", model=PC, pm=REL)
    assert cx is not None
    left, right = cx.initial
    assert left["x"] == right["x"] and left["y"] != right["y"]
    assert "traces differ" in cx.violated


def test_public_guard_traces_must_fit_the_grade():
    j = jd("grade = bits:T\npre = eqPub(x) && eqPub(y)\nprog = if y {do cfTrue; x := 1} else {do cfFalse; x := 1}\npost = eqPub(x)", PC, REL)
    # traces agree, but the else branch records "F", which is not below "T"
    cx = refute(j, "pc-security", model=PC, pm=REL)
    assert cx is not None and "bits:F" in cx.observed
    wide = jd("grade = bits:T\npre = eqPub(x) && y<1> = 1 && eqPub(y)\nprog = if y {do cfTrue; x := 1} else {do cfFalse; x := 1}\npost = eqPub(x)", PC, REL)
    assert verify_soundness(wide, "pc-security", model=PC, pm=REL).ok


def test_under_costed_loop_is_refuted():
    j = jd("grade = nat:2\nprog = loop 3 {do tick}", COST)
    cx = refute(j, "cost", model=COST)
    assert cx.initial == Memory({"x": 0, "y": 0})
    assert cx.violated == "annotation nat:3 exceeds grade nat:2"


def test_seclevel_checks_every_clearance_above_the_grade():
    m = load_model("[model]\nvars = a, b\ncell = 0..2\n[levels]\na = 3\n")
    ok = jd("grade = max:3\npre = a = 2\nprog = b <- secure(a)\npost = b = 2", m)
    assert list(clearance_levels(m, ok.grade)) == [3, 4]
    assert verify_soundness(ok, "seclevel", model=m).ok
    low = jd("grade = max:2\npre = a = 2\nprog = b <- secure(a)\npost = b = 2", m)
    cx = refute(low, "seclevel", model=m)
    assert cx is not None and "clearance 2" in cx.violated


def test_evaluation_errors_are_counterexamples():
    m = Model.make(("x",), 0, 3, nat_bound=2)
    j = jd("grade = nat:9\nprog = loop x {do tick}", m)
    cx = refute(j, "cost", model=m)
    assert cx.observed == "error" and cx.initial == Memory({"x": 3})


def test_relational_mode_must_match_the_instance():
    j = jd("grade = nat:0\nprog = skip", COST)
    with pytest.raises(BackendError):
        verify_soundness(j, "cost", model=COST, pm=REL)


def test_unknown_instance():
    with pytest.raises(BackendError):
        verify_soundness(jd("grade = nat:0\nprog = skip", COST), "nope", model=COST)


def test_budget():
    with pytest.raises(BudgetError):
        verify_soundness(jd("grade = nat:0\nprog = skip", COST), "cost", model=COST, budget=4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.integers(0, 6))
def test_refute_agrees_with_verify(k, grade):
    j = jd(f"grade = nat:{grade}\nprog = loop {k} {{do tick}}", COST)
    report = verify_soundness(j, "cost", model=COST)
    assert (refute(j, "cost", model=COST) is None) == report.ok == (k <= grade)


# ------------------------------------------------------------------ axioms


def test_tick_validates_at_one():
    t = parse_tables("command tick pre=tt grade=nat:1", COST)
    assert validate_axioms(t, "cost", model=COST).ok


def test_tick_fails_at_zero_with_witness():
    t = parse_tables("command tick pre=tt grade=nat:0", COST)
    report = validate_axioms(t, "cost", model=COST)
    (bad,) = report.failing()
    assert bad.counterexample.initial == Memory({"x": 0, "y": 0})
    assert "status=fail" in bad.record() and "witness=" in bad.record()


def test_bernoulli_entry_is_exact():
    m = Model.make(("v",), 0, 1)
    exact = parse_tables('proc bern(1, 4) id=b pre=tt grade=rat:3/4 post="r = 1"', m)
    assert validate_axioms(exact, "union-bound", model=m).ok
    under = parse_tables('proc bern(1, 4) id=b pre=tt grade=rat:74/100 post="r = 1"', m)
    report = validate_axioms(under, "union-bound", model=m)
    assert not report.ok and "3/4" in report.failing()[0].counterexample.violated


def test_fair_coin_entries():
    m = Model.make(("v",), 0, 1)
    t = parse_tables('proc coin id=half grade=rat:1/2 post="r = 1"\nproc coin id=any grade=rat:0 post="r = 0 || r = 1"', m)
    assert validate_axioms(t, "union-bound", model=m).valid_ids == {"half", "any"}


def test_seclevel_entry_grade_must_cover_its_arguments():
    m = load_model("[model]\nvars = a, b\ncell = 0..2\n[levels]\na = 3\n")
    t = parse_tables('proc secure(a) id=s grade=max:2 post="r = a"', m)
    assert not validate_axioms(t, "seclevel", model=m).ok
    t = parse_tables('proc secure(a) id=s grade=max:3 post="r = a"', m)
    assert validate_axioms(t, "seclevel", model=m).ok


def test_missing_implementation_is_an_error():
    t = parse_tables("command launch grade=nat:0", COST)
    with pytest.raises(BackendError):
        validate_axioms(t, "cost", model=COST)


def test_report_summary_line():
    t = parse_tables("command tick grade=nat:1", COST)
    lines = validate_axioms(t, "cost", model=COST).lines()
    assert lines[-1] == "check=axioms instance=cost entries=1 verdict=pass"
