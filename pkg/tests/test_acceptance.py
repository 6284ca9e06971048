"""Acceptance criteria AC1-AC8, each at its stated tolerance and time limit.

Run alone with ``pytest tests/test_acceptance.py``; the terminal summary
prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import functools
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from gradedhoare.backends import Writer, builtin_impls, instance_backend, run
from gradedhoare.cli import EXIT_REJECT, main
from gradedhoare.corpus import load_cases
from gradedhoare.ghl import elaborate_pc
from gradedhoare.grading import Grade, MaxNat, NatCost, NatMatrix, NonNegRat, parse_grade
from gradedhoare.harness import clearance_levels, refute
from gradedhoare.kernel import run_suite
from gradedhoare.syntax import (
    App,
    Assign,
    Command,
    If,
    Loop,
    Model,
    Seq,
    Skip,
    Var,
    enumerate_memories,
    num,
    parse_program,
)

CASES = load_cases()
EXPECTED_MATRIX = Grade("mat", ((0, 1, 0), (0, 0, 0), (1, 2, 0)))


@contextmanager
def within(seconds: float):
    start = time.perf_counter()
    yield
    spent = time.perf_counter() - start
    assert spent < seconds, f"took {spent:.2f}s, limit {seconds}s"


def cli(*argv: str) -> int:
    return main(list(argv))


def case_argv(name: str, with_derivation: bool = True) -> list[str]:
    c = CASES[name]
    argv = ["--instance", c.instance, "--model", str(c.model_path), "--tables", str(c.tables_path),
            "--judgment", str(c.judgment_path)]
    if with_derivation and c.derivation_path is not None:
        argv += ["--derivation", str(c.derivation_path)]
    return argv


# --------------------------------------------------------------------- AC1


@pytest.mark.criterion("AC1", "dataflow matrix reproduced by checker and runs")
def test_ac1_dataflow():
    with within(1.0):
        case = CASES["df_example"]
        j = case.check(strict=True)
        assert j.grade == EXPECTED_MATRIX
        assert case.model.var_order == ("x", "y", "z") and len(case.model.cell_domain) == 4
        backend = Writer(NatMatrix(3))
        impls = builtin_impls("dataflow")
        mems = list(enumerate_memories(case.model))
        assert len(mems) == 64
        for m in mems:
            assert run(j.prog, backend, impls, case.model, m).annotation == EXPECTED_MATRIX


# --------------------------------------------------------------------- AC2


def _random_matrix(rng: random.Random, n: int) -> Grade:
    return Grade("mat", tuple(tuple(rng.randint(0, 3) for _ in range(n)) for _ in range(n)))


@pytest.mark.criterion("AC2", "dataflow composition and monoid laws")
def test_ac2_matrix_monoid():
    with within(5.0):
        M3 = NatMatrix(3)
        A = Grade("mat", ((0, 1, 0), (0, 0, 0), (0, 0, 0)))
        B = Grade("mat", ((0, 0, 0), (0, 0, 0), (1, 1, 0)))
        assert M3.mul(A, B) == EXPECTED_MATRIX
        rng = random.Random(1729)
        for _ in range(500):
            n = rng.randint(1, 4)
            M = NatMatrix(n)
            a, b, c = (_random_matrix(rng, n) for _ in range(3))
            assert M.mul(M.unit, a) == a == M.mul(a, M.unit)
            assert M.mul(M.mul(a, b), c) == M.mul(a, M.mul(b, c))
        report = run_suite("kleisli", trials=500, instances=["dataflow"])
        assert report.ok, report.render()


# --------------------------------------------------------------------- AC3


@pytest.mark.criterion("AC3", "union bound over two coins, exact rationals")
def test_ac3_union_bound(capsys):
    with within(1.0):
        R = NonNegRat()
        assert R.mul(parse_grade("rat:0.025"), parse_grade("rat:0.025")) == parse_grade("rat:0.05")

        # an entry claiming 1/8 per coin does not survive validation: the real mass is 1/2
        loose = CASES["ub_two_coins_loose"]
        (bad,) = loose.validate().failing()
        assert bad.entry.id == "coin" and "1/2" in bad.counterexample.violated
        assert loose.accepted(strict=False) and not loose.accepted(strict=True)

        # the honest table: 1/2 per coin, total 1, exact mass 1/4
        honest = CASES["ub_two_coins"]
        assert honest.check(strict=True).grade == Grade("rat", Fraction(1))
        report = honest.soundness()
        assert report.ok and report.worst == "max_failure_mass=1/4"

        tight = CASES["ub_two_coins_tight"]
        assert tight.judgment.grade == Grade("rat", Fraction(1, 8))
        cx = refute(tight.judgment, "union-bound", model=tight.model)
        assert cx is not None and "1/4" in cx.violated
        assert cli("soundness", *case_argv("ub_two_coins_tight")) == EXIT_REJECT
    capsys.readouterr()


# --------------------------------------------------------------------- AC4


@pytest.mark.criterion("AC4", "program-counter security, secure and insecure")
def test_ac4_pc_security(capsys):
    with within(1.0):
        secure = CASES["pc_secure_T"]
        m = secure.model
        assert m.cell_domain == (0, 1)
        plain = parse_program("if x {x := 1; y := 1} else {x := 0; y := 0}", m.signature, m.var_order)
        assert secure.judgment.prog == elaborate_pc(plain)
        assert secure.judgment.grade == Grade("bits", "T")
        secure.check(strict=True)
        assert secure.soundness().ok

        insecure = CASES["pc_insecure_T"]
        cx = refute(insecure.judgment, "pc-security", model=insecure.model, pm=insecure.pm)
        (left, right) = cx.initial
        assert left["y"] != right["y"]
        assert "'T' vs 'F'" in cx.violated
        assert cli("soundness", *case_argv("pc_insecure_T", with_derivation=False)) == EXIT_REJECT
    capsys.readouterr()


# --------------------------------------------------------------------- AC5

LOOP_MODEL = Model.make(("x", "y"), 0, 3, nat_bound=4)


def _random_program(rng: random.Random, depth: int):
    leaves = [
        lambda: Skip(),
        lambda: Command("tick"),
        lambda: Assign(rng.choice("xy"), App(rng.choice(["+", "*", "max"]), (Var(rng.choice("xy")), num(rng.randint(0, 3))))),
    ]
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(leaves)()
    match rng.randrange(3):
        case 0:
            return Seq(_random_program(rng, depth - 1), _random_program(rng, depth - 1))
        case 1:
            guard = App("<?", (Var(rng.choice("xy")), num(rng.randint(0, 3))))
            return If(guard, _random_program(rng, depth - 1), _random_program(rng, depth - 1))
        case _:
            count = rng.choice([num(rng.randint(0, 2)), App("c2n", (Var(rng.choice("xy")),))])
            return Loop(count, _random_program(rng, depth - 1))


def _unfold(body, k: int):
    return functools.reduce(Seq, [body] * k) if k else Skip()


@pytest.mark.criterion("AC5", "loop equals its k-fold unfolding")
def test_ac5_loop_unfolding():
    with within(30.0):
        rng = random.Random(1729)
        backend, impls = Writer(NatCost()), builtin_impls("cost")
        mems = list(enumerate_memories(LOOP_MODEL))
        for _ in range(100):
            body = _random_program(rng, 3)
            for k in range(LOOP_MODEL.nat_bound + 1):
                looped, unfolded = Loop(num(k), body), _unfold(body, k)
                for m in mems:
                    a = run(looped, backend, impls, LOOP_MODEL, m)
                    b = run(unfolded, backend, impls, LOOP_MODEL, m)
                    assert a == b, (body, k, m)


# --------------------------------------------------------------------- AC6


@pytest.mark.criterion("AC6", "soundness over the corpus, refutations of bad judgments")
def test_ac6_corpus_soundness():
    with within(60.0):
        accepted = [c for c in CASES.values() if c.expect == "accept"]
        refuted = [c for c in CASES.values() if c.expect == "refute"]
        assert len(accepted) >= 20 and len(refuted) >= 5
        assert {c.instance for c in accepted} == {"cost", "pc-security", "dataflow", "union-bound", "seclevel"}
        for c in accepted:
            c.check(strict=True)
            report = c.soundness()
            assert report.ok, report.render()
        for c in refuted:
            assert not c.soundness().ok, c.name


# --------------------------------------------------------------------- AC7


@pytest.mark.criterion("AC7", "law suites at 200 trials, default seed")
def test_ac7_law_suites():
    with within(30.0):
        for suite in ("kleisli", "coproduct", "freyd", "fibration", "lifting"):
            report = run_suite(suite, trials=200)
            assert report.ok, report.render()
            assert report.seed == 1729
        fib_laws = {r.law for r in run_suite("fibration", trials=200).results}
        assert {"pushforward-formula", "frobenius-exists", "frobenius-eq", "conditional-decomposition"} <= fib_laws


# --------------------------------------------------------------------- AC8


@pytest.mark.criterion("AC8", "security levels compose by max")
def test_ac8_seclevel():
    with within(1.0):
        assert MaxNat().mul(Grade("max", 3), Grade("max", 7)) == Grade("max", 7)
        two = CASES["sl_two"]
        assert two.check(strict=True).grade == Grade("max", 7)
        assert two.soundness().ok
        low = CASES["sl_two_low"]
        assert low.judgment.grade == Grade("max", 6)
        assert not low.accepted()
        assert list(clearance_levels(low.model, low.judgment.grade))[0] == 6
        cx = refute(low.judgment, "seclevel", model=low.model)
        assert cx is not None and "at clearance 6" in cx.violated
        # b sits at level 7, so at clearance 6 secure(b) answers the least cell value
        lo = low.model.cell_domain[0]
        assert cx.initial["b"] != lo
        at6 = run(low.judgment.prog, instance_backend("seclevel", low.model, 6), builtin_impls("seclevel"), low.model, cx.initial)
        assert at6.mem["d"] == lo


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
