from __future__ import annotations

import pytest

from gradedhoare.backends import INSTANCES
from gradedhoare.corpus import load_cases
from gradedhoare.errors import CheckError
from gradedhoare.ghl import cited_entries

CASES = load_cases()
ACCEPT = sorted(n for n, c in CASES.items() if c.expect == "accept")
REFUTE = sorted(n for n, c in CASES.items() if c.expect == "refute")
STRICT = sorted(n for n, c in CASES.items() if c.expect == "strict-reject")


def test_corpus_coverage():
    assert len(ACCEPT) >= 20 and len(REFUTE) >= 5 and STRICT
    assert {CASES[n].instance for n in ACCEPT} == set(INSTANCES)


@pytest.mark.parametrize("name", ACCEPT)
def test_accepted_cases_check_and_are_sound(name):
    case = CASES[name]
    assert case.check(strict=True) == case.judgment
    report = case.soundness()
    assert report.ok, report.render()


@pytest.mark.parametrize("name", REFUTE)
def test_refuted_cases(name):
    case = CASES[name]
    if case.derivation_path is not None:
        with pytest.raises(CheckError):
            case.check()
    report = case.soundness()
    assert not report.ok and report.counterexample is not None


@pytest.mark.parametrize("name", STRICT)
def test_strict_rejections(name):
    case = CASES[name]
    assert case.accepted(strict=False)
    assert not case.accepted(strict=True)
    bad = {r.entry.id for r in case.validate().failing()}
    assert bad & cited_entries(case.derivation())


def test_shipped_tables_cited_by_accepted_cases_are_valid():
    for name in ACCEPT:
        case = CASES[name]
        report = case.validate()
        used = cited_entries(case.derivation())
        assert used <= report.valid_ids, (name, [r.record() for r in report.failing()])
