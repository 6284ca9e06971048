from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradedhoare.assertions import (
    FF,
    TT,
    And,
    Atom,
    Eq,
    Exists,
    Or,
    OrIdx,
    PredModel,
    denote_formula,
    entailment_witness,
    entails,
    holds,
    parse_formula,
    pretty_formula,
    substitute,
)
from gradedhoare.errors import BudgetError, NamespaceError, SortError
from gradedhoare.syntax import CELL, TRUE, App, Const, Context, Memory, Meta, Model, Var, evaluate, num

VARS = ("x", "y")
MODEL = Model.make(VARS, 0, 2)
CTX = Context.program(VARS)
UNARY = PredModel()
REL = PredModel(relational=True)


def x_eq(k):
    return Eq(Var("x"), num(k))


# ------------------------------------------------------------------ examples


def test_empty_conjunction_is_the_whole_world():
    p = denote_formula(TT, CTX, MODEL, UNARY)
    assert p.members == frozenset(p.world) and len(p) == 9


def test_empty_disjunction_is_empty():
    assert len(denote_formula(FF, CTX, MODEL, UNARY)) == 0


def test_equation_denotes_a_singleton():
    m = Model.make(("x",), 0, 2)
    p = denote_formula(x_eq(1), Context.program(("x",)), m, UNARY)
    assert p.members == {Memory({"x": 1})}


def test_public_equality_is_the_diagonal():
    m = Model.make(("x",), 0, 1)
    p = denote_formula(Atom("eqPub", (Var("x"),)), Context.program(("x",)), m, REL)
    mem = lambda v: Memory({"x": v})  # noqa: E731
    assert len(p.world) == 4
    assert p.members == {(mem(0), mem(0)), (mem(1), mem(1))}


def test_entailment_examples():
    assert entails(CTX, [x_eq(1)], x_eq(1), MODEL, UNARY)
    assert entails(CTX, [x_eq(1)], Or((x_eq(1), x_eq(2))), MODEL, UNARY)
    assert not entails(CTX, [Or((x_eq(1), x_eq(2)))], x_eq(1), MODEL, UNARY)


def test_boolean_excluded_middle_fails_relationally():
    m = Model.make(("b",), 0, 1)
    ctx = Context.program(("b",))
    b = App("c2b", (Var("b"),))
    goal = Or((Eq(b, TRUE), Eq(b, Const("false"))))
    assert entails(ctx, [TT], goal, m, UNARY)
    assert not entails(ctx, [TT], goal, m, REL)
    left, right = entailment_witness(ctx, [TT], goal, m, REL)
    assert left["b"] != right["b"]


def test_substitution_examples():
    assert substitute(x_eq(1), "x", num(2)) == Eq(num(2), num(1))
    assert substitute(Eq(Var("y"), num(1)), "x", num(2)) == Eq(Var("y"), num(1))
    x1 = App("+", (Var("x"), num(1)))
    assert substitute(Or((x_eq(0), x_eq(1))), "x", x1) == Or((Eq(x1, num(0)), Eq(x1, num(1))))


def test_substitution_avoids_capture():
    f = Exists("z", CELL, Eq(Var("x"), Var("z")))
    g = substitute(f, "x", Var("z"))
    assert isinstance(g, Exists) and g.var != "z"
    assert g.body == Eq(Var("z"), Var(g.var))


def test_template_expressions_cannot_be_substituted():
    with pytest.raises(NamespaceError):
        substitute(x_eq(1), "x", Meta("z"))


def test_bounded_disjunction_unfolds():
    f = OrIdx("i", 2, Eq(Var("x"), Var("i")))
    p = denote_formula(f, CTX, MODEL, UNARY)
    q = denote_formula(Or((x_eq(0), x_eq(1))), CTX, MODEL, UNARY)
    assert p == q


def test_existential_projects():
    f = Exists("w", CELL, Eq(Var("x"), App("+", (Var("w"), Var("w")))))
    members = {m["x"] for m in denote_formula(f, CTX, MODEL, UNARY)}
    assert members == {0, 1, 2}  # 2w mod 3 covers every cell


def test_relational_constant_equation_is_both_projections():
    c = num(1)
    eq = denote_formula(Eq(Var("x"), c), CTX, MODEL, REL)
    both = denote_formula(And((Atom("eqv1", (Var("x"), c)), Atom("eqv2", (Var("x"), c)))), CTX, MODEL, REL)
    assert eq == both


# ---------------------------------------------------------------- errors


def test_ill_sorted_equation():
    with pytest.raises(SortError):
        denote_formula(Eq(num(1), TRUE), CTX, MODEL, UNARY)


def test_unknown_atom():
    with pytest.raises(SortError):
        denote_formula(Atom("nope", (Var("x"),)), CTX, MODEL, UNARY)


def test_relational_atoms_need_relational_mode():
    with pytest.raises(SortError):
        denote_formula(Atom("eqPub", (Var("x"),)), CTX, MODEL, UNARY)


def test_budget_is_enforced():
    big = Model.make(("a", "b", "c", "d"), 0, 3, budget=100)
    with pytest.raises(BudgetError):
        entails(Context.program(big.var_order), [TT], TT, big, UNARY)


def test_parse_and_print():
    f = parse_formula("x = 1 && y = 2 || exists w : cell . x = w", MODEL.signature, CTX)
    assert parse_formula(pretty_formula(f), MODEL.signature, CTX) == f
    assert isinstance(f, Or)


# -------------------------------------------------------------- properties

exprs = st.recursive(
    st.one_of(st.sampled_from([Var("x"), Var("y")]), st.integers(0, 2).map(num)),
    lambda sub: st.builds(lambda op, a, b: App(op, (a, b)), st.sampled_from(["+", "*", "max"]), sub, sub),
    max_leaves=4,
)
atoms = st.builds(Eq, exprs, exprs)
formulas = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.lists(sub, max_size=3).map(lambda fs: And(tuple(fs))),
        st.lists(sub, max_size=3).map(lambda fs: Or(tuple(fs))),
        st.builds(lambda b: Exists("w", CELL, b), sub),
    ),
    max_leaves=5,
)


@settings(max_examples=200, deadline=None)
@given(formulas, st.sampled_from(VARS), exprs)
def test_substitution_lemma(f, v, e):
    lhs = denote_formula(substitute(f, v, e), CTX, MODEL, UNARY)
    inner = denote_formula(f, CTX, MODEL, UNARY)
    rhs = {m for m in lhs.world if m.set(v, evaluate(e, MODEL, m)) in inner}
    assert lhs.members == rhs


@settings(max_examples=100, deadline=None)
@given(st.lists(formulas, min_size=1, max_size=3))
def test_connectives_are_set_operations(fs):
    ds = [denote_formula(f, CTX, MODEL, UNARY) for f in fs]
    assert denote_formula(And(tuple(fs)), CTX, MODEL, UNARY).members == frozenset.intersection(*(d.members for d in ds))
    assert denote_formula(Or(tuple(fs)), CTX, MODEL, UNARY).members == frozenset.union(*(d.members for d in ds))


@settings(max_examples=100, deadline=None)
@given(formulas, formulas, formulas)
def test_extra_hypotheses_never_hurt(h1, h2, goal):
    if entails(CTX, [h1], goal, MODEL, UNARY):
        assert entails(CTX, [h1, h2], goal, MODEL, UNARY)


@settings(max_examples=100, deadline=None)
@given(formulas, st.tuples(st.integers(0, 2), st.integers(0, 2)))
def test_denotation_agrees_with_pointwise_truth(f, vals):
    m = Memory(zip(VARS, vals))
    assert (m in denote_formula(f, CTX, MODEL, UNARY)) == holds(f, m, MODEL, UNARY)
