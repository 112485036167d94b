import itertools

import pytest
from hypothesis import given

from massa import calculus as C
from massa.calculus import (
    LF, EqA, GeometricRule, ProofTree, Rel, RulePremise, Sequent, apply_rule, check_proof,
    closing_axiom, instantiate_geometric, label_index, parse_sequent, rule_for, tree_from_json,
    tree_json,
)
from massa.algorithm import build_identity_derivation, run
from massa.formula import And, Atom, Box, Imp

from conftest import formulas

x, y, z, w, t = (label_index(n) for n in "xyzwt")
A, B = Atom("p"), Atom("q")


def seq(text):
    return parse_sequent(text)


def test_box_right_adds_fresh_successor():
    s = seq("x:q |- x:box p, z:q")
    (prem,) = apply_rule(C.BOX_R, s, LF(x, Box(A)), label=y)
    assert prem == seq("xRy, x:q |- z:q, y:p")


def test_box_right_freshness_violation():
    s = seq("xRy, x:q |- x:box p")
    with pytest.raises(C.FreshnessViolation):
        apply_rule(C.BOX_R, s, LF(x, Box(A)), label=y)


def test_freshness_is_global():
    s = seq("x:q |- x:box p")
    with pytest.raises(C.FreshnessViolation):
        apply_rule(C.BOX_R, s, LF(x, Box(A)), label=z, used_labels={z})


def test_and_left():
    (prem,) = apply_rule(C.AND_L, seq("x:p & q |- y:p"), LF(x, And(A, B)))
    assert prem == seq("x:p, x:q |- y:p")


def test_multiplicative_imp_left():
    s = seq("y:p, z:q, x:p -> q |- w:p, t:q")
    part = (seq("y:p |- w:p"), seq("z:q |- t:q"))
    left, right = apply_rule(C.IMP_L, s, LF(x, Imp(A, B)), partition=part)
    assert left == seq("y:p |- w:p, x:p")
    assert right == seq("z:q, x:q |- t:q")


def test_bad_partition():
    s = seq("y:p, x:p -> q |- w:p")
    with pytest.raises(C.SchemaMismatch):
        apply_rule(C.IMP_L, s, LF(x, Imp(A, B)), partition=(seq("|-"), seq("|-")))


def test_trivial_partition_matches_invertible_form():
    s = seq("y:p, z:q |- x:p & q, w:q")
    ctx = seq("y:p, z:q |- w:q")
    assert apply_rule(C.AND_R, s, LF(x, And(A, B)), partition=(ctx, ctx)) == \
        apply_rule(C.AND_R, s, LF(x, And(A, B)))


def test_box_left_needs_relational_atom():
    with pytest.raises(C.SchemaMismatch):
        apply_rule(C.BOX_L, seq("x:box p |- y:p"), LF(x, Box(A)), label=y)
    (prem,) = apply_rule(C.BOX_L, seq("xRy, x:box p |- y:p"), LF(x, Box(A)), label=y)
    assert closing_axiom(prem) == C.ID


@pytest.mark.parametrize("text,tag", [
    ("x:p |- x:p", C.ID), ("x:false |- y:q", C.BOT_L), ("y:q |- x:true", C.TOP_R),
    ("x=y, x:p |- y:p", C.EQ_AX), ("x=y, y=z, z:p |- x:p", C.EQ_AX), ("xRy, x:p |- y:p", None),
])
def test_initial_sequents(text, tag):
    assert closing_axiom(seq(text)) == tag


def test_equality_leaf_checks():
    s = seq("x=y, x:p |- y:p")
    assert check_proof(ProofTree(s, C.EQ_AX)).ok
    assert not check_proof(ProofTree(seq("xRy, x:p |- y:p"), C.EQ_AX)).ok


def test_check_reports_freshness_violation():
    bad = ProofTree(seq("xRy |- x:box p"), C.BOX_R,
                    (ProofTree(seq("xRy |- y:p"), "Id"),), LF(x, Box(A)), "R", y)
    rep = check_proof(bad)
    assert any("occurs in the conclusion" in str(v) for v in rep.violations)


def rule(name, concl, prems):
    return GeometricRule(name, tuple(concl), tuple(RulePremise(tuple(e), tuple(r)) for e, r in prems))


SER = rule("Ser", [], [([y], [Rel(x, y)])])
DIR = rule("Dir", [Rel(x, y), Rel(x, z)], [([t, w], [Rel(y, t), Rel(z, w), EqA(t, w)])])
FUN = rule("Fun", [Rel(x, y), Rel(x, z)], [([], [EqA(y, z)])])


def test_instantiate_seriality():
    s = seq("x:box p |- x:dia p")
    assert instantiate_geometric(SER, s, {x: x, y: y}) == [seq("xRy, x:box p |- x:dia p")]


def test_instantiate_directedness():
    s = seq("xRy, xRz |- ")
    got = instantiate_geometric(DIR, s, {x: x, y: y, z: z, t: t, w: w})
    assert [set(q.rel) for q in got] == [set(seq("xRy, yRt, xRz, zRw, t=w |-").rel)]


def test_instantiate_functionality():
    (prem,) = instantiate_geometric(FUN, seq("xRy, xRz |- "), {x: x, y: y, z: z})
    assert set(prem.rel) == {Rel(x, y), Rel(x, z), EqA(y, z)}


def test_instantiate_errors():
    with pytest.raises(C.PatternMismatch):
        instantiate_geometric(FUN, seq("xRy |- "), {x: x, y: y, z: z})
    with pytest.raises(C.FreshnessViolation):
        instantiate_geometric(DIR, seq("xRy, xRz, yRt |- "), {x: x, y: y, z: z, t: t, w: w})


def test_eigenvariable_condition():
    assert SER.violations() == [] and DIR.violations() == []
    bad = rule("Bad", [Rel(x, y)], [([y], [Rel(y, y)])])
    assert bad.violations()


def test_seriality_derivation_checks():
    out = run("box p -> dia p")
    rep = check_proof(out.derivation, out.rules)
    assert rep.ok and rep.cut_free
    assert out.rule.name == "Ser"


def test_json_round_trip():
    out = run("dia box p -> box dia p")
    back = tree_from_json(tree_json(out.derivation))
    assert check_proof(back, out.rules).ok
    assert back.main_branch() == out.derivation.main_branch()
    assert GeometricRule.from_json(out.rule.to_json()) == out.rule


def test_cut_rule_is_reported():
    a = ProofTree(seq("x:p |- x:p"), C.ID)
    cut = ProofTree(seq("x:p |- x:p"), C.CUT, (a, a), LF(x, A))
    rep = check_proof(cut)
    assert rep.ok and not rep.cut_free


# ---------------------------------------------------------------- properties

def saturate(s: Sequent, counter, depth=6) -> ProofTree:
    """Decompose bottom-up with apply_rule, leaving unprovable leaves open."""
    tag = closing_axiom(s)
    if tag is not None:
        return ProofTree(s, tag)
    if depth == 0:
        return ProofTree(s, "open")
    for side in ("L", "R"):
        for f in s.side(side):
            if isinstance(f.formula, Atom) or f.formula.children() == ():
                continue
            r = rule_for(side, f.formula)
            label = None
            if r in C.FRESH_RULES:
                label = next(counter)
            elif r in C.KEEP_RULES:
                succ = [q.b for q in s.rel if q.kind == "R" and q.a == f.label]
                if not succ:
                    continue
                label = succ[0]
            prems = apply_rule(r, s, f, label=label, keep_principal=False)
            kids = tuple(saturate(q, counter, depth - 1) for q in prems)
            return ProofTree(s, r, kids, f, side, label)
    return ProofTree(s, "open")


@given(formulas(), formulas())
def test_apply_rule_chains_check(f, g):
    s = Sequent((), (LF(x, f),), (LF(x, g),))
    tree = saturate(s, itertools.count(1))
    rep = check_proof(tree)
    assert all("open leaf" in v.reason for v in rep.violations)
    assert rep.cut_free


@given(formulas(max_leaves=6))
def test_identity_derivations_check(f):
    d = build_identity_derivation(f)
    assert check_proof(d.tree).ok


@given(formulas(max_leaves=6))
def test_weakening_smoke(f):
    tree = build_identity_derivation(f).tree
    extra = LF(max(tree.labels() | {0}) + 50, Atom("r"))
    weak = tree.map_sequents(lambda s: Sequent(s.rel, s.left + (extra,), s.right))
    assert check_proof(weak).ok


def test_emitted_rules_satisfy_eigenvariable_condition():
    for text in ["dia box p -> box dia p", "dia p -> box p", "box p -> dia p",
                 "box(box p -> q) | box(box q -> p)", "box p -> box box p"]:
        for r in run(text).rules:
            assert r.violations() == []
