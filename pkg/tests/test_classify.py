import pytest
from hypothesis import given, strategies as st

from massa.classify import (
    AnalyticInductive, Beta, Decomposition, NotAnalyticInductive, find_cycle, classify,
    decompose, normalize_definite, omega_edges, omega_order,
)
from massa.formula import And, Atom, Box, Dia, Hole, Neg, Or, parse, substitute, to_nnf
from massa.semantics import modal_equivalent

p1, p2 = Atom("p1"), Atom("p2")


def parts(text):
    c = classify(text)
    assert isinstance(c, AnalyticInductive), c
    return c


def summary(d):
    return (str(d.skeleton), [(str(b.formula), b.critical) for b in d.betas],
            [(str(x.formula), list(x.vars)) for x in d.deltas])


# standard Sahlqvist shapes and their decompositions
EXAMPLES = {
    "dia p -> box p": ("box !x | box !y", [("~p", "p")], [("p", ["p"])]),
    "box p -> dia p": ("!x | !y", [("dia ~p", "p")], [("dia p", ["p"])]),
    "dia box p -> box dia p": ("box !x | box !y", [("dia ~p", "p")], [("dia p", ["p"])]),
    "box(box p1 -> p2) | box(box p2 -> p1)": (
        "box (!x1 | !y1) | box (!x2 | !y2)", [("dia ~p1", "p1"), ("dia ~p2", "p2")],
        [("p2", ["p2"]), ("p1", ["p1"])]),
}


@pytest.mark.parametrize("text", sorted(EXAMPLES))
def test_sahlqvist_examples(text):
    c = parts(text)
    assert c.sahlqvist and c.definite
    assert summary(c.conjuncts[0]) == EXAMPLES[text]


def test_properly_inductive_example():
    c = parts("box(p1 -> p2) -> (box p1 -> box p2)")
    assert c.definite and not c.sahlqvist
    d = c.conjuncts[0]
    assert str(d.skeleton) == "!x1 | (!x2 | box !y)"
    assert [(str(b.formula), b.critical) for b in d.betas] == [("dia (p1 & ~p2)", "p2"), ("dia ~p1", "p1")]
    # p1 below p2
    assert d.omega == frozenset({("p2", "p1")})
    assert d.below("p2") == {"p1"}


@pytest.mark.parametrize("text", ["box dia p -> dia box p", "p -> dia box p"])
def test_rejected(text):
    assert isinstance(classify(text), NotAnalyticInductive)


def test_atom_is_degenerate_inductive():
    c = parts("p")
    d = c.conjuncts[0]
    assert str(d.skeleton) == "!y" and not d.betas and len(d.deltas) == 1


def test_normalize_examples():
    f = to_nnf(parse("box ~p | box p"))
    assert normalize_definite(f) == [f]
    a, b, c = Atom("a"), Atom("b"), Atom("c")
    assert normalize_definite(And(Or(Box(a), Box(b)), Box(c))) == [Or(Box(a), Box(b)), Box(c)]
    g = parse("box((p & q) | r)")
    assert normalize_definite(g) == [g]
    assert modal_equivalent(g, normalize_definite(g)[0], max_n=3, max_atoms=3)


def test_normalize_distributes_or_out_of_pia():
    (d,) = normalize_definite(to_nnf(parse("dia (p | q) & ~q")))
    assert isinstance(d, Or)
    assert modal_equivalent(d, parse("dia (p | q) & ~q"), max_n=3)


def test_decompose_failure_names_subtree():
    d = decompose(to_nnf(parse("box dia p -> dia box p")))
    assert "dia box" in d.reason


def test_cycle_detection():
    d = Decomposition(Or(Hole("x1"), Hole("x2")),
                      (Beta(Dia(And(Atom("p"), Neg(Atom("q")))), "q", "x1", (0,)),
                       Beta(Dia(And(Atom("q"), Neg(Atom("p")))), "p", "x2", (1,))), ())
    assert omega_edges(d) == {("q", "p"), ("p", "q")}
    assert not isinstance(omega_order(d), Decomposition)
    assert find_cycle({("a", "b"), ("b", "a")}) is not None
    assert find_cycle({("a", "b"), ("b", "c")}) is None


def test_conjunction_in_skeleton_position():
    # read as one PIA part the root conjunction forces p below itself
    c = parts("dia (p | q) & ~p")
    assert not c.definite and len(c.conjuncts) == 2


def test_json_shape():
    j = classify("dia box p -> box dia p").to_json()
    assert j["status"] == "analytic_inductive"
    c = j["conjuncts"][0]
    assert set(c) == {"skeleton", "betas", "deltas", "omega", "sahlqvist", "definite"}
    assert c["betas"] == [{"formula": "dia ~p", "critical": "p", "placeholder": "x"}]


LIT = st.sampled_from(["p", "q"]).map(Atom)


def definite_pia(negatives):
    if negatives:
        base = LIT.map(Neg)
        return st.recursive(base, lambda s: st.one_of(
            s.map(Dia), st.builds(And, s, definite_pia(0)), st.builds(And, definite_pia(0), s)),
            max_leaves=3)
    return st.recursive(LIT, lambda s: st.one_of(s.map(Dia), st.builds(And, s, s)), max_leaves=3)


@st.composite
def inductive_formulas(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(definite_pia(draw(st.sampled_from([0, 1]))))
    if draw(st.booleans()):
        return Box(draw(inductive_formulas(depth - 1)))
    return Or(draw(inductive_formulas(depth - 1)), draw(inductive_formulas(depth - 1)))


def _acyclic(result):
    return isinstance(result, AnalyticInductive)


@given(inductive_formulas())
def test_reconstruction_and_census(f):
    c = classify(f)
    if not _acyclic(c):
        # only a dependency cycle may reject these shapes
        assert "cycle" in c.reason
        return
    nnf = to_nnf(f)
    ds = normalize_definite(nnf) if len(c.conjuncts) == len(normalize_definite(nnf)) else None
    for i, d in enumerate(c.conjuncts):
        got = substitute(d.skeleton, d.assignment())
        assert got == d.reconstruct()
        assert len(d.betas) == len(_negative_literals(got))
        if ds is not None:
            assert got == ds[i]
        for b in d.betas:
            assert b.critical in [a.name for a in _negative_literals(b.formula)]
        if d.sahlqvist:
            assert not d.omega


def _negative_literals(f):
    from massa.formula import walk
    return [g.sub for _, g in walk(f) if isinstance(g, Neg)]


@given(inductive_formulas())
def test_conjuncts_are_equivalent_to_the_input(f):
    c = classify(f)
    if _acyclic(c):
        whole = c.conjuncts[0].reconstruct()
        for d in c.conjuncts[1:]:
            whole = And(whole, d.reconstruct())
        assert modal_equivalent(whole, f, max_n=2)


@given(inductive_formulas())
def test_sahlqvist_formulas_are_inductive(f):
    c = classify(f)
    if _acyclic(c) and c.sahlqvist:
        assert all(not d.omega for d in c.conjuncts)
