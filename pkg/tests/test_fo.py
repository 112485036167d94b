import pytest
from hypothesis import given, settings, strategies as st

from massa.algorithm import run
from massa.corpus import CorpusConfig, generate
from massa.fo import (
    TOP_AXIOM, Disjunct, Eq, FOParseError, GeometricAxiom, R, as_geometric, axiom_ascii,
    fo_ascii, parse_fo, read_off_axiom, same_up_to_renaming, simplify, simplify_syntactic,
    validate_geometric,
)
from massa.semantics import fo_equivalent


def geo(text):
    a = as_geometric(parse_fo(text))
    assert a is not None, text
    return a


DIR_RAW = "forall x y z. (x R y & x R z) -> exists t w. (y R t & z R w & t = w)"
DIR = "forall x y z. (x R y & x R z) -> exists t. (y R t & z R t)"
FUN = "forall x y z. (x R y & x R z) -> y = z"
K_RAW = "forall x t. (x R t) -> exists y z. (x R y & x R z & t = y & t = z)"


def test_print_parse_round_trip():
    a = geo(DIR_RAW)
    assert geo(axiom_ascii(a)) == a
    assert "∀" in str(fo_ascii(parse_fo("∀x. ∃y. x R y"))) or fo_ascii(parse_fo("∀x. ∃y. x R y"))


def test_parse_error_offset():
    with pytest.raises(FOParseError) as e:
        parse_fo("forall x. x R")
    assert e.value.offset == 13


def test_read_off_directedness():
    out = run("dia box p -> box dia p")
    assert same_up_to_renaming(out.raw_axiom, geo(DIR_RAW))


def test_read_off_functionality():
    assert same_up_to_renaming(run("dia p -> box p").raw_axiom, geo(FUN))


def test_read_off_k_is_equivalent_to_the_stated_form():
    raw = run("box(p -> q) -> (box p -> box q)").raw_axiom
    assert fo_equivalent(raw, geo(K_RAW), max_n=4, up_to_iso=True)


def test_read_off_without_rule_is_top():
    assert read_off_axiom(None) == TOP_AXIOM


def test_simplify_directedness():
    assert same_up_to_renaming(simplify(geo(DIR_RAW)), geo(DIR))


def test_simplify_k_to_top():
    assert simplify(geo(K_RAW)).top


def test_simplify_connectedness():
    a = geo("forall x y t. (x R y & x R t) -> exists z. (y R z & z = t) | exists w. (t R w & y = w)")
    assert same_up_to_renaming(simplify(a), geo("forall x y t. (x R y & x R t) -> y R t | t R y"))


def test_simplify_drops_atoms_implied_by_antecedent():
    a = geo("forall x y. (x R y) -> (x R y & y = y)")
    assert simplify(a).top


def test_simplify_merges_universal_equalities():
    a = geo("forall x y. (x R y & x = y) -> y R x")
    s = simplify(a)
    assert fo_equivalent(s, geo("forall x. x R x -> x R x"), max_n=3)


def test_validate_accepts_dir_and_top():
    assert validate_geometric(geo(DIR)) == []
    assert validate_geometric(TOP_AXIOM) == []


def test_validate_reports_capture():
    bad = GeometricAxiom(("x", "t"), (R("x", "t"),), (Disjunct(("t",), (R("t", "t"),)),))
    assert validate_geometric(bad)


def test_validate_reports_free_variable():
    bad = GeometricAxiom(("x",), (R("x", "y"),), (Disjunct((), (Eq("x", "x"),)),))
    assert validate_geometric(bad)


def test_same_up_to_renaming_is_strict():
    assert not same_up_to_renaming(geo(DIR), geo(FUN))
    assert same_up_to_renaming(geo("forall a b. a R b -> b = a"), geo("forall x y. x R y -> x = y"))


# ---------------------------------------------------------------- properties

AXIOMS = [p.raw_axiom for f in generate(CorpusConfig(count=30, seed=5)) for p in run(f).parts]


@settings(max_examples=30)
@given(st.sampled_from(AXIOMS))
def test_simplify_on_corpus(a):
    s = simplify(a)
    assert validate_geometric(a) == [] and validate_geometric(s) == []
    assert fo_equivalent(a, s, max_n=4, up_to_iso=True)
    assert simplify(s) == s


UNIV = ["x", "y", "z"]
EXIST = ["u", "v"]


@st.composite
def geometric_axioms(draw):
    def atom(names):
        a, b = draw(st.sampled_from(names)), draw(st.sampled_from(names))
        return draw(st.sampled_from([R(a, b), Eq(a, b)]))

    ante = tuple(draw(st.lists(st.builds(lambda: None).map(lambda _: atom(UNIV)), max_size=3)))
    ds = []
    for _ in range(draw(st.integers(0, 2))):
        ex = tuple(draw(st.lists(st.sampled_from(EXIST), unique=True, max_size=2)))
        atoms = tuple(atom(UNIV + list(ex)) for _ in range(draw(st.integers(1, 3))))
        ds.append(Disjunct(ex, atoms))
    return GeometricAxiom(tuple(UNIV), ante, tuple(ds))


@settings(max_examples=150)
@given(geometric_axioms())
def test_syntactic_simplification_is_sound(a):
    s = simplify_syntactic(a)
    assert validate_geometric(s) == []
    assert fo_equivalent(a, s, max_n=3)


@settings(max_examples=60)
@given(geometric_axioms())
def test_simplify_idempotent(a):
    s = simplify(a)
    assert simplify(s) == s


def test_multi_disjunct_round_trip():
    a = run("box(box p -> q) | box(box q -> p)").raw_axiom
    assert len(a.disjuncts) == 2
    assert geo(str(a)) == a


def test_existential_distributes_over_disjunction():
    a = geo("forall x. exists y. (x R y | y R x)")
    assert [d.exist for d in a.disjuncts] == [("y",), ("y",)]


@given(geometric_axioms())
def test_print_parse_round_trip_random(a):
    assert geo(axiom_ascii(a)) == a
