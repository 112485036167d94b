import pytest
from hypothesis import given

from massa.formula import (
    And, Atom, Box, Dia, Hole, Imp, Neg, Or, ParseError, UnassignedPlaceholder,
    is_nnf, occurrences, parse, substitute, to_ascii, to_nnf, to_unicode,
)
from massa.semantics import modal_equivalent

from conftest import formulas

p, q, r = Atom("p"), Atom("q"), Atom("r")


def test_parse_church_rosser():
    assert parse("dia box p -> box dia p") == Imp(Dia(Box(p)), Box(Dia(p)))


def test_parse_atom():
    assert parse("p") == p


def test_implication_is_right_associative():
    assert parse("p -> q -> r") == Imp(p, Imp(q, r))


def test_precedence():
    assert parse("~p & q | r -> p") == Imp(Or(And(Neg(p), q), r), p)
    assert parse("box p & q") == And(Box(p), q)


@pytest.mark.parametrize("text", ["□p → ◇p", "[]p -> <>p", "box p -> dia p"])
def test_unicode_and_ascii_aliases(text):
    assert parse(text) == Imp(Box(p), Dia(p))


def test_parse_constants():
    assert to_ascii(parse("⊥ | ⊤")) == "false | true"


@pytest.mark.parametrize("text,offset", [("p &", 3), ("(p", 2), ("p q", 2), ("box", 3)])
def test_parse_error_reports_offset(text, offset):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert e.value.offset == offset
    assert e.value.expected


def test_parse_error_offset_is_in_bytes():
    with pytest.raises(ParseError) as e:
        parse("□p ∧")
    assert e.value.offset == len("□p ∧".encode())


def test_nnf_examples():
    assert to_nnf(parse("dia p -> box p")) == Or(Box(Neg(p)), Box(p))
    assert to_nnf(parse("~~p")) == p
    p1, p2 = Atom("p1"), Atom("p2")
    got = to_nnf(parse("box(box p1 -> p2) | box(box p2 -> p1)"))
    assert got == Or(Box(Or(Dia(Neg(p1)), p2)), Box(Or(Dia(Neg(p2)), p1)))


def test_occurrences():
    f = parse("box ~p | box p")
    assert [(o.path, o.sign) for o in occurrences(f, "p")] == [((0, 0, 0), "negative"), ((1, 0), "positive")]
    assert occurrences(parse("dia p"), "q") == []
    assert [o.sign for o in occurrences(parse("box(p1 & ~p2)"), "p2")] == ["negative"]


def test_antecedent_reverses_polarity():
    assert [o.positive for o in occurrences(parse("p -> p"), "p")] == [False, True]


def test_substitute_examples():
    tmpl = Or(Box(Hole("x")), Box(Hole("y")))
    assert substitute(tmpl, {"x": Neg(p), "y": p}) == parse("box ~p | box p")
    assert substitute(Hole("x"), {"x": Dia(q)}) == Dia(q)
    p1, p2 = Atom("p1"), Atom("p2")
    tmpl = Or(Hole("x1"), Or(Hole("x2"), Box(Hole("y"))))
    got = substitute(tmpl, {"x1": Dia(And(p1, Neg(p2))), "x2": Dia(Neg(p1)), "y": p2})
    assert got == to_nnf(parse("box(p1 -> p2) -> (box p1 -> box p2)"))


def test_substitute_unassigned():
    with pytest.raises(UnassignedPlaceholder):
        substitute(Box(Hole("x")), {})


@given(formulas())
def test_print_parse_round_trip(f):
    assert parse(to_ascii(f)) == f
    assert parse(to_unicode(f)) == f


@given(formulas())
def test_nnf_shape_and_idempotence(f):
    g = to_nnf(f)
    assert is_nnf(g)
    assert to_nnf(g) == g


@given(formulas(max_leaves=6))
def test_nnf_preserves_meaning(f):
    assert modal_equivalent(f, to_nnf(f), max_n=2)


@given(formulas())
def test_negation_flips_every_sign(f):
    for v in ("p", "q"):
        before = [o.positive for o in occurrences(f, v)]
        after = [o.positive for o in occurrences(Neg(f), v)]
        assert after == [not s for s in before]
