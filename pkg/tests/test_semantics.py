import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from massa.formula import Box, Dia, Neg, parse, to_nnf
from massa.fo import as_geometric, parse_fo
from massa.semantics import (
    BudgetExceeded, Frame, Model, all_frames, corresponds, eval_fo, eval_fo_frame, eval_modal,
    eval_modal_batch, fo_equivalent, frame_validates, frames_array, iso_frames, modal_equivalent,
)

from conftest import formulas

SER = "forall x. exists y. x R y"
REF = "forall x. x R x"
FUN = "forall x y z. (x R y & x R z) -> y = z"
DIR = "forall x y z. (x R y & x R z) -> exists t. (y R t & z R t)"


def test_frame_rejects_bad_edges():
    with pytest.raises(ValueError):
        Frame(2, {(0, 2)})
    with pytest.raises(ValueError):
        Frame(0)


def test_eval_modal_on_a_chain():
    fr = Frame(3, {(0, 1), (1, 2)})
    m = Model(fr, {"p": frozenset({2})})
    assert eval_modal(m, 1, "box p") and eval_modal(m, 0, "dia dia p")
    assert not eval_modal(m, 0, "box p")
    # a dead end satisfies every box
    assert eval_modal(m, 2, "box false")


def test_frame_validates():
    assert frame_validates(Frame(1, {(0, 0)}), "box p -> p")
    assert not frame_validates(Frame(2, {(0, 1)}), "box p -> p")


def test_iso_counts():
    assert [iso_frames(n).shape[0] for n in range(1, 5)] == [2, 10, 104, 3044]


def test_iso_classes_cover_all_frames():
    def canon(m):
        n = m.shape[0]
        return min(m[np.ix_(p, p)].tobytes() for p in map(list, itertools.permutations(range(n))))

    for n in (1, 2, 3):
        full = {canon(m) for m in all_frames(n)}
        reps = [canon(m) for m in iso_frames(n)]
        assert len(reps) == len(set(reps)) == len(full)
        assert set(reps) == full


def test_full_enumeration_has_a_budget():
    assert all_frames(4).shape[0] == 65536
    with pytest.raises(BudgetExceeded):
        corresponds("box p -> p", parse_fo(REF), max_n=5)


@pytest.mark.parametrize("modal,fo", [
    ("box p -> dia p", SER),
    ("box p -> p", REF),
    ("dia p -> box p", FUN),
    ("dia box p -> box dia p", DIR),
    ("box p -> box box p", "forall x y z. (x R y & y R z) -> x R z"),
])
def test_known_correspondences(modal, fo):
    assert corresponds(modal, parse_fo(fo), max_n=3)


def test_counterexample_is_reported():
    res = corresponds("box p -> p", parse_fo(SER), max_n=2)
    assert not res.ok
    fr = res.counterexample
    assert frame_validates(fr, "box p -> p") != eval_fo(fr, parse_fo(SER))
    assert "frame" in res.detail


def test_iso_and_full_checks_agree():
    a = corresponds("dia box p -> box dia p", parse_fo(DIR), max_n=4, up_to_iso=True)
    assert a.ok and a.frames_checked == 2 + 10 + 104 + 3044


def test_fo_equivalent():
    assert fo_equivalent(parse_fo(DIR), parse_fo(
        "forall x y z. (x R y & x R z) -> exists t w. (y R t & z R w & t = w)"), max_n=3)
    assert not fo_equivalent(parse_fo(SER), parse_fo(REF), max_n=2)


def test_free_variables_rejected():
    with pytest.raises(ValueError):
        fo_equivalent(parse_fo("x R y"), parse_fo(REF))


# ---------------------------------------------------------------- properties

frames_st = st.integers(1, 3).flatmap(lambda n: st.builds(
    Frame, st.just(n), st.frozensets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)))))


@st.composite
def models(draw):
    fr = draw(frames_st)
    sub = st.frozensets(st.integers(0, fr.n - 1))
    return Model(fr, {"p": draw(sub), "q": draw(sub)})


@given(models(), formulas(max_leaves=6))
def test_batch_evaluator_matches_reference(m, f):
    rel = frames_array([m.frame])
    val = {k: np.array([w in s for w in range(m.frame.n)]) for k, s in m.valuation.items()}
    fast = eval_modal_batch(f, rel, val)[0]
    assert list(fast) == [eval_modal(m, w, f) for w in range(m.frame.n)]


AXIOM_TEXTS = [SER, REF, FUN, DIR, "forall x y. x R y -> y R x",
               "forall x y t. (x R y & x R t) -> y R t | t R y", "forall x. exists y. (x R y & y R y)"]


@settings(max_examples=80)
@given(frames_st, st.sampled_from(AXIOM_TEXTS))
def test_geometric_evaluator_matches_reference(fr, text):
    f = parse_fo(text)
    assert eval_fo(fr, as_geometric(f)) == eval_fo_frame(fr, f)


def test_nnf_and_duality_on_all_small_models():
    # exhaustive over every model with at most 3 worlds and 2 atoms
    for f in map(parse, ["dia box p -> box dia p", "box(p -> q) -> (box p -> box q)",
                         "~(dia p & box ~q) | box dia (p & q)"]):
        assert modal_equivalent(f, to_nnf(f), max_n=3)
    for g in map(parse, ["p", "p & ~q", "dia (p | q)"]):
        assert modal_equivalent(Box(g), Neg(Dia(Neg(g))), max_n=3)
        assert modal_equivalent(Dia(g), Neg(Box(Neg(g))), max_n=3)
