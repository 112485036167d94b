import io
import re

import pytest

from massa.algorithm import build_identity_derivation, run
from massa.formula import parse
from massa.render import ascii_tree, latex_body, latex_document, sequent_text, use_colour

CR = run("dia box p -> box dia p").derivation
CONN = run("box(box p -> q) | box(box q -> p)").derivation


def test_ascii_tree_shape():
    lines = ascii_tree(CR).splitlines()
    assert len(lines) == CR.size()
    assert lines[0].startswith("[impR] ")
    assert any("[Dir]" in l for l in lines)
    depths = [len(l) - len(l.lstrip(" ")) for l in lines]
    assert depths[0] == 0 and all(b - a <= 2 for a, b in zip(depths, depths[1:]))


def test_colour_codes_only_when_asked():
    root = CR.conclusion
    assert "\x1b[" not in sequent_text(root)
    assert "\x1b[34m" in sequent_text(root, colour=True)


@pytest.mark.parametrize("mode,tty,want", [
    ("never", True, False), ("always", False, True), ("auto", False, False), ("auto", True, True),
])
def test_use_colour_env(monkeypatch, mode, tty, want):
    class Stream(io.StringIO):
        def isatty(self):
            return tty

    monkeypatch.setenv("MASSA_COLOR", mode)
    assert use_colour(Stream()) is want


def _stack_depth(body):
    depth = 0
    for n in re.findall(r"\\infer(\d)", body):
        depth = depth - int(n) + 1
        assert depth >= 1
    return depth


@pytest.mark.parametrize("tree", [CR, CONN])
def test_latex_is_a_single_well_stacked_proof(tree):
    body = latex_body(tree)
    assert body.count(r"\infer") == tree.size()
    assert _stack_depth(body) == 1
    assert body.count("{") == body.count("}")


def test_latex_names_the_rule_and_colours():
    body = latex_body(CONN)
    assert r"\infer2[$\mathsf{Conn}$]" in body
    assert r"\textcolor{blue}" in body and r"\vdash" in body
    ident = build_identity_derivation(parse("dia box p -> box dia p")).tree
    assert r"\textcolor{red}" in latex_body(ident)


def test_latex_document_preamble():
    doc = latex_document(CR, title="directedness")
    assert doc.startswith(r"\documentclass")
    assert r"\usepackage{ebproof}" in doc and doc.rstrip().endswith(r"\end{document}")
