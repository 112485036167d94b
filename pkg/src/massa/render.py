"""Text and LaTeX renderings of proof trees."""

from __future__ import annotations

import os
import sys

from .calculus import (GEOMETRIC, LabelledFormula, ProofTree, RelAtom, Sequent,
                       label_name)
from .formula import to_latex

_ANSI = {"red": "\x1b[31m", "blue": "\x1b[34m"}
_RESET = "\x1b[0m"


def use_colour(stream=None) -> bool:
    """MASSA_COLOR=never disables colouring; auto colours only terminals."""
    mode = os.environ.get("MASSA_COLOR", "auto").lower()
    if mode == "never":
        return False
    if mode == "always":
        return True
    stream = stream or sys.stdout
    return hasattr(stream, "isatty") and stream.isatty()


def _lf_text(f: LabelledFormula, colour: bool) -> str:
    s = str(f)
    if colour and f.colour in _ANSI:
        return f"{_ANSI[f.colour]}{s}{_RESET}"
    return s


def sequent_text(s: Sequent, colour: bool = False) -> str:
    ante = [str(r) for r in s.rel] + [_lf_text(f, colour) for f in s.left]
    succ = [_lf_text(f, colour) for f in s.right]
    return f"{', '.join(ante)} ⊢ {', '.join(succ)}".strip()


def ascii_tree(t: ProofTree, colour: bool = False, indent: str = "  ") -> str:
    """One node per line, conclusion first, premises indented beneath."""
    lines: list[str] = []

    def go(node: ProofTree, depth: int):
        lines.append(f"{indent * depth}[{node.display()}] {sequent_text(node.conclusion, colour)}")
        for p in node.premises:
            go(p, depth + 1)

    go(t, 0)
    return "\n".join(lines)


# ---------------------------------------------------------------- LaTeX

_RULE_TEX = {
    "Id": r"\mathsf{Id}", "botL": r"\bot_L", "topR": r"\top_R", "EqAx": r"\mathsf{Eq}",
    "andL": r"\wedge_L", "andR": r"\wedge_R", "orL": r"\vee_L", "orR": r"\vee_R",
    "impL": r"\to_L", "impR": r"\to_R", "negL": r"\neg_L", "negR": r"\neg_R",
    "boxL": r"\Box_L", "boxR": r"\Box_R", "diaL": r"\Diamond_L", "diaR": r"\Diamond_R",
    "EqRef": r"\mathsf{Ref}_=", "EqTrans": r"\mathsf{Trans}_=", "ReplR1": r"\mathsf{Repl}_{R1}",
    "ReplR2": r"\mathsf{Repl}_{R2}", "Repl": r"\mathsf{Repl}", "Cut": r"\mathsf{Cut}",
}


def _label_tex(i: int) -> str:
    n = label_name(i)
    return n if len(n) == 1 else f"{n[0]}_{{{n[1:]}}}"


def _rel_tex(r: RelAtom) -> str:
    op = "=" if r.kind == "Eq" else "R"
    return f"{_label_tex(r.a)} {op} {_label_tex(r.b)}"


def _lf_tex(f: LabelledFormula) -> str:
    body = f"{_label_tex(f.label)}:{to_latex(f.formula)}"
    if f.colour in ("red", "blue"):
        return rf"\textcolor{{{f.colour}}}{{{body}}}"
    return body


def sequent_tex(s: Sequent) -> str:
    ante = [_rel_tex(r) for r in s.rel] + [_lf_tex(f) for f in s.left]
    return f"{', '.join(ante)} \\vdash {', '.join(_lf_tex(f) for f in s.right)}"


def rule_tex(t: ProofTree) -> str:
    if t.rule == GEOMETRIC:
        return rf"\mathsf{{{t.rule_name or 'GR'}}}"
    return _RULE_TEX.get(t.rule, rf"\mathsf{{{t.rule}}}")


def latex_body(t: ProofTree) -> str:
    """ebproof commands, one inference per line, emitted premises first."""
    lines: list[str] = []

    def go(node: ProofTree):
        for p in node.premises:
            go(p)
        n = len(node.premises)
        lines.append(rf"\infer{n}[${rule_tex(node)}$]{{{sequent_tex(node.conclusion)}}}")

    go(t)
    return "\\begin{prooftree}\n" + "\n".join(lines) + "\n\\end{prooftree}"


def latex_document(t: ProofTree, title: str | None = None) -> str:
    head = [r"\documentclass[border=6pt,varwidth=\maxdimen]{standalone}", r"\usepackage{amsmath,amssymb}",
            r"\usepackage{xcolor}", r"\usepackage{ebproof}",
            r"\ebproofset{center=false}", r"\begin{document}"]
    if title:
        head.append(f"% {title}")
    return "\n".join(head) + "\n" + latex_body(t) + "\n\\end{document}\n"
