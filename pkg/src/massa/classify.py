"""Skeleton/PIA decomposition of NNF formulas and the analytic inductive test.

In negation normal form the Skeleton alphabet is {or, box} and the PIA
alphabet is {and, dia, literals}. A definite formula is decomposed by taking
the maximal {or, box} prefix as the Skeleton; every subtree hanging below it
must be a PIA formula with at most one negative literal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .formula import (
    And, Atom, Bot, Box, Dia, Formula, FormulaLike, Hole, Neg, Or, Top,
    as_formula, is_literal, substitute, to_ascii, to_nnf, walk,
)

Path = tuple[int, ...]


@dataclass(frozen=True)
class Beta:
    formula: Formula
    critical: str
    placeholder: str
    path: Path

    def to_json(self):
        return {"formula": to_ascii(self.formula), "critical": self.critical,
                "placeholder": self.placeholder}


@dataclass(frozen=True)
class Delta:
    formula: Formula
    vars: tuple[str, ...]
    placeholder: str
    path: Path

    def to_json(self):
        return {"formula": to_ascii(self.formula), "vars": list(self.vars),
                "placeholder": self.placeholder}


@dataclass(frozen=True)
class Decomposition:
    skeleton: Formula
    betas: tuple[Beta, ...]
    deltas: tuple[Delta, ...]
    omega: frozenset[tuple[str, str]] = frozenset()
    definite: bool = True

    @property
    def sahlqvist(self) -> bool:
        return not self.omega

    def assignment(self) -> dict[str, Formula]:
        out = {b.placeholder: b.formula for b in self.betas}
        out.update({d.placeholder: d.formula for d in self.deltas})
        return out

    def reconstruct(self) -> Formula:
        return substitute(self.skeleton, self.assignment())

    def below(self, p: str) -> set[str]:
        """Variables strictly below ``p`` in the transitive closure of the order."""
        seen: set[str] = set()
        todo = [b for a, b in self.omega if a == p]
        while todo:
            q = todo.pop()
            if q not in seen:
                seen.add(q)
                todo.extend(b for a, b in self.omega if a == q)
        return seen

    def to_json(self):
        return {
            "skeleton": to_ascii(self.skeleton),
            "betas": [b.to_json() for b in self.betas],
            "deltas": [d.to_json() for d in self.deltas],
            "omega": [{"lower": b, "upper": a} for a, b in sorted(self.omega)],
            "sahlqvist": self.sahlqvist,
            "definite": self.definite,
        }


@dataclass(frozen=True)
class DecompositionFailure:
    reason: str
    path: Path = ()


@dataclass(frozen=True)
class NotNNFReducible:
    reason: str
    status = "not_nnf_reducible"

    def to_json(self):
        return {"status": self.status, "reason": self.reason, "conjuncts": []}


@dataclass(frozen=True)
class NotAnalyticInductive:
    reason: str
    status = "not_analytic_inductive"

    def to_json(self):
        return {"status": self.status, "reason": self.reason, "conjuncts": []}


@dataclass(frozen=True)
class AnalyticInductive:
    conjuncts: tuple[Decomposition, ...]
    status = "analytic_inductive"

    def __post_init__(self):
        if not self.conjuncts:
            raise ValueError("at least one decomposition required")

    @property
    def sahlqvist(self) -> bool:
        return all(d.sahlqvist for d in self.conjuncts)

    @property
    def definite(self) -> bool:
        return len(self.conjuncts) == 1 and self.conjuncts[0].definite

    def to_json(self):
        return {"status": self.status, "sahlqvist": self.sahlqvist,
                "definite": self.definite,
                "conjuncts": [d.to_json() for d in self.conjuncts]}


ClassificationResult = Union[NotNNFReducible, NotAnalyticInductive, AnalyticInductive]


def _is_pia(f: Formula, allow_or: bool) -> bool:
    ok = (And, Dia, Atom, Neg, Bot, Top) + ((Or,) if allow_or else ())
    return all(isinstance(g, ok) for _, g in walk(f)) and all(
        is_literal(g) for _, g in walk(f) if isinstance(g, Neg))


def _fold_or(parts: list[Formula]) -> Formula:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def _pia_dnf(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return _pia_dnf(f.left) + _pia_dnf(f.right)
    if isinstance(f, And):
        return [And(a, b) for a in _pia_dnf(f.left) for b in _pia_dnf(f.right)]
    if isinstance(f, Dia):
        return [Dia(d) for d in _pia_dnf(f.sub)]
    return [f]


def normalize_definite(nnf: Formula) -> list[Formula]:
    """Split an NNF formula into definite conjuncts.

    Disjunctions inside PIA regions are distributed up to the PIA root, where
    they join the Skeleton; conjunctions in Skeleton position are distributed
    over disjunction and box until they reach the root.
    """
    if _is_pia(nnf, allow_or=True):
        if any(isinstance(g, Or) for _, g in walk(nnf)):
            return [_fold_or(_pia_dnf(nnf))]
        return [nnf]
    if isinstance(nnf, And):
        return normalize_definite(nnf.left) + normalize_definite(nnf.right)
    if isinstance(nnf, Or):
        return [Or(a, b) for a in normalize_definite(nnf.left)
                for b in normalize_definite(nnf.right)]
    if isinstance(nnf, Box):
        return [Box(c) for c in normalize_definite(nnf.sub)]
    return [nnf]


def split_skeleton_and(nnf: Formula) -> list[Formula]:
    """Like ``normalize_definite`` but every conjunction outside a diamond joins the Skeleton."""
    if isinstance(nnf, And):
        return split_skeleton_and(nnf.left) + split_skeleton_and(nnf.right)
    if isinstance(nnf, Or):
        return [Or(a, b) for a in split_skeleton_and(nnf.left) for b in split_skeleton_and(nnf.right)]
    if isinstance(nnf, Box):
        return [Box(c) for c in split_skeleton_and(nnf.sub)]
    return normalize_definite(nnf)


def _negatives(f: Formula) -> list[str]:
    return [g.sub.name for _, g in walk(f) if isinstance(g, Neg)]


def _positives(f: Formula) -> list[str]:
    negs = {p for p, g in walk(f) if isinstance(g, Neg)}
    return [g.name for p, g in walk(f) if isinstance(g, Atom) and p[:-1] not in negs]


def decompose(definite: Formula) -> Decomposition | DecompositionFailure:
    """Split a definite NNF formula into Skeleton, beta parts and delta parts."""
    betas: list[tuple[Path, Formula, str]] = []
    deltas: list[tuple[Path, Formula]] = []
    failure: list[DecompositionFailure] = []

    def go(f: Formula, path: Path) -> Formula:
        if isinstance(f, Or):
            return Or(go(f.left, path + (0,)), go(f.right, path + (1,)))
        if isinstance(f, Box):
            return Box(go(f.sub, path + (0,)))
        if not _is_pia(f, allow_or=False):
            bad = next(g for _, g in walk(f) if isinstance(g, (Or, Box, Hole)) or
                       (isinstance(g, Neg) and not is_literal(g)))
            failure.append(DecompositionFailure(
                f"subtree {to_ascii(f)} at {list(path)} is not a PIA formula "
                f"({to_ascii(bad)} below and/dia)", path))
            return f
        negs = _negatives(f)
        if len(negs) > 1:
            failure.append(DecompositionFailure(
                f"PIA part {to_ascii(f)} at {list(path)} has {len(negs)} negative "
                f"literals", path))
            return f
        if negs:
            betas.append((path, f, negs[0]))
            return Hole(f"x{len(betas)}")
        deltas.append((path, f))
        return Hole(f"y{len(deltas)}")

    skel = go(definite, ())
    if failure:
        return failure[0]
    rename = {}
    if len(betas) == 1:
        rename["x1"] = "x"
    if len(deltas) == 1:
        rename["y1"] = "y"
    skel = _rename_holes(skel, rename)
    bs = tuple(Beta(f, c, rename.get(f"x{i + 1}", f"x{i + 1}"), p)
               for i, (p, f, c) in enumerate(betas))
    ds = tuple(Delta(f, tuple(_positives(f)), rename.get(f"y{i + 1}", f"y{i + 1}"), p)
               for i, (p, f) in enumerate(deltas))
    return Decomposition(skel, bs, ds)


def _rename_holes(f: Formula, m: dict[str, str]) -> Formula:
    return substitute(f, {h: Hole(m.get(h, h)) for h in _holes(f)})


def _holes(f: Formula) -> list[str]:
    return [g.name for _, g in walk(f) if isinstance(g, Hole)]


def _lca_is_and(f: Formula, p: Path, q: Path) -> bool:
    n = 0
    while n < min(len(p), len(q)) and p[n] == q[n]:
        n += 1
    node = f
    for i in p[:n]:
        node = node.children()[i]
    return isinstance(node, And)


def omega_edges(d: Decomposition) -> set[tuple[str, str]]:
    """Pairs (critical, other) whose occurrences meet at a conjunction in some beta."""
    edges = set()
    for b in d.betas:
        neg_path = next(p for p, g in walk(b.formula) if isinstance(g, Neg))
        lit_paths = {p for p, g in walk(b.formula) if isinstance(g, Neg)}
        for p, g in walk(b.formula):
            if isinstance(g, Atom) and p[:-1] not in lit_paths:
                if _lca_is_and(b.formula, neg_path, p):
                    edges.add((b.critical, g.name))
    return edges


def find_cycle(edges: set[tuple[str, str]]) -> list[str] | None:
    succ: dict[str, list[str]] = {}
    for a, b in sorted(edges):
        succ.setdefault(a, []).append(b)
    state: dict[str, int] = {}
    stack: list[str] = []

    def dfs(v: str) -> list[str] | None:
        state[v] = 1
        stack.append(v)
        for w in succ.get(v, []):
            if state.get(w) == 1:
                return stack[stack.index(w):] + [w]
            if w not in state:
                c = dfs(w)
                if c:
                    return c
        state[v] = 2
        stack.pop()
        return None

    for v in sorted(succ):
        if v not in state:
            c = dfs(v)
            if c:
                return c
    return None


def omega_order(d: Decomposition) -> Decomposition | DecompositionFailure:
    edges = omega_edges(d)
    cycle = find_cycle(edges)
    if cycle:
        return DecompositionFailure("dependency cycle " + " -> ".join(cycle))
    return Decomposition(d.skeleton, d.betas, d.deltas, frozenset(edges), d.definite)


def classify(f: FormulaLike) -> ClassificationResult:
    f = as_formula(f)
    if any(isinstance(g, Hole) for _, g in walk(f)):
        return NotNNFReducible("formula contains placeholders")
    nnf = to_nnf(f)
    first = _classify_conjuncts(nnf, normalize_definite(nnf))
    if isinstance(first, AnalyticInductive):
        return first
    # the decomposition is existential: conjunctions may also sit in the Skeleton
    alt = split_skeleton_and(nnf)
    second = _classify_conjuncts(nnf, alt)
    return second if isinstance(second, AnalyticInductive) else first


def _classify_conjuncts(nnf: Formula, conjuncts: list[Formula]) -> ClassificationResult:
    definite = len(conjuncts) == 1 and conjuncts[0] == nnf
    out = []
    for c in conjuncts:
        d = decompose(c)
        if isinstance(d, DecompositionFailure):
            return NotAnalyticInductive(d.reason)
        d = omega_order(d)
        if isinstance(d, DecompositionFailure):
            return NotAnalyticInductive(d.reason)
        out.append(Decomposition(d.skeleton, d.betas, d.deltas, d.omega, definite))
    return AnalyticInductive(tuple(out))
