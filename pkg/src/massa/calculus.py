"""Labelled sequents, G3K rule schemas, geometric rules and a proof checker.

Labels are non-negative integers; ``label_name`` gives the printed form.
Sequents keep their components as tuples (multisets), but the checker
compares contexts as sets of ``label:formula`` pairs, which is sound because
contraction and weakening are height-preserving admissible in G3K.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .formula import (
    And, Atom, Bot, Box, Dia, Formula, Imp, Neg, Or, Top, parse, to_ascii,
)

NAMES = ("x", "y", "z", "w", "t", "u", "v", "s")


def label_name(i: int) -> str:
    return NAMES[i] if i < len(NAMES) else f"x{i}"


def label_index(name: str) -> int:
    if name in NAMES:
        return NAMES.index(name)
    if name.startswith("x") and name[1:].isdigit():
        return int(name[1:])
    raise ValueError(f"unknown label {name!r}")


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class RelAtom:
    kind: str  # "R" or "Eq"
    a: int
    b: int

    def __post_init__(self):
        if self.kind not in ("R", "Eq"):
            raise ValueError(f"bad relational atom kind {self.kind!r}")

    def labels(self) -> tuple[int, int]:
        return (self.a, self.b)

    def rename(self, m: Mapping[int, int]) -> "RelAtom":
        return RelAtom(self.kind, m.get(self.a, self.a), m.get(self.b, self.b))

    def __str__(self):
        op = "R" if self.kind == "R" else "="
        return f"{label_name(self.a)}{op}{label_name(self.b)}"


def Rel(a: int, b: int) -> RelAtom:
    return RelAtom("R", a, b)


def EqA(a: int, b: int) -> RelAtom:
    return RelAtom("Eq", a, b)


@dataclass(frozen=True)
class LabelledFormula:
    """``label : formula``; colour, origin path and occurrence id are bookkeeping only."""

    label: int
    formula: Formula
    colour: str = field(default="none", compare=False)
    origin: tuple[int, ...] | None = field(default=None, compare=False)
    occ: int = field(default=-1, compare=False)
    marker: bool = field(default=False, compare=False)

    def with_(self, **kw) -> "LabelledFormula":
        return replace(self, **kw)

    def relabel(self, m: Mapping[int, int]) -> "LabelledFormula":
        return replace(self, label=m.get(self.label, self.label))

    def __str__(self):
        return f"{label_name(self.label)}:{to_ascii(self.formula)}"


LF = LabelledFormula


@dataclass(frozen=True)
class Sequent:
    rel: tuple[RelAtom, ...] = ()
    left: tuple[LabelledFormula, ...] = ()
    right: tuple[LabelledFormula, ...] = ()

    def labels(self) -> set[int]:
        out = {l for r in self.rel for l in r.labels()}
        out |= {f.label for f in self.left + self.right}
        return out

    def side(self, s: str) -> tuple[LabelledFormula, ...]:
        return self.left if s == "L" else self.right

    def key(self):
        return (frozenset(self.rel), frozenset(self.left), frozenset(self.right))

    def formulas_key(self):
        return (frozenset(self.left), frozenset(self.right))

    def add(self, rel: Iterable[RelAtom] = (), left: Iterable[LabelledFormula] = (),
            right: Iterable[LabelledFormula] = ()) -> "Sequent":
        return Sequent(self.rel + tuple(rel), self.left + tuple(left), self.right + tuple(right))

    def relabel(self, m: Mapping[int, int]) -> "Sequent":
        return Sequent(tuple(r.rename(m) for r in self.rel), tuple(f.relabel(m) for f in self.left),
                       tuple(f.relabel(m) for f in self.right))

    def normalized(self) -> "Sequent":
        """Drop duplicate entries, keeping first occurrences."""
        return Sequent(_dedupe(self.rel), _dedupe(self.left), _dedupe(self.right))

    def __str__(self):
        ante = [str(r) for r in self.rel] + [str(f) for f in self.left]
        return f"{', '.join(ante)} ⊢ {', '.join(str(f) for f in self.right)}".strip()


def _dedupe(items):
    seen, out = set(), []
    for i in items:
        if i not in seen:
            seen.add(i)
            out.append(i)
    return tuple(out)


def remove_one(items: tuple, target) -> tuple:
    out = list(items)
    for i, x in enumerate(out):
        if x == target:
            del out[i]
            return tuple(out)
    raise SchemaMismatch(f"{target} not present")


# ---------------------------------------------------------------- rules

ID, BOT_L, TOP_R, EQ_AX = "Id", "botL", "topR", "EqAx"
AND_L, AND_R, OR_L, OR_R = "andL", "andR", "orL", "orR"
IMP_L, IMP_R, NEG_L, NEG_R = "impL", "impR", "negL", "negR"
BOX_L, BOX_R, DIA_L, DIA_R = "boxL", "boxR", "diaL", "diaR"
EQ_REF, EQ_TRANS, REPL_R1, REPL_R2, REPL = "EqRef", "EqTrans", "ReplR1", "ReplR2", "Repl"
CUT = "Cut"
GEOMETRIC = "GR"

AXIOMS = (ID, BOT_L, TOP_R, EQ_AX)
LOGICAL = {
    AND_L: ("L", And), AND_R: ("R", And), OR_L: ("L", Or), OR_R: ("R", Or),
    IMP_L: ("L", Imp), IMP_R: ("R", Imp), NEG_L: ("L", Neg), NEG_R: ("R", Neg),
    BOX_L: ("L", Box), BOX_R: ("R", Box), DIA_L: ("L", Dia), DIA_R: ("R", Dia),
}
BINARY_RULES = (AND_R, OR_L, IMP_L)
TONICITY = (AND_R, OR_L, IMP_L, BOX_L, DIA_R)
TRANSLATION = (AND_L, OR_R, IMP_R, BOX_R, DIA_L)
FRESH_RULES = (BOX_R, DIA_L)
KEEP_RULES = (BOX_L, DIA_R)
EQUALITY = (EQ_REF, EQ_TRANS, REPL_R1, REPL_R2, REPL)


def rule_for(side: str, f: Formula) -> str:
    for tag, (s, cls) in LOGICAL.items():
        if s == side and isinstance(f, cls):
            return tag
    raise SchemaMismatch(f"no logical rule for {to_ascii(f)} on side {side}")


class CalculusError(ValueError):
    pass


class SchemaMismatch(CalculusError):
    pass


class FreshnessViolation(CalculusError):
    pass


class PatternMismatch(CalculusError):
    pass


@dataclass(frozen=True)
class Aux:
    """What a logical rule adds to each premise, bottom-up."""

    left: tuple[tuple[LabelledFormula, ...], ...]
    right: tuple[tuple[LabelledFormula, ...], ...]
    rel_add: tuple[RelAtom, ...] = ()
    rel_need: tuple[RelAtom, ...] = ()


def _mk(label: int, f: Formula, parent: LabelledFormula, side_path: int | None) -> LabelledFormula:
    origin = None if parent.origin is None or side_path is None else parent.origin + (side_path,)
    return LabelledFormula(label, f, parent.colour, origin, -1, parent.marker)


def aux_of(tag: str, principal: LabelledFormula, label: int | None = None) -> Aux:
    f, x = principal.formula, principal.label
    side, cls = LOGICAL[tag]
    if not isinstance(f, cls):
        raise SchemaMismatch(f"{tag} does not apply to {principal}")
    if tag in (BOX_R, DIA_L, BOX_L, DIA_R) and label is None:
        raise SchemaMismatch(f"{tag} needs a successor label")
    sub = lambda i, g, lab=x: _mk(lab, g, principal, i)  # noqa: E731
    if tag == AND_L:
        return Aux(((sub(0, f.left), sub(1, f.right)),), ((),))
    if tag == OR_R:
        return Aux(((),), ((sub(0, f.left), sub(1, f.right)),))
    if tag == IMP_R:
        return Aux(((sub(0, f.left),),), ((sub(1, f.right),),))
    if tag == NEG_L:
        return Aux(((),), ((sub(0, f.sub),),))
    if tag == NEG_R:
        return Aux(((sub(0, f.sub),),), ((),))
    if tag == AND_R:
        return Aux(((), ()), ((sub(0, f.left),), (sub(1, f.right),)))
    if tag == OR_L:
        return Aux(((sub(0, f.left),), (sub(1, f.right),)), ((), ()))
    if tag == IMP_L:
        return Aux(((), (sub(1, f.right),)), ((sub(0, f.left),), ()))
    y = label
    if tag == BOX_R:
        return Aux(((),), ((sub(0, f.sub, y),),), rel_add=(Rel(x, y),))
    if tag == DIA_L:
        return Aux(((sub(0, f.sub, y),),), ((),), rel_add=(Rel(x, y),))
    if tag == BOX_L:
        return Aux(((sub(0, f.sub, y),),), ((),), rel_need=(Rel(x, y),))
    if tag == DIA_R:
        return Aux(((),), ((sub(0, f.sub, y),),), rel_need=(Rel(x, y),))
    raise SchemaMismatch(tag)


def apply_rule(tag: str, target: Sequent, principal: LabelledFormula | RelAtom | None = None,
               label: int | None = None, partition: tuple[Sequent, Sequent] | None = None,
               keep_principal: bool = True, used_labels: Iterable[int] | None = None,
               rel: Sequence[RelAtom] = ()) -> list[Sequent]:
    """Premises of ``tag`` applied bottom-up to ``target``.

    ``label`` is the fresh label for box-right/dia-left and the successor for
    box-left/dia-right. ``partition`` splits the context of a binary rule
    (multiplicative form); without it contexts are copied. ``used_labels``
    extends the freshness check to the whole derivation. ``rel`` supplies the
    relational atoms an equality rule acts on.
    """
    if tag in LOGICAL:
        side = LOGICAL[tag][0]
        if not isinstance(principal, LabelledFormula) or principal not in target.side(side):
            raise SchemaMismatch(f"principal {principal} not on side {side} of {target}")
        aux = aux_of(tag, principal, label)
        if tag in FRESH_RULES:
            taken = target.labels() | set(used_labels or ())
            if label in taken:
                raise FreshnessViolation(f"label {label_name(label)} is not fresh for {tag}")
        for r in aux.rel_need:
            if r not in target.rel:
                raise SchemaMismatch(f"{tag} needs {r}")
        rest_l = remove_one(target.left, principal) if side == "L" else target.left
        rest_r = remove_one(target.right, principal) if side == "R" else target.right
        if tag in KEEP_RULES and keep_principal:
            rest_l, rest_r = target.left, target.right
        ctx = Sequent(target.rel, rest_l, rest_r)
        n = len(aux.left)
        if n == 2 and partition is not None:
            _check_partition(ctx, partition)
            bases = list(partition)
        else:
            bases = [ctx] * n
        return [Sequent(b.rel + aux.rel_add, b.left + aux.left[i], b.right + aux.right[i])
                for i, b in enumerate(bases)]
    if tag in EQUALITY:
        return [_equality_premise(tag, target, principal, rel)]
    raise SchemaMismatch(f"apply_rule does not handle {tag}")


def _check_partition(ctx: Sequent, part: tuple[Sequent, Sequent]):
    a, b = part
    for name in ("rel", "left", "right"):
        whole = list(getattr(ctx, name))
        for item in getattr(a, name) + getattr(b, name):
            if item in whole:
                whole.remove(item)
            elif item not in getattr(ctx, name):
                raise SchemaMismatch(f"partition item {item} not in context")
        if whole:
            raise SchemaMismatch(f"partition misses {', '.join(map(str, whole))}")


def _equality_premise(tag: str, target: Sequent, principal, rel: Sequence[RelAtom]) -> Sequent:
    def need(r):
        if r not in target.rel:
            raise SchemaMismatch(f"{tag} needs {r}")
    if tag == EQ_REF:
        x = principal
        if not isinstance(x, int) or x not in target.labels():
            raise SchemaMismatch("Eq-Ref needs a label occurring in the conclusion")
        return target.add(rel=(EqA(x, x),))
    if tag == EQ_TRANS:
        e1, e2 = rel
        need(e1), need(e2)
        if e1.kind != "Eq" or e2.kind != "Eq" or e1.b != e2.a:
            raise SchemaMismatch("Eq-Trans needs x=y and y=z")
        return target.add(rel=(EqA(e1.a, e2.b),))
    if tag in (REPL_R1, REPL_R2):
        e, r = rel
        need(e), need(r)
        if e.kind != "Eq" or r.kind != "R":
            raise SchemaMismatch(f"{tag} needs x=y and a relational atom")
        if tag == REPL_R1:
            if r.a != e.a:
                raise SchemaMismatch("Repl-R1 needs x=y, xRz")
            return target.add(rel=(Rel(e.b, r.b),))
        if r.b != e.a:
            raise SchemaMismatch("Repl-R2 needs x=y, zRx")
        return target.add(rel=(Rel(r.a, e.b),))
    (e,) = rel
    need(e)
    if not isinstance(principal, LabelledFormula) or principal not in target.left \
            or principal.label != e.a or not isinstance(principal.formula, Atom):
        raise SchemaMismatch("Repl needs x=y and an atomic x:p on the left")
    return target.add(left=(principal.with_(label=e.b),))


# ---------------------------------------------------------------- geometric rules


@dataclass(frozen=True)
class RulePremise:
    eigen: tuple[int, ...]
    extra_rel: tuple[RelAtom, ...]
    bottom: bool = False


@dataclass(frozen=True)
class GeometricRule:
    """Rule scheme: from ``P, Q_i[y_i], G |- D`` for each i infer ``P, G |- D``.

    Labels are schematic. Premises flagged ``bottom`` correspond to the
    disjunct falsum and have no instance.
    """

    name: str
    conclusion_rel: tuple[RelAtom, ...]
    premises: tuple[RulePremise, ...]

    def active_premises(self) -> tuple[RulePremise, ...]:
        return tuple(p for p in self.premises if not p.bottom)

    def schematic_labels(self) -> set[int]:
        out = {l for r in self.conclusion_rel for l in r.labels()}
        for p in self.premises:
            out |= {l for r in p.extra_rel for l in r.labels()}
        return out

    def violations(self) -> list[str]:
        out = []
        concl = {l for r in self.conclusion_rel for l in r.labels()}
        for i, p in enumerate(self.premises):
            bad = set(p.eigen) & concl
            if bad:
                out.append(f"premise {i}: eigenvariables {_names(bad)} occur in the conclusion")
            if len(set(p.eigen)) != len(p.eigen):
                out.append(f"premise {i}: repeated eigenvariable")
        return out

    def relabel(self, m: Mapping[int, int]) -> "GeometricRule":
        return GeometricRule(self.name, tuple(r.rename(m) for r in self.conclusion_rel),
                             tuple(RulePremise(tuple(m.get(e, e) for e in p.eigen),
                                               tuple(r.rename(m) for r in p.extra_rel), p.bottom)
                                   for p in self.premises))

    def to_json(self):
        return {
            "name": self.name,
            "conclusion_rel": [str(r) for r in self.conclusion_rel],
            "premises": [{"eigen": [label_name(l) for l in p.eigen],
                          "extra_rel": [str(r) for r in p.extra_rel],
                          "bottom": p.bottom} for p in self.premises],
        }

    @classmethod
    def from_json(cls, d) -> "GeometricRule":
        return cls(d["name"], tuple(parse_rel(s) for s in d["conclusion_rel"]),
                   tuple(RulePremise(tuple(label_index(l) for l in p["eigen"]),
                                     tuple(parse_rel(s) for s in p["extra_rel"]),
                                     p.get("bottom", False)) for p in d["premises"]))

    def __str__(self):
        prem = " | ".join(
            ("⊥" if p.bottom else ", ".join(map(str, self.conclusion_rel + p.extra_rel)) + ", Γ ⊢ Δ")
            + (f" [{_names(p.eigen)} eigen]" if p.eigen else "")
            for p in self.premises) or "(no premises)"
        concl = ", ".join(map(str, self.conclusion_rel))
        return f"{self.name}: {prem}  /  {concl + ', ' if concl else ''}Γ ⊢ Δ"


def _names(ls) -> str:
    return ",".join(label_name(l) for l in sorted(ls))


def instantiate_geometric(rule: GeometricRule, target: Sequent, label_map: Mapping[int, int],
                          used_labels: Iterable[int] = ()) -> list[Sequent]:
    """Premises of ``rule`` at ``target``; ``label_map`` covers universal and eigen labels."""
    taken = target.labels() | set(used_labels)
    for r in rule.conclusion_rel:
        if r.rename(label_map) not in target.rel:
            raise PatternMismatch(f"{r.rename(label_map)} not in {target}")
    out = []
    for p in rule.premises:
        if p.bottom:
            continue
        eig = [label_map.get(e, e) for e in p.eigen]
        if len(set(eig)) != len(eig):
            raise FreshnessViolation("eigenvariables must be distinct")
        clash = [e for e in eig if e in taken]
        if clash:
            raise FreshnessViolation(f"eigenvariables {_names(clash)} are not fresh")
        extra = tuple(r.rename(label_map) for r in p.extra_rel)
        out.append(Sequent(target.rel + extra, target.left, target.right))
    return out


# ---------------------------------------------------------------- proof trees


@dataclass(frozen=True)
class ProofTree:
    conclusion: Sequent
    rule: str
    premises: tuple["ProofTree", ...] = ()
    principal: LabelledFormula | None = None
    side: str | None = None
    label: int | None = None
    rule_name: str | None = None
    label_map: tuple[tuple[int, int], ...] = ()
    rel: tuple[RelAtom, ...] = ()
    section: str = field(default="", compare=False)

    def display(self) -> str:
        return self.rule_name if self.rule == GEOMETRIC and self.rule_name else self.rule

    def nodes(self, path: tuple[int, ...] = ()):
        yield path, self
        for i, p in enumerate(self.premises):
            yield from p.nodes(path + (i,))

    def leaves(self):
        return [t for _, t in self.nodes() if not t.premises]

    def labels(self) -> set[int]:
        out: set[int] = set()
        for _, t in self.nodes():
            out |= t.conclusion.labels()
        return out

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def height(self) -> int:
        return 1 + max((p.height() for p in self.premises), default=0)

    def main_branch(self) -> list[str]:
        """Rule tags from the root upwards, always following the first premise."""
        out, t = [], self
        while True:
            out.append(t.display())
            if not t.premises:
                return out
            t = t.premises[0]

    def relabel(self, m: Mapping[int, int]) -> "ProofTree":
        """Rename labels everywhere, including the schematic side of ``label_map``."""
        g = lambda l: None if l is None else m.get(l, l)  # noqa: E731
        return replace(self, conclusion=self.conclusion.relabel(m),
                       premises=tuple(p.relabel(m) for p in self.premises),
                       principal=_relabel_any(self.principal, m),
                       label=g(self.label), label_map=tuple((g(a), g(b)) for a, b in self.label_map),
                       rel=tuple(r.rename(m) for r in self.rel))

    def map_sequents(self, fn) -> "ProofTree":
        return replace(self, conclusion=fn(self.conclusion),
                       premises=tuple(p.map_sequents(fn) for p in self.premises))


def _relabel_any(x, m):
    if x is None:
        return None
    return x.rename(m) if isinstance(x, RelAtom) else x.relabel(m)


def leaf(seq: Sequent, section: str = "") -> ProofTree:
    tag = closing_axiom(seq)
    if tag is None:
        raise SchemaMismatch(f"{seq} is not an initial sequent")
    return ProofTree(seq, tag, section=section)


def eq_classes(rel: Iterable[RelAtom]) -> dict[int, int]:
    parent: dict[int, int] = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for r in rel:
        if r.kind == "Eq":
            ra, rb = find(r.a), find(r.b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return {k: find(k) for k in list(parent)}


def closing_axiom(seq: Sequent) -> str | None:
    """Which initial sequent closes ``seq``: Id, botL, topR, EqAx or None."""
    rights = set(seq.right)
    for f in seq.left:
        if isinstance(f.formula, Atom) and f in rights:
            return ID
    if any(isinstance(f.formula, Bot) for f in seq.left):
        return BOT_L
    if any(isinstance(f.formula, Top) for f in seq.right):
        return TOP_R
    cls = eq_classes(seq.rel)
    for f in seq.left:
        if isinstance(f.formula, Atom):
            for g in seq.right:
                if g.formula == f.formula and cls.get(f.label, f.label) == cls.get(g.label, g.label):
                    return EQ_AX
    return None


def _axiom_holds(tag: str, seq: Sequent) -> bool:
    rights = set(seq.right)
    if tag == ID:
        return any(isinstance(f.formula, Atom) and f in rights for f in seq.left)
    if tag == BOT_L:
        return any(isinstance(f.formula, Bot) for f in seq.left)
    if tag == TOP_R:
        return any(isinstance(f.formula, Top) for f in seq.right)
    if tag == EQ_AX:
        return closing_axiom(seq) in (ID, EQ_AX)
    return False


@dataclass(frozen=True)
class Violation:
    path: tuple[int, ...]
    reason: str

    def __str__(self):
        return f"node {list(self.path)}: {self.reason}"


@dataclass(frozen=True)
class CheckReport:
    violations: tuple[Violation, ...]
    cut_free: bool
    nodes: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _sets(s: Sequent):
    return set(s.rel), set(s.left), set(s.right)


def check_proof(tree: ProofTree, extra_rules: Sequence[GeometricRule] = ()) -> CheckReport:
    rules = {r.name: r for r in extra_rules}
    out: list[Violation] = []
    cut_free = True
    count = 0
    for path, t in tree.nodes():
        count += 1
        if t.rule == CUT:
            cut_free = False
        try:
            _check_node(t, rules)
        except CalculusError as e:
            out.append(Violation(path, str(e)))
    return CheckReport(tuple(out), cut_free, count)


def _check_node(t: ProofTree, rules: Mapping[str, GeometricRule]):
    C = t.conclusion
    P = t.premises
    if t.rule in AXIOMS:
        if P:
            raise SchemaMismatch(f"initial sequent {t.rule} has premises")
        if not _axiom_holds(t.rule, C):
            raise SchemaMismatch(f"{C} is not an instance of {t.rule}")
        return
    if not P and t.rule != GEOMETRIC:
        raise SchemaMismatch(f"open leaf {C} (rule {t.rule})")
    if t.rule in LOGICAL:
        _check_logical(t)
    elif t.rule in EQUALITY:
        _check_equality(t)
    elif t.rule == CUT:
        _check_cut(t)
    elif t.rule == GEOMETRIC:
        _check_geometric(t, rules)
    else:
        raise SchemaMismatch(f"unknown rule {t.rule}")


def _check_logical(t: ProofTree):
    tag, C = t.rule, t.conclusion
    P = tuple(q.conclusion for q in t.premises)
    side = LOGICAL[tag][0]
    p = t.principal
    if p is None or p not in C.side(side):
        raise SchemaMismatch(f"{tag}: principal {p} missing from conclusion side {side}")
    aux = aux_of(tag, p, t.label)
    n = len(aux.left)
    if len(P) != n:
        raise SchemaMismatch(f"{tag} expects {n} premises, got {len(P)}")
    crel, cl, cr = _sets(C)
    for r in aux.rel_need:
        if r not in crel:
            raise SchemaMismatch(f"{tag} needs {r} in the conclusion")
    if tag in FRESH_RULES and t.label in C.labels():
        raise FreshnessViolation(f"{tag}: label {label_name(t.label)} occurs in the conclusion")
    ctx_l = cl - {p} if side == "L" else cl
    ctx_r = cr - {p} if side == "R" else cr
    # contexts are sets, so a premise may retain its principal (admissible contraction)
    keep = {p}
    if n == 1:
        prel, pl, pr = _sets(P[0])
        if prel != crel | set(aux.rel_add):
            raise SchemaMismatch(f"{tag}: relational atoms do not match")
        want_l = ctx_l | set(aux.left[0])
        want_r = ctx_r | set(aux.right[0])
        extra_l = keep if side == "L" else set()
        extra_r = keep if side == "R" else set()
        if not (want_l <= pl <= want_l | extra_l and want_r <= pr <= want_r | extra_r):
            raise SchemaMismatch(f"{tag}: premise {P[0]} does not match conclusion {C}")
        return
    union_rel, union_l, union_r = set(), set(), set()
    for i, q in enumerate(P):
        qrel, ql, qr = _sets(q)
        if not set(aux.left[i]) <= ql or not set(aux.right[i]) <= qr:
            raise SchemaMismatch(f"{tag}: premise {i} lacks its auxiliary formula")
        rest_l, rest_r = ql - set(aux.left[i]), qr - set(aux.right[i])
        if not (qrel <= crel and rest_l <= ctx_l | keep and rest_r <= ctx_r | keep):
            raise SchemaMismatch(f"{tag}: premise {i} context not contained in the conclusion")
        union_rel |= qrel
        union_l |= ql
        union_r |= qr
    if not (crel <= union_rel and ctx_l <= union_l and ctx_r <= union_r):
        raise SchemaMismatch(f"{tag}: conclusion context not covered by the premises")


def _check_equality(t: ProofTree):
    if len(t.premises) != 1:
        raise SchemaMismatch(f"{t.rule} is unary")
    principal = t.label if t.rule == EQ_REF else t.principal
    want = _equality_premise(t.rule, t.conclusion, principal, t.rel)
    if _sets(want) != _sets(t.premises[0].conclusion):
        raise SchemaMismatch(f"{t.rule}: premise does not match")


def _check_cut(t: ProofTree):
    if len(t.premises) != 2 or t.principal is None:
        raise SchemaMismatch("Cut needs two premises and a cut formula")
    a, b = t.premises[0].conclusion, t.premises[1].conclusion
    c = t.principal
    if c not in a.right or c not in b.left:
        raise SchemaMismatch("cut formula must be on the right of the first premise and "
                             "the left of the second")
    crel, cl, cr = _sets(t.conclusion)
    if not ((set(a.rel) | set(b.rel)) == crel and (set(a.left) | (set(b.left) - {c})) == cl
            and ((set(a.right) - {c}) | set(b.right)) == cr):
        raise SchemaMismatch("Cut: contexts do not match")


def _check_geometric(t: ProofTree, rules: Mapping[str, GeometricRule]):
    rule = rules.get(t.rule_name or "")
    if rule is None:
        raise SchemaMismatch(f"unknown geometric rule {t.rule_name!r}")
    m = dict(t.label_map)
    C = t.conclusion
    for r in rule.conclusion_rel:
        if r.rename(m) not in set(C.rel):
            raise PatternMismatch(f"{rule.name}: {r.rename(m)} missing from the conclusion")
    active = rule.active_premises()
    if len(active) != len(t.premises):
        raise SchemaMismatch(f"{rule.name} expects {len(active)} premises, got {len(t.premises)}")
    clabels = C.labels()
    for i, (rp, q) in enumerate(zip(active, t.premises)):
        eig = [m.get(e, e) for e in rp.eigen]
        if set(eig) & clabels or len(set(eig)) != len(eig):
            raise FreshnessViolation(f"{rule.name}: eigenvariables of premise {i} not fresh")
        qrel, ql, qr = _sets(q.conclusion)
        want_rel = set(C.rel) | {r.rename(m) for r in rp.extra_rel}
        if qrel != want_rel or ql != set(C.left) or qr != set(C.right):
            raise SchemaMismatch(f"{rule.name}: premise {i} is not the conclusion plus "
                                 f"{', '.join(str(r.rename(m)) for r in rp.extra_rel)}")


# ---------------------------------------------------------------- text forms


def parse_lf(text: str) -> LabelledFormula:
    lab, _, f = text.partition(":")
    return LabelledFormula(label_index(lab.strip()), parse(f))


def parse_rel(text: str) -> RelAtom:
    text = text.strip()
    if "=" in text:
        a, b = text.split("=")
        return EqA(label_index(a.strip()), label_index(b.strip()))
    for i in range(1, len(text)):
        if text[i] == "R":
            try:
                return Rel(label_index(text[:i]), label_index(text[i + 1:]))
            except ValueError:
                continue
    raise ValueError(f"cannot parse relational atom {text!r}")


def parse_sequent(text: str) -> Sequent:
    """``xRy, x=z, x:p |- y:q``; items with a colon are labelled formulas."""
    sep = "⊢" if "⊢" in text else "|-"
    ante, _, succ = text.partition(sep)
    items = lambda t: [i.strip() for i in t.split(",") if i.strip()]  # noqa: E731
    rel = tuple(parse_rel(i) for i in items(ante) if ":" not in i)
    left = tuple(parse_lf(i) for i in items(ante) if ":" in i)
    return Sequent(rel, left, tuple(parse_lf(i) for i in items(succ)))


def sequent_json(s: Sequent) -> dict:
    return {"rel": [str(r) for r in s.rel], "left": [str(f) for f in s.left],
            "right": [str(f) for f in s.right]}


def sequent_from_json(d) -> Sequent:
    return Sequent(tuple(parse_rel(r) for r in d["rel"]),
                   tuple(parse_lf(f) for f in d["left"]),
                   tuple(parse_lf(f) for f in d["right"]))


def tree_json(t: ProofTree) -> dict:
    d = {"rule": t.rule, "conclusion": sequent_json(t.conclusion),
         "premises": [tree_json(p) for p in t.premises]}
    if t.rule_name:
        d["name"] = t.rule_name
    if t.principal is not None:
        d["principal"] = str(t.principal)
        d["side"] = t.side
    if t.label is not None:
        d["label"] = label_name(t.label)
    if t.label_map:
        d["label_map"] = {label_name(a): label_name(b) for a, b in t.label_map}
    if t.rel:
        d["rel"] = [str(r) for r in t.rel]
    if t.section:
        d["section"] = t.section
    return d


def tree_from_json(d) -> ProofTree:
    return ProofTree(
        sequent_from_json(d["conclusion"]), d["rule"],
        tuple(tree_from_json(p) for p in d["premises"]),
        parse_lf(d["principal"]) if "principal" in d else None,
        d.get("side"),
        label_index(d["label"]) if "label" in d else None,
        d.get("name"),
        tuple((label_index(a), label_index(b)) for a, b in d.get("label_map", {}).items()),
        tuple(parse_rel(r) for r in d.get("rel", [])),
        d.get("section", ""),
    )
