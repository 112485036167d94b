"""The MASSA pipeline: from a modal formula to a geometric rule and a cut-free derivation.

Blue occurrences of the input formula are addressed by their path in the
syntax tree. The identity derivation fixes, once and for all, the label at
which every blue subformula lives; the forward and backward chains reuse
those labels, so the two halves meet without any renaming.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from . import calculus as C
from .calculus import (
    LF, EqA, GeometricRule, ProofTree, Rel, RelAtom, RulePremise, Sequent,
    aux_of, check_proof, closing_axiom, label_name, leaf, rule_for,
)
from .classify import AnalyticInductive, ClassificationResult, classify
from .formula import (
    And, Atom, Bot, Box, Dia, Formula, FormulaLike, Imp, Neg, Or, Top,
    as_formula, canonical_atoms, parse, subformula, to_ascii,
)

Path = tuple[int, ...]
RED, BLUE = "red", "blue"
MAX_PREMISES = 256


class MassaError(Exception):
    stage = "massa"

    def __init__(self, reason: str, witness: Sequence[Sequent] = ()):
        super().__init__(reason)
        self.reason = reason
        self.witness = tuple(witness)


class NoRedAtoms(MassaError):
    stage = "cuts"


class StuckForward(MassaError):
    stage = "forward"


class MergeFailure(MassaError):
    stage = "merge"


class EigenvariableCapture(MassaError):
    stage = "rule"


class AssemblyError(MassaError):
    stage = "assemble"


# ---------------------------------------------------------------- step (i)


@dataclass
class ColouredDerivation:
    formula: Formula
    tree: ProofTree
    goal: Sequent
    blue_label: dict[Path, int]
    blue_side: dict[Path, str]
    labels: int


class _Counter:
    def __init__(self):
        self.label = 1
        self.occ = 0

    def fresh(self) -> int:
        self.label += 1
        return self.label - 1

    def tag(self, f: LF) -> LF:
        self.occ += 1
        return f.with_(occ=self.occ)


def _premises(seq: Sequent, tag: str, p: LF, aux: C.Aux) -> list[Sequent]:
    side = C.LOGICAL[tag][0]
    keep = tag in C.KEEP_RULES
    left = seq.left if (side != "L" or keep) else _drop(seq.left, p)
    right = seq.right if (side != "R" or keep) else _drop(seq.right, p)
    return [Sequent(seq.rel + aux.rel_add, left + aux.left[i], right + aux.right[i])
            for i in range(len(aux.left))]


def _drop(fs: tuple[LF, ...], p: LF) -> tuple[LF, ...]:
    """Remove the occurrence ``p`` itself, not merely an equal formula."""
    for i, f in enumerate(fs):
        if f is p or (f == p and f.occ == p.occ and f.origin == p.origin):
            return fs[:i] + fs[i + 1:]
    return C.remove_one(fs, p)


def build_identity_derivation(phi: FormulaLike) -> ColouredDerivation:
    """Derivation of ``x:phi (red) |- x:phi (blue)`` by invertible identity expansion.

    For box, implication, disjunction and negation the right rule is applied
    first; for diamond and conjunction the left rule. Fresh labels are global.
    """
    phi = as_formula(phi)
    ctr = _Counter()
    blue_label: dict[Path, int] = {(): 0}
    blue_side: dict[Path, str] = {(): "R"}
    red = ctr.tag(LF(0, phi, RED, ()))
    blue = ctr.tag(LF(0, phi, BLUE, ()))
    goal = Sequent((), (red,), (blue,))

    def step(seq: Sequent, tag: str, p: LF, label: int | None = None):
        aux = aux_of(tag, p, label)
        aux = C.Aux(tuple(tuple(ctr.tag(a) for a in grp) for grp in aux.left),
                    tuple(tuple(ctr.tag(a) for a in grp) for grp in aux.right),
                    aux.rel_add, aux.rel_need)
        for grp, side in ((aux.left, "L"), (aux.right, "R")):
            for g in grp:
                for a in g:
                    if a.colour == BLUE:
                        blue_label[a.origin] = a.label
                        blue_side[a.origin] = side
        return _premises(seq, tag, p, aux), aux

    def ident(seq: Sequent, L: LF, Rt: LF) -> ProofTree:
        f = L.formula
        if isinstance(f, (Atom, Bot, Top)):
            return leaf(seq, "identity")
        if isinstance(f, (Box, Dia)):
            y = ctr.fresh()
            first, second = ((C.BOX_R, Rt, "R"), (C.BOX_L, L, "L")) if isinstance(f, Box) \
                else ((C.DIA_L, L, "L"), (C.DIA_R, Rt, "R"))
            (p1,), a1 = step(seq, first[0], first[1], y)
            (p2,), a2 = step(p1, second[0], second[1], y)
            new = {first[2]: _only(a1, first[2]), second[2]: _only(a2, second[2])}
            top = ident(p2, new["L"], new["R"])
            return ProofTree(seq, first[0], (ProofTree(p1, second[0], (top,), second[1], second[2], y),),
                             first[1], first[2], y)
        if isinstance(f, Neg):
            (p1,), a1 = step(seq, C.NEG_R, Rt)
            (p2,), a2 = step(p1, C.NEG_L, L)
            top = ident(p2, a1.left[0][0], a2.right[0][0])
            return ProofTree(seq, C.NEG_R, (ProofTree(p1, C.NEG_L, (top,), L, "L"),), Rt, "R")
        if isinstance(f, (Or, Imp)):
            tag_r = C.OR_R if isinstance(f, Or) else C.IMP_R
            tag_l = C.OR_L if isinstance(f, Or) else C.IMP_L
            (p1,), a1 = step(seq, tag_r, Rt)
            prems, a2 = step(p1, tag_l, L)
            if isinstance(f, Or):
                pairs = [(a2.left[0][0], a1.right[0][0]), (a2.left[1][0], a1.right[0][1])]
            else:
                pairs = [(a1.left[0][0], a2.right[0][0]), (a2.left[1][0], a1.right[0][0])]
            tops = tuple(ident(q, l, r) for q, (l, r) in zip(prems, pairs))
            return ProofTree(seq, tag_r, (ProofTree(p1, tag_l, tops, L, "L"),), Rt, "R")
        if isinstance(f, And):
            (p1,), a1 = step(seq, C.AND_L, L)
            prems, a2 = step(p1, C.AND_R, Rt)
            pairs = [(a1.left[0][0], a2.right[0][0]), (a1.left[0][1], a2.right[1][0])]
            tops = tuple(ident(q, l, r) for q, (l, r) in zip(prems, pairs))
            return ProofTree(seq, C.AND_L, (ProofTree(p1, C.AND_R, tops, Rt, "R"),), L, "L")
        raise TypeError(f"unexpected node {f!r}")

    tree = ident(goal, red, blue)
    return ColouredDerivation(phi, tree, goal, blue_label, blue_side, ctr.label)


def _only(aux: C.Aux, side: str) -> LF:
    grp = aux.left[0] if side == "L" else aux.right[0]
    return grp[0]


# ---------------------------------------------------------------- pruning


def _aux_occs(t: ProofTree, premise: Sequent, conclusion: Sequent) -> set[int]:
    have = {f.occ for f in conclusion.left + conclusion.right}
    return {f.occ for f in premise.left + premise.right if f.occ not in have}


def prune_to_multiplicative(d: ColouredDerivation | ProofTree) -> ProofTree:
    """Keep, at every node, only formulas whose lineage reaches a principal or axiom formula above.

    Relational atoms are all kept. Binary tonicity rules end up in
    multiplicative form.
    """
    tree = d.tree if isinstance(d, ColouredDerivation) else d

    def go(t: ProofTree) -> tuple[ProofTree, set[int]]:
        s = t.conclusion
        if not t.premises:
            used = _axiom_occs(s, t.rule)
        else:
            subs = [go(p) for p in t.premises]
            used = set()
            for p, (_, u) in zip(t.premises, subs):
                used |= u - _aux_occs(t, p.conclusion, s)
            used.add(t.principal.occ)
            prem = tuple(x for x, _ in subs)
        new = Sequent(s.rel, tuple(f for f in s.left if f.occ in used),
                      tuple(f for f in s.right if f.occ in used))
        if not t.premises:
            return replace(t, conclusion=new), used
        return replace(t, conclusion=new, premises=prem,
                       principal=t.principal), used

    return go(tree)[0]


def _axiom_occs(s: Sequent, tag: str) -> set[int]:
    """The red and blue copies of the same subformula closing an identity leaf."""
    for f in s.left:
        for g in s.right:
            if (f == g and f.origin == g.origin and f.colour != g.colour
                    and isinstance(f.formula, (Atom, Bot, Top))):
                return {f.occ, g.occ}
    raise AssemblyError(f"leaf {s} has no red/blue identity pair")


# ---------------------------------------------------------------- step (ii): cuts


@dataclass(frozen=True)
class LeafInfo:
    sequent: Sequent
    var: str | None
    red: LF | None
    blue: LF
    red_side: str | None

    @property
    def is_s(self) -> bool:
        return self.red_side == "R"


@dataclass(frozen=True)
class CutAxiom:
    sequent: Sequent
    kind: str  # "eq", "bot" (uniform positive) or "top" (uniform negative)
    s_leaf: LeafInfo | None = None
    p_leaf: LeafInfo | None = None

    @property
    def marked(self) -> bool:
        return self.kind != "eq"


def leaf_infos(pruned: ProofTree) -> list[LeafInfo]:
    out = []
    for t in pruned.leaves():
        s = t.conclusion
        blue = next(f for f in s.left + s.right if f.colour == BLUE)
        reds = [(f, side) for side, fs in (("L", s.left), ("R", s.right)) for f in fs
                if f.colour == RED]
        red, side = reds[0] if reds else (None, None)
        var = blue.formula.name if isinstance(blue.formula, Atom) else None
        out.append(LeafInfo(s, var, red, blue, side if var else None))
    return out


def _cut_sequent(s: LeafInfo, p: LeafInfo) -> Sequent:
    rel = C._dedupe(s.sequent.rel + p.sequent.rel) + (EqA(s.blue.label, p.blue.label),)
    return Sequent(rel, (s.blue,), (p.blue,))


def top_cut(s: LeafInfo) -> CutAxiom:
    mark = LF(s.blue.label, Top(), "none", None, -1, True)
    return CutAxiom(Sequent(s.sequent.rel, (s.blue,), (mark,)), "top", s, None)


def bot_cut(p: LeafInfo) -> CutAxiom:
    mark = LF(p.blue.label, Bot(), "none", None, -1, True)
    return CutAxiom(Sequent(p.sequent.rel, (mark,), (p.blue,)), "bot", None, p)


def atomic_cuts(pruned: ProofTree, hint=None) -> list[CutAxiom]:
    """Every cut on red atoms between the leaves of the pruned derivation."""
    infos = [i for i in leaf_infos(pruned) if i.var]
    if not infos:
        raise NoRedAtoms("no red atoms among the leaves")
    out: list[CutAxiom] = []
    seen = set()
    for var in dict.fromkeys(i.var for i in infos):
        ss = [i for i in infos if i.var == var and i.is_s]
        ps = [i for i in infos if i.var == var and not i.is_s]
        if ss and ps:
            cuts = [CutAxiom(_cut_sequent(s, p), "eq", s, p) for s in ss for p in ps]
        elif ss:
            cuts = [top_cut(s) for s in ss]
        else:
            cuts = [bot_cut(p) for p in ps]
        for c in cuts:
            if c.sequent.key() not in seen:
                seen.add(c.sequent.key())
                out.append(c)
    return out


# ---------------------------------------------------------------- step (iii): backward


@dataclass(frozen=True)
class BackwardSection:
    steps: tuple[tuple[Sequent, str, LF, str, int | None], ...]
    top: Sequent

    def tags(self) -> list[str]:
        return [s[1] for s in self.steps]


def _is_translation(side: str, f: Formula) -> bool:
    if isinstance(f, Neg):
        return True
    if isinstance(f, (Atom, Bot, Top)):
        return False
    return rule_for(side, f) in C.TRANSLATION


def skeleton_backward_chain(phi: FormulaLike, d: ColouredDerivation) -> BackwardSection:
    """Apply translation rules (and negation) to ``|- x:phi`` until only PIA roots remain.

    Succedent formulas are processed before antecedent ones, each side in
    first-in first-out order; box-right and dia-left reuse the labels of the
    identity derivation.
    """
    phi = as_formula(phi)
    seq = Sequent((), (), (LF(0, phi, BLUE, ()),))
    steps = []
    while True:
        cand = [("R", f) for f in seq.right if _is_translation("R", f.formula)]
        cand += [("L", f) for f in seq.left if _is_translation("L", f.formula)]
        if not cand:
            return BackwardSection(tuple(steps), seq)
        side, p = cand[0]
        tag = C.NEG_L if isinstance(p.formula, Neg) and side == "L" else \
            C.NEG_R if isinstance(p.formula, Neg) else rule_for(side, p.formula)
        label = d.blue_label[p.origin + (0,)] if tag in C.FRESH_RULES else None
        aux = aux_of(tag, p, label)
        (nxt,) = _premises(seq, tag, p, aux)
        steps.append((seq, tag, p, side, label))
        seq = nxt


# ---------------------------------------------------------------- regions and forward chaining


@dataclass(frozen=True)
class Region:
    root: Path
    side: str
    left_atoms: tuple[Path, ...]
    right_atoms: tuple[Path, ...]
    stuck: tuple[Path, str] | None = None

    def contains(self, p: Path) -> bool:
        return p[:len(self.root)] == self.root


def analyse_region(phi: Formula, root: Path, d: ColouredDerivation) -> Region:
    lefts, rights = [], []
    stuck: list[tuple[Path, str]] = []

    def visit(path: Path):
        f = subformula(phi, path)
        side = d.blue_side[path]
        if isinstance(f, Atom):
            (lefts if side == "L" else rights).append(path)
            return
        if isinstance(f, (Bot, Top)):
            return
        if not isinstance(f, Neg) and rule_for(side, f) not in C.TONICITY:
            stuck.append((path, f"{label_name(d.blue_label[path])}:{to_ascii(f)}: the translation rule "
                                f"{rule_for(side, f)} falls inside a PIA part"))
            return
        for i in range(len(f.children())):
            visit(path + (i,))

    visit(root)
    return Region(root, d.blue_side[root], tuple(lefts), tuple(rights), stuck[0] if stuck else None)


@dataclass(frozen=True)
class ForwardSection:
    tree: ProofTree
    cuts: tuple[CutAxiom, ...]
    root: Path
    pending: tuple = ()

    @property
    def end(self) -> Sequent:
        return self.tree.conclusion

    @property
    def bottom(self) -> bool:
        s = self.end
        return any(f.marker for f in s.left + s.right)


def _cap(items: list):
    if len(items) > MAX_PREMISES:
        raise StuckForward(f"more than {MAX_PREMISES} forward-chaining alternatives")


Labels = dict[int, int]


class _Forward:
    """Forward-chaining plans over the PIA parts of the backward top.

    A critical PIA part may be rebuilt several times inside one section, once
    per cut on its critical occurrence. Each copy carries a label map sending
    the identity-derivation labels of its inner nodes to fresh ones, so the
    copies get independent witnesses.
    """

    def __init__(self, phi: Formula, d: ColouredDerivation, pruned: ProofTree,
                 regions: Sequence[Region], top: Sequent):
        self.phi = phi
        self.d = d
        self.regions = list(regions)
        infos = leaf_infos(pruned)
        self.by_blue = {i.blue.origin: i for i in infos}
        self.s_leaves: dict[str, list[LeafInfo]] = {}
        for i in infos:
            if i.var and i.is_s:
                self.s_leaves.setdefault(i.var, []).append(i)
        self.p_vars = {i.var for i in infos if i.var and not i.is_s}
        self.global_labels = top.labels() | {0}
        self.next_label = d.labels

    def region_of(self, p: Path) -> Region | None:
        best = None
        for r in self.regions:
            if r.contains(p) and (best is None or len(r.root) > len(best.root)):
                best = r
        return best

    def lab(self, path: Path, m: Labels) -> int:
        l = self.d.blue_label[path]
        return m.get(l, l)

    # nodes ---------------------------------------------------------------

    def _find(self, s: Sequent, side: str, origin: Path, m: Labels) -> LF:
        lab = self.lab(origin, m)
        for f in s.side(side):
            if f.origin == origin and f.label == lab and not f.marker:
                return f
        want = LF(lab, subformula(self.phi, origin))
        for f in s.side(side):
            if f == want and not f.marker:
                return f
        raise StuckForward(f"occurrence {want} missing", [s])

    def _principal(self, a: Path, m: Labels) -> LF:
        return LF(self.lab(a, m), subformula(self.phi, a), BLUE, a)

    def unary(self, t: ProofTree, a: Path, m: Labels) -> ProofTree:
        f = subformula(self.phi, a)
        side = self.d.blue_side[a]
        c = a + (0,)
        cside = self.d.blue_side[c]
        E = t.conclusion
        child = self._find(E, cside, c, m)
        p = self._principal(a, m)
        tag = (C.NEG_L if side == "L" else C.NEG_R) if isinstance(f, Neg) else rule_for(side, f)
        label = None
        if tag in (C.BOX_L, C.DIA_R):
            label = child.label
            if Rel(p.label, label) not in E.rel:
                raise StuckForward(f"{tag} for {p} needs {Rel(p.label, label)}", [E])
        left = _drop(E.left, child) if cside == "L" else E.left
        right = _drop(E.right, child) if cside == "R" else E.right
        if side == "L":
            left = left + (p,)
        else:
            right = right + (p,)
        return ProofTree(Sequent(E.rel, left, right), tag, (t,), p, side, label, section="forward")

    def binary(self, t0: ProofTree, t1: ProofTree, a: Path, m: Labels) -> ProofTree:
        f = subformula(self.phi, a)
        side = self.d.blue_side[a]
        tag = rule_for(side, f)
        p = self._principal(a, m)
        parts_l, parts_r, rel = [], [], []
        for i, t in enumerate((t0, t1)):
            c = a + (i,)
            cside = self.d.blue_side[c]
            E = t.conclusion
            child = self._find(E, cside, c, m)
            rel.extend(E.rel)
            parts_l.extend(_drop(E.left, child) if cside == "L" else E.left)
            parts_r.extend(_drop(E.right, child) if cside == "R" else E.right)
        (parts_l if side == "L" else parts_r).append(p)
        concl = Sequent(C._dedupe(rel), tuple(parts_l), tuple(parts_r))
        return ProofTree(concl, tag, (t0, t1), p, side, section="forward")

    def combine(self, x: "ForwardSection", y: "ForwardSection", a: Path, i: int,
                m: Labels) -> "ForwardSection":
        """Binary step at ``a``; ``x`` derives child ``i`` and ``y`` the other child.

        Labels that ``y`` shares with ``x`` beyond the path to ``a`` and the
        backward top belong to a second copy of some PIA part; they are renamed.
        """
        protected = set(self.global_labels)
        protected |= {self.lab(a[:k], m) for k in range(len(a) + 1)}
        clash = (x.tree.labels() & y.tree.labels()) - protected
        if clash:
            y = self.rename(y, clash)
        t0, t1 = (x.tree, y.tree) if i == 0 else (y.tree, x.tree)
        return ForwardSection(self.binary(t0, t1, a, m), x.cuts + y.cuts, a, x.pending + y.pending)

    def rename(self, sec: "ForwardSection", labels: set[int]) -> "ForwardSection":
        ren = {}
        for l in sorted(labels):
            ren[l] = self.next_label
            self.next_label += 1
        pending = []
        for s, reg, stack, pm in sec.pending:
            pm2 = {k: ren.get(pm.get(k, k), pm.get(k, k)) for k in set(pm) | set(ren)}
            pending.append((s, reg, stack, pm2))
        return ForwardSection(sec.tree.relabel(ren), tuple(_relabel_cut(c, ren) for c in sec.cuts),
                              sec.root, tuple(pending))

    # plans ---------------------------------------------------------------

    def atom_sections(self, o: Path, stack: tuple[Path, ...], m: Labels) -> list[ForwardSection]:
        """Cut axioms supplying the positive occurrence ``o``.

        The PIA part around the matching critical occurrence is left pending;
        it is rebuilt once the part containing ``o`` is complete.
        """
        info = _relabel_leaf(self.by_blue[o], m)
        ss = self.s_leaves.get(info.var, [])
        if not ss:
            cut = bot_cut(info)
            return [ForwardSection(leaf(cut.sequent, "forward"), (cut,), o)]
        out = []
        for s in ss:
            reg = self.region_of(s.blue.origin)
            if reg is None:
                continue
            if reg.root in stack:
                continue
            cut = CutAxiom(_cut_sequent(s, info), "eq", s, info)
            out.append(ForwardSection(leaf(cut.sequent, "forward"), (cut,), o,
                                      ((s.blue.origin, reg, stack + (reg.root,), {}),)))
        return out

    def build(self, path: Path, stack: tuple[Path, ...], m: Labels) -> list[ForwardSection]:
        """Sections deriving the blue subformula at ``path``, which has no critical atom."""
        f = subformula(self.phi, path)
        side = self.d.blue_side[path]
        if isinstance(f, Atom):
            if side == "L":
                raise StuckForward(f"second critical occurrence at {list(path)}")
            return self.atom_sections(path, stack, m)
        if isinstance(f, (Top, Bot)):
            if (side == "R") == isinstance(f, Top):
                info = _relabel_leaf(self.by_blue[path], m)
                s = Sequent(info.sequent.rel,
                            (info.blue,) if side == "L" else (), (info.blue,) if side == "R" else ())
                return [ForwardSection(leaf(s, "forward"), (), path)]
            return []
        if len(f.children()) == 1:
            return [ForwardSection(self.unary(x.tree, path, m), x.cuts, path, x.pending)
                    for x in self.build(path + (0,), stack, m)]
        out = []
        for x, y in itertools.product(self.build(path + (0,), stack, m),
                                      self.build(path + (1,), stack, m)):
            out.append(self.combine(x, y, path, 0, m))
            _cap(out)
        return out

    def chain(self, sec: ForwardSection, s: Path, reg: Region, stack: tuple[Path, ...],
              m: Labels) -> list[ForwardSection]:
        """Rebuild the region containing critical occurrence ``s`` on top of ``sec``."""
        alts = [sec]
        for k in range(len(s) - 1, len(reg.root) - 1, -1):
            a = s[:k]
            f = subformula(self.phi, a)
            if len(f.children()) == 1:
                alts = [ForwardSection(self.unary(x.tree, a, m), x.cuts, a, x.pending) for x in alts]
                continue
            i = s[k]
            others = self.build(a + (1 - i,), stack, m)
            new = []
            for x, y in itertools.product(alts, others):
                new.append(self.combine(x, y, a, i, m))
                _cap(new)
            alts = new
        return alts

    def resolve(self, sec: ForwardSection) -> list[ForwardSection]:
        if not sec.pending:
            return [sec]
        (s, reg, stack, m), rest = sec.pending[0], sec.pending[1:]
        out = []
        for x in self.chain(replace(sec, pending=rest), s, reg, stack, m):
            out.extend(self.resolve(x))
            _cap(out)
        return out

    def run(self) -> list[ForwardSection]:
        out: list[ForwardSection] = []
        for reg in self.regions:
            if reg.stuck:
                cuts = [self._witness(p) for p in reg.left_atoms + reg.right_atoms]
                raise StuckForward(f"cannot build {reg.stuck[1]}", [c for c in cuts if c])
            if len(reg.left_atoms) > 1:
                raise StuckForward(f"PIA part at {list(reg.root)} has "
                                   f"{len(reg.left_atoms)} critical occurrences")
            if not reg.left_atoms:
                for x in self.build(reg.root, (reg.root,), {}):
                    out.extend(self.resolve(x))
                    _cap(out)
                continue
            s = reg.left_atoms[0]
            info = self.by_blue[s]
            if info.var not in self.p_vars:
                cut = top_cut(info)
                start = ForwardSection(leaf(cut.sequent, "forward"), (cut,), s,
                                       ((s, reg, (reg.root,), {}),))
                out.extend(self.resolve(start))
                _cap(out)
        return out

    def _witness(self, p: Path) -> Sequent | None:
        info = self.by_blue.get(p)
        if info is None or not info.var:
            return None
        if info.is_s:
            partner = [i for i in self.by_blue.values() if i.var == info.var and not i.is_s]
            return _cut_sequent(info, partner[0]) if partner else top_cut(info).sequent
        partner = self.s_leaves.get(info.var, [])
        return _cut_sequent(partner[0], info) if partner else bot_cut(info).sequent


def pia_forward_chain(phi: FormulaLike, d: ColouredDerivation, pruned: ProofTree,
                      backward: BackwardSection) -> list[ForwardSection]:
    """Forward-chaining sections rebuilding the PIA roots of the backward top from cut axioms.

    Every PIA root without a critical occurrence is a starting point; each
    positive atom inside it is supplied by a cut against some critical
    occurrence, whose PIA part is then rebuilt around it, recursively.
    """
    phi = as_formula(phi)
    roots = [f.origin for f in backward.top.left + backward.top.right]
    regions = [analyse_region(phi, r, d) for r in dict.fromkeys(roots)]
    secs = _Forward(phi, d, pruned, regions, backward.top).run()
    uniq, seen = [], set()
    for s in secs:
        k = s.end.key()
        if k not in seen:
            seen.add(k)
            uniq.append(s)
    return uniq


# ---------------------------------------------------------------- step (iv)


@dataclass(frozen=True)
class MergingPoint:
    premises: tuple[Sequent, ...]
    conclusion: Sequent

    @property
    def R(self) -> tuple[RelAtom, ...]:
        return self.conclusion.rel

    def R_i(self, i: int) -> tuple[RelAtom, ...]:
        return self.premises[i].rel

    def holds(self, exempt: Iterable[LF] = ()) -> bool:
        return not _merge_diff(self.premises, self.conclusion, exempt)


def _unmarked(fs) -> set:
    return {f for f in fs if not f.marker}


def _merge_diff(prem: Sequence[Sequent], concl: Sequent, exempt: Iterable[LF] = ()) -> list[str]:
    ex = set(exempt)
    diff = []
    for side in ("L", "R"):
        want = set(concl.side(side)) - ex
        have = set().union(*(_unmarked(p.side(side)) for p in prem)) if prem else set()
        have -= ex
        for f in sorted(want - have, key=str):
            diff.append(f"{f} ({'antecedent' if side == 'L' else 'succedent'}) not produced "
                        f"by any forward section")
        for f in sorted(have - want, key=str):
            diff.append(f"{f} ({'antecedent' if side == 'L' else 'succedent'}) produced but "
                        f"absent from the backward top")
    return diff


def find_merging_point(forward: Sequence[ForwardSection], backward_top: Sequent,
                       exempt: Iterable[LF] = ()) -> MergingPoint:
    prem = tuple(f.end for f in forward)
    diff = _merge_diff(prem, backward_top, exempt)
    if diff:
        raise MergeFailure("no merging point: " + "; ".join(diff), prem + (backward_top,))
    return MergingPoint(prem, backward_top)


def emit_rule(m: MergingPoint, name: str = "r", root: int = 0) -> GeometricRule:
    R = C._dedupe(m.conclusion.rel)
    Rset = set(R)
    known = {l for r in R for l in r.labels()} | {f.label for f in m.conclusion.left + m.conclusion.right}
    known.add(root)
    prems = []
    for s in m.premises:
        extra = tuple(r for r in C._dedupe(s.rel) if r not in Rset)
        eigen = tuple(sorted({l for r in extra for l in r.labels()} - known))
        bottom = any(f.marker for f in s.left + s.right)
        prems.append(RulePremise(eigen, extra, bottom))
    rule = GeometricRule(name, R, tuple(prems))
    bad = rule.violations()
    if bad:
        raise EigenvariableCapture("; ".join(bad))
    return rule


def _weaken(t: ProofTree, target: Sequent) -> ProofTree:
    end = t.conclusion
    add_rel = tuple(r for r in C._dedupe(target.rel) if r not in set(end.rel))
    add_l = tuple(f for f in target.left if f not in set(end.left))
    add_r = tuple(f for f in target.right if f not in set(end.right))

    def fn(s: Sequent) -> Sequent:
        return Sequent(s.rel + tuple(r for r in add_rel if r not in set(s.rel)),
                       s.left + tuple(f for f in add_l if f not in set(s.left)),
                       s.right + tuple(f for f in add_r if f not in set(s.right)))

    out = t.map_sequents(fn)
    return replace(out, conclusion=target)


def assemble_derivation(backward: BackwardSection, rule: GeometricRule | None,
                        forward: Sequence[ForwardSection]) -> ProofTree:
    """Backward section, then the rule instance, then the weakened forward sections."""
    S = backward.top
    if rule is None:
        top = leaf(S, "backward")
    else:
        prems = []
        active = [(p, f) for p, f in zip(rule.premises, forward) if not p.bottom]
        for p, f in active:
            target = Sequent(S.rel + p.extra_rel, S.left, S.right)
            prems.append(_weaken(f.tree, target))
        labels = sorted(rule.schematic_labels())
        top = ProofTree(S, C.GEOMETRIC, tuple(prems), rule_name=rule.name,
                        label_map=tuple((l, l) for l in labels), section="rule")
    for seq, tag, p, side, label in reversed(backward.steps):
        top = ProofTree(seq, tag, (top,), p, side, label, section="backward")
    return top


# ---------------------------------------------------------------- orchestration

CATALOG = {
    "box p -> p": "Ref",
    "box p -> dia p": "Ser",
    "box p -> box box p": "Trans",
    "p -> box dia p": "Sym",
    "dia p -> box dia p": "Eucl",
    "dia box p -> box dia p": "Dir",
    "dia p -> box p": "Fun",
    "box (box p -> q) | box (box q -> p)": "Conn",
    "box (p -> q) -> box p -> box q": "K",
}
_CATALOG = {canonical_atoms(parse(k)): v for k, v in CATALOG.items()}


def rule_name_for(phi: Formula, default: str = "r") -> str:
    return _CATALOG.get(canonical_atoms(phi), default)


@dataclass
class Trace:
    identity: ColouredDerivation | None = None
    pruned: ProofTree | None = None
    cuts: list[CutAxiom] = field(default_factory=list)
    backward: BackwardSection | None = None
    forward: list[ForwardSection] = field(default_factory=list)
    merging: MergingPoint | None = None


@dataclass
class ConjunctRun:
    formula: Formula
    rule: GeometricRule | None
    derivation: ProofTree
    raw_axiom: "object"
    axiom: "object"
    trace: Trace

    @property
    def premises(self) -> tuple[Sequent, ...]:
        return self.trace.merging.premises if self.trace.merging else ()


@dataclass
class MassaOutput:
    formula: Formula
    classification: ClassificationResult
    parts: list[ConjunctRun]

    ok = True

    @property
    def rule(self) -> GeometricRule | None:
        return self.parts[0].rule if len(self.parts) == 1 else None

    @property
    def rules(self) -> list[GeometricRule]:
        return [p.rule for p in self.parts if p.rule is not None]

    @property
    def derivation(self) -> ProofTree:
        return self.parts[0].derivation

    @property
    def axiom(self):
        return self.parts[0].axiom

    @property
    def raw_axiom(self):
        return self.parts[0].raw_axiom

    @property
    def axioms(self) -> list:
        return [p.axiom for p in self.parts]

    def to_json(self) -> dict:
        from .fo import axiom_ascii

        def part(p: ConjunctRun) -> dict:
            return {"formula": to_ascii(p.formula),
                    "rule": p.rule.to_json() if p.rule else None,
                    "raw_axiom": axiom_ascii(p.raw_axiom), "axiom": axiom_ascii(p.axiom),
                    "derivation": C.tree_json(p.derivation)}

        out = {"status": "ok", "formula": to_ascii(self.formula),
               "classification": self.classification.to_json(), **part(self.parts[0])}
        if len(self.parts) > 1:
            out["rule"] = None
            out["parts"] = [part(p) for p in self.parts]
        return out


@dataclass
class Failure:
    formula: Formula
    classification: ClassificationResult
    stage: str
    reason: str
    witness: tuple[Sequent, ...] = ()
    trace: Trace | None = None

    ok = False

    def to_json(self) -> dict:
        return {"status": "failure", "formula": to_ascii(self.formula),
                "classification": self.classification.to_json(), "stage": self.stage,
                "reason": self.reason, "witness": [str(s) for s in self.witness]}


def run_definite(phi: Formula, name: str = "r") -> ConjunctRun:
    """Steps (i)-(v) on one formula; raises ``MassaError`` when a step fails."""
    from .fo import read_off_axiom, simplify

    tr = Trace()
    d = build_identity_derivation(phi)
    tr.identity = d
    pruned = prune_to_multiplicative(d)
    tr.pruned = pruned
    try:
        tr.cuts = atomic_cuts(pruned)
    except NoRedAtoms:
        tr.cuts = []
    back = skeleton_backward_chain(phi, d)
    tr.backward = back
    S = back.top
    if closing_axiom(S) is not None:
        tree = assemble_derivation(back, None, [])
        ax = read_off_axiom(None, (), S)
        return ConjunctRun(phi, None, tree, ax, ax, tr)
    try:
        fwd = pia_forward_chain(phi, d, pruned, back)
        tr.forward = fwd
        m = find_merging_point(fwd, S, _false_roots(phi, d, S))
    except MassaError as e:
        if not e.witness:
            e.witness = (S,) + tuple(c.sequent for c in tr.cuts)
        raise
    tr.merging = m
    rule = emit_rule(m, name)
    tree = assemble_derivation(back, rule, fwd)
    rep = check_proof(tree, [rule])
    if not rep.ok or not rep.cut_free:
        raise AssemblyError("assembled derivation fails the checker: "
                            + "; ".join(map(str, rep.violations)))
    ren = appearance_order(tree, d, [f.tree for f in fwd])
    tree, rule, tr = tree.relabel(ren), rule.relabel(ren), _relabel_trace(tr, ren)
    m = tr.merging
    raw = read_off_axiom(rule, m.premises, m.conclusion)
    return ConjunctRun(phi, rule, tree, raw, simplify(raw), tr)


def appearance_order(tree: ProofTree, d: ColouredDerivation,
                     extra: Sequence[ProofTree] = ()) -> dict[int, int]:
    """Labels renumbered by first appearance, reading the derivation root-first."""
    order: list[int] = []
    for _, t in tree.nodes():
        s = t.conclusion
        for r in s.rel:
            order.extend(r.labels())
        order.extend(f.label for f in s.left + s.right)
    for t in extra:
        order.extend(sorted(t.labels()))
    order.extend(range(d.labels))
    return {old: new for new, old in enumerate(dict.fromkeys(order))}


def _relabel_leaf(i: LeafInfo | None, m) -> LeafInfo | None:
    if i is None:
        return None
    return LeafInfo(i.sequent.relabel(m), i.var, i.red.relabel(m) if i.red else None,
                    i.blue.relabel(m), i.red_side)


def _relabel_cut(c: CutAxiom, m) -> CutAxiom:
    return CutAxiom(c.sequent.relabel(m), c.kind, _relabel_leaf(c.s_leaf, m), _relabel_leaf(c.p_leaf, m))


def _relabel_trace(tr: Trace, m: dict[int, int]) -> Trace:
    d = tr.identity
    g = lambda l: None if l is None else m.get(l, l)  # noqa: E731
    out = Trace()
    out.identity = ColouredDerivation(d.formula, d.tree.relabel(m), d.goal.relabel(m),
                                      {k: m[v] for k, v in d.blue_label.items()}, d.blue_side, d.labels)
    out.pruned = tr.pruned.relabel(m)
    out.cuts = [_relabel_cut(c, m) for c in tr.cuts]
    b = tr.backward
    out.backward = BackwardSection(tuple((q.relabel(m), tag, p.relabel(m), side, g(l))
                                         for q, tag, p, side, l in b.steps), b.top.relabel(m))
    out.forward = [ForwardSection(f.tree.relabel(m), tuple(_relabel_cut(c, m) for c in f.cuts), f.root)
                   for f in tr.forward]
    mp = tr.merging
    out.merging = MergingPoint(tuple(q.relabel(m) for q in mp.premises), mp.conclusion.relabel(m))
    return out


def _false_roots(phi: Formula, d: ColouredDerivation, S: Sequent) -> list[LF]:
    """Backward-top formulas that are PIA parts equivalent to falsum (no forward section exists)."""
    out = []
    for side in ("L", "R"):
        for f in S.side(side):
            if _is_false(phi, f.origin, d):
                out.append(f)
    return out


def _is_false(phi: Formula, path: Path, d: ColouredDerivation) -> bool:
    f = subformula(phi, path)
    side = d.blue_side[path]
    if isinstance(f, (Top, Bot)):
        return (side == "R") != isinstance(f, Top)
    if isinstance(f, Atom):
        return False
    kids = [path + (i,) for i in range(len(f.children()))]
    if len(kids) == 1:
        return _is_false(phi, kids[0], d)
    if isinstance(f, Neg) or rule_for(side, f) not in C.TONICITY:
        return False
    return any(_is_false(phi, k, d) for k in kids)


def run(phi: FormulaLike) -> MassaOutput | Failure:
    """Classify, then run MASSA; rejected formulas are still attempted."""
    phi = as_formula(phi)
    cls = classify(phi)
    if isinstance(cls, AnalyticInductive) and not cls.definite:
        targets = [d.reconstruct() for d in cls.conjuncts]
        names = [f"r{i + 1}" for i in range(len(targets))] if len(targets) > 1 else [rule_name_for(phi)]
    else:
        targets = [phi]
        names = [rule_name_for(phi)]
    parts = []
    for t, n in zip(targets, names):
        try:
            parts.append(run_definite(t, n))
        except MassaError as e:
            return Failure(phi, cls, e.stage, e.reason, e.witness)
    return MassaOutput(phi, cls, parts)
