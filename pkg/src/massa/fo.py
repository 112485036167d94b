"""First-order relational formulas, geometric axioms, read-off and simplification."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union


# ---------------------------------------------------------------- general FO syntax


@dataclass(frozen=True)
class FOAtom:
    """``R(a, b)``, ``Eq(a, b)``, or the constants ``top`` / ``bot``."""

    kind: str
    a: str = ""
    b: str = ""

    def vars(self) -> tuple[str, ...]:
        return (self.a, self.b) if self.kind in ("R", "Eq") else ()

    def rename(self, m: dict[str, str]) -> "FOAtom":
        if self.kind not in ("R", "Eq"):
            return self
        return FOAtom(self.kind, m.get(self.a, self.a), m.get(self.b, self.b))


@dataclass(frozen=True)
class FONot:
    sub: "FOFormula"


@dataclass(frozen=True)
class FOAnd:
    items: tuple["FOFormula", ...]


@dataclass(frozen=True)
class FOOr:
    items: tuple["FOFormula", ...]


@dataclass(frozen=True)
class FOImp:
    left: "FOFormula"
    right: "FOFormula"


@dataclass(frozen=True)
class FOForall:
    vars: tuple[str, ...]
    body: "FOFormula"


@dataclass(frozen=True)
class FOExists:
    vars: tuple[str, ...]
    body: "FOFormula"


FOFormula = Union[FOAtom, FONot, FOAnd, FOOr, FOImp, FOForall, FOExists]
FO_TOP = FOAtom("top")
FO_BOT = FOAtom("bot")


def R(a: str, b: str) -> FOAtom:
    return FOAtom("R", a, b)


def Eq(a: str, b: str) -> FOAtom:
    return FOAtom("Eq", a, b)


def free_vars(f: FOFormula) -> set[str]:
    if isinstance(f, FOAtom):
        return set(f.vars())
    if isinstance(f, FONot):
        return free_vars(f.sub)
    if isinstance(f, (FOAnd, FOOr)):
        return set().union(*(free_vars(g) for g in f.items)) if f.items else set()
    if isinstance(f, FOImp):
        return free_vars(f.left) | free_vars(f.right)
    return free_vars(f.body) - set(f.vars)


# ---------------------------------------------------------------- geometric axioms


@dataclass(frozen=True)
class Disjunct:
    exist: tuple[str, ...]
    atoms: tuple[FOAtom, ...]
    bottom: bool = False


@dataclass(frozen=True)
class GeometricAxiom:
    """``forall universal. (antecedent) -> disjunct_1 | ... | disjunct_n``.

    ``top`` marks the constant axiom; an empty disjunct list is falsum.
    """

    universal: tuple[str, ...] = ()
    antecedent: tuple[FOAtom, ...] = ()
    disjuncts: tuple[Disjunct, ...] = ()
    top: bool = False

    def to_formula(self) -> FOFormula:
        if self.top:
            return FO_TOP
        ds = []
        for d in self.disjuncts:
            body: FOFormula = FO_BOT if d.bottom else FO_TOP if not d.atoms else (
                d.atoms[0] if len(d.atoms) == 1 else FOAnd(d.atoms))
            ds.append(FOExists(d.exist, body) if d.exist else body)
        cons: FOFormula = FO_BOT if not ds else ds[0] if len(ds) == 1 else FOOr(tuple(ds))
        ante: FOFormula = FO_TOP if not self.antecedent else (
            self.antecedent[0] if len(self.antecedent) == 1 else FOAnd(self.antecedent))
        body = cons if not self.antecedent else FOImp(ante, cons)
        return FOForall(self.universal, body) if self.universal else body

    def to_json(self):
        if self.top:
            return {"top": True}
        return {
            "universal": list(self.universal),
            "antecedent": [atom_ascii(a) for a in self.antecedent],
            "disjuncts": [{"exist": list(d.exist), "atoms": [atom_ascii(a) for a in d.atoms],
                           "bottom": d.bottom} for d in self.disjuncts],
            "top": False,
        }

    def __str__(self):
        return axiom_ascii(self)


TOP_AXIOM = GeometricAxiom(top=True)


# ---------------------------------------------------------------- printing


def atom_ascii(a: FOAtom) -> str:
    if a.kind == "R":
        return f"{a.a} R {a.b}"
    if a.kind == "Eq":
        return f"{a.a} = {a.b}"
    return "true" if a.kind == "top" else "false"


def atom_unicode(a: FOAtom) -> str:
    if a.kind == "R":
        return f"{a.a}R{a.b}"
    if a.kind == "Eq":
        return f"{a.a}={a.b}"
    return "⊤" if a.kind == "top" else "⊥"


def axiom_ascii(a: GeometricAxiom) -> str:
    if a.top:
        return "true"
    ds = []
    for d in a.disjuncts:
        body = "false" if d.bottom else " & ".join(atom_ascii(x) for x in d.atoms) or "true"
        if d.exist:
            q = f"exists {' '.join(d.exist)}. ({body})"
            # a quantifier scopes to the right, so bracket it among several disjuncts
            ds.append(f"({q})" if len(a.disjuncts) > 1 else q)
        else:
            ds.append(f"({body})" if len(d.atoms) > 1 and len(a.disjuncts) > 1 else body)
    cons = " | ".join(ds) if ds else "false"
    if a.antecedent:
        body = f"({' & '.join(atom_ascii(x) for x in a.antecedent)}) -> {cons}"
    else:
        body = cons
    return f"forall {' '.join(a.universal)}. {body}" if a.universal else body


def axiom_unicode(a: GeometricAxiom) -> str:
    if a.top:
        return "⊤"
    ds = []
    for d in a.disjuncts:
        body = "⊥" if d.bottom else "∧".join(atom_unicode(x) for x in d.atoms) or "⊤"
        q = "".join(f"∃{v}" for v in d.exist)
        if q:
            ds.append(f"{q}({body})")
        else:
            ds.append(f"({body})" if len(d.atoms) > 1 and len(a.disjuncts) > 1 else body)
    cons = "∨".join(ds) if ds else "⊥"
    ante = "∧".join(atom_unicode(x) for x in a.antecedent)
    body = f"{ante}→{cons}" if ante else cons
    q = "".join(f"∀{v}" for v in a.universal)
    return f"{q}[{body}]" if q else body


def fo_ascii(f: FOFormula) -> str:
    if isinstance(f, FOAtom):
        return atom_ascii(f)
    if isinstance(f, FONot):
        return "~" + _wrap(f.sub)
    if isinstance(f, FOAnd):
        return " & ".join(_wrap(g) for g in f.items) if f.items else "true"
    if isinstance(f, FOOr):
        return " | ".join(_wrap(g) for g in f.items) if f.items else "false"
    if isinstance(f, FOImp):
        return f"{_wrap(f.left)} -> {_wrap(f.right)}"
    q = "forall" if isinstance(f, FOForall) else "exists"
    return f"{q} {' '.join(f.vars)}. {_wrap(f.body)}"


def _wrap(f: FOFormula) -> str:
    s = fo_ascii(f)
    return s if isinstance(f, (FOAtom, FONot)) else f"({s})"


# ---------------------------------------------------------------- parsing


class FOParseError(SyntaxError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = f"{message} at byte {offset}"
        self.offset = offset

    def __str__(self):
        return self.message


_FO_TOKEN = re.compile(
    r"\s*(?:(?P<imp>->|→)|(?P<and>&|∧)|(?P<or>\||∨)|(?P<not>~|¬)|(?P<eq>=)"
    r"|(?P<lp>\(|\[)|(?P<rp>\)|\])|(?P<dot>\.)|(?P<all>∀)|(?P<ex>∃)"
    r"|(?P<top>⊤)|(?P<bot>⊥)|(?P<id>[A-Za-z_][A-Za-z0-9_]*))"
)


def parse_fo(text: str) -> FOFormula:
    """Parse FO frame conditions.

    Accepts ``forall x y. A``, ``exists x. A``, ``∀x∃y(A)``, ``x R y``,
    ``R(x,y)``, ``xRy``, ``x = y``, ``&``, ``|``, ``->``, ``~``, ``true``, ``false``.
    """
    toks: list[tuple[str, str, int]] = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        if text[pos] == ",":
            toks.append(("comma", ",", pos))
            pos += 1
            continue
        m = _FO_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FOParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        val = m.group(kind)
        start = m.start(kind)
        if kind == "id":
            low = val
            if low == "forall":
                kind = "all"
            elif low == "exists":
                kind = "ex"
            elif low == "true":
                kind = "top"
            elif low == "false":
                kind = "bot"
            elif re.fullmatch(r"[a-z][a-z0-9_]*R[a-z][a-z0-9_]*", val):
                a, b = val.split("R", 1)
                toks.append(("id", a, start))
                toks.append(("id", "R", start))
                toks.append(("id", b, start))
                pos = m.end()
                continue
        toks.append((kind, val, len(text[:start].encode())))
        pos = m.end()
    toks.append(("eof", "", len(text.encode())))
    i = 0

    def peek():
        return toks[i]

    def take(kind=None):
        nonlocal i
        t = toks[i]
        if kind and t[0] != kind:
            raise FOParseError(f"expected {kind}, found {t[1] or 'end of input'!r}", t[2])
        i += 1
        return t

    def imp():
        lhs = disj()
        if peek()[0] == "imp":
            take()
            return FOImp(lhs, imp())
        return lhs

    def disj():
        items = [conj()]
        while peek()[0] == "or":
            take()
            items.append(conj())
        return items[0] if len(items) == 1 else FOOr(tuple(items))

    def conj():
        items = [unary()]
        while peek()[0] == "and":
            take()
            items.append(unary())
        return items[0] if len(items) == 1 else FOAnd(tuple(items))

    def quant(kind):
        vs = []
        while True:
            t = peek()
            if t[0] == "id" and toks[i + 1][0] not in ("eq",) and not (
                    toks[i + 1][0] == "id" and toks[i + 1][1] == "R"):
                vs.append(take()[1])
                if peek()[0] == kind:
                    take()
                continue
            break
        if not vs:
            raise FOParseError("quantifier without variables", peek()[2])
        if peek()[0] == "dot":
            take()
        body = imp()
        cls = FOForall if kind == "all" else FOExists
        return cls(tuple(vs), body)

    def unary():
        t = peek()
        if t[0] == "not":
            take()
            return FONot(unary())
        if t[0] in ("all", "ex"):
            take()
            return quant(t[0])
        if t[0] == "lp":
            take()
            f = imp()
            take("rp")
            return f
        if t[0] == "top":
            take()
            return FO_TOP
        if t[0] == "bot":
            take()
            return FO_BOT
        if t[0] == "id":
            name = take()[1]
            if name == "R" and peek()[0] == "lp":
                take()
                a = take("id")[1]
                take("comma")
                b = take("id")[1]
                take("rp")
                return R(a, b)
            nxt = peek()
            if nxt[0] == "eq":
                take()
                return Eq(name, take("id")[1])
            if nxt[0] == "id" and nxt[1] == "R":
                take()
                return R(name, take("id")[1])
            raise FOParseError(f"expected R or = after {name!r}", nxt[2])
        raise FOParseError(f"unexpected {t[1] or 'end of input'!r}", t[2])

    f = imp()
    if peek()[0] != "eof":
        raise FOParseError(f"unexpected {peek()[1]!r}", peek()[2])
    return f


def as_geometric(f: FOFormula) -> GeometricAxiom | None:
    """Recognise the geometric-axiom shape inside a general FO formula."""
    universal: list[str] = []
    while isinstance(f, FOForall):
        universal.extend(f.vars)
        f = f.body
    if f == FO_TOP:
        return TOP_AXIOM
    ante: tuple[FOAtom, ...] = ()
    if isinstance(f, FOImp):
        a = _atom_list(f.left)
        if a is None:
            return None
        ante = tuple(x for x in a if x != FO_TOP)
        f = f.right
    ds = _disjuncts(f, ())
    if ds is None:
        return None
    return GeometricAxiom(tuple(universal), ante, tuple(d for d in ds if FO_BOT not in d.atoms))


def _disjuncts(f: FOFormula, exist: tuple[str, ...]) -> list[Disjunct] | None:
    """Existentials distribute over disjunction: ``exists v. (A | B)`` gives two disjuncts."""
    if isinstance(f, FOExists):
        return _disjuncts(f.body, tuple(dict.fromkeys(exist + tuple(f.vars))))
    if isinstance(f, FOOr):
        out: list[Disjunct] = []
        for g in f.items:
            d = _disjuncts(g, exist)
            if d is None:
                return None
            out.extend(d)
        return out
    atoms_ = _atom_list(f)
    if atoms_ is None:
        return None
    return [Disjunct(exist, tuple(x for x in atoms_ if x != FO_TOP))]


def _atom_list(f: FOFormula) -> list[FOAtom] | None:
    if isinstance(f, FOAtom):
        return [f]
    if isinstance(f, FOAnd):
        out = []
        for g in f.items:
            a = _atom_list(g)
            if a is None:
                return None
            out.extend(a)
        return out
    return None


# ---------------------------------------------------------------- read-off


def _rel_atom(r, name) -> FOAtom:
    return FOAtom(r.kind, name(r.a), name(r.b))


def read_off_axiom(rule, premises_S_i=(), conclusion_S=None, root: int = 0) -> GeometricAxiom:
    """The geometric axiom of ``rule``: antecedent R, one disjunct per premise.

    A premise derived from a marker cut contributes falsum; with no rule (the
    backward top is already an initial sequent) the axiom is the constant true.
    """
    from .calculus import label_name

    if rule is None:
        return TOP_AXIOM
    if conclusion_S is not None and any(f.marker for f in conclusion_S.left + conclusion_S.right):
        return TOP_AXIOM
    labels = {root}
    for r in rule.conclusion_rel:
        labels.update(r.labels())
    if conclusion_S is not None:
        labels.update(f.label for f in conclusion_S.left + conclusion_S.right)
    ds = []
    for p in rule.premises:
        if p.bottom:
            ds.append(Disjunct((), (), True))
        else:
            ds.append(Disjunct(tuple(label_name(e) for e in p.eigen),
                               tuple(_rel_atom(r, label_name) for r in p.extra_rel)))
    return GeometricAxiom(tuple(label_name(l) for l in sorted(labels)),
                          tuple(_rel_atom(r, label_name) for r in rule.conclusion_rel),
                          tuple(ds))


# ---------------------------------------------------------------- shape checks


def validate_geometric(a: GeometricAxiom) -> list[str]:
    """Shape violations; an empty list means the axiom is well formed."""
    if a.top:
        return []
    out = []
    univ = set(a.universal)
    if len(univ) != len(a.universal):
        out.append("repeated universal variable")
    for x in a.antecedent:
        if x.kind not in ("R", "Eq"):
            out.append(f"antecedent atom {atom_ascii(x)} is not relational")
        for v in x.vars():
            if v not in univ:
                out.append(f"antecedent variable {v} is not universally bound")
    for i, d in enumerate(a.disjuncts):
        ex = set(d.exist)
        if len(ex) != len(d.exist):
            out.append(f"disjunct {i}: repeated existential variable")
        for v in sorted(ex & univ):
            out.append(f"disjunct {i}: existential {v} also universal")
        for v in sorted(ex & {v for x in a.antecedent for v in x.vars()}):
            out.append(f"disjunct {i}: existential {v} occurs in the antecedent")
        if d.bottom and d.atoms:
            out.append(f"disjunct {i}: falsum with atoms")
        for x in d.atoms:
            if x.kind not in ("R", "Eq"):
                out.append(f"disjunct {i}: atom {atom_ascii(x)} is not relational")
            for v in x.vars():
                if v not in univ | ex:
                    out.append(f"disjunct {i}: variable {v} is free")
    return out


# ---------------------------------------------------------------- simplification


def _subst(atoms_: Iterable[FOAtom], m: dict[str, str]) -> tuple[FOAtom, ...]:
    return tuple(x.rename(m) for x in atoms_)


def _uniq(xs):
    return tuple(dict.fromkeys(xs))


def _simplify_disjunct(d: Disjunct, ante: set[FOAtom]) -> Disjunct | None:
    """Returns None when the disjunct is implied by the antecedent."""
    ex = list(d.exist)
    atoms_ = list(d.atoms)
    changed = True
    while changed:
        changed = False
        for x in atoms_:
            if x.kind != "Eq":
                continue
            if x.a == x.b:
                atoms_.remove(x)
                changed = True
                break
            for u, v in ((x.a, x.b), (x.b, x.a)):
                if u in ex:
                    atoms_ = list(_subst((y for y in atoms_ if y is not x), {u: v}))
                    ex.remove(u)
                    changed = True
                    break
            if changed:
                break
    atoms_ = [x for x in _uniq(atoms_) if x not in ante and not (x.kind == "Eq" and Eq(x.b, x.a) in ante)]
    used = {v for x in atoms_ for v in x.vars()}
    ex = [v for v in ex if v in used]
    if not atoms_:
        return None
    return Disjunct(tuple(ex), tuple(atoms_))


def _key(d: Disjunct):
    return (d.exist, frozenset(d.atoms))


def simplify_syntactic(a: GeometricAxiom) -> GeometricAxiom:
    if a.top:
        return a
    univ = list(a.universal)
    ante = list(a.antecedent)
    ds = [d for d in a.disjuncts if not d.bottom]
    # identities in the antecedent merge universals
    while True:
        eq = next((x for x in ante if x.kind == "Eq"), None)
        if eq is None:
            break
        ante.remove(eq)
        if eq.a != eq.b:
            keep, drop = sorted((eq.a, eq.b), key=univ.index)
            m = {drop: keep}
            ante = list(_subst(ante, m))
            ds = [Disjunct(d.exist, _subst(d.atoms, m)) for d in ds]
            univ.remove(drop)
    ante = list(_uniq(ante))
    out, seen = [], set()
    for d in ds:
        s = _simplify_disjunct(d, set(ante))
        if s is None:
            return TOP_AXIOM
        if _key(s) not in seen:
            seen.add(_key(s))
            out.append(s)
    used = {v for x in ante for v in x.vars()} | {v for d in out for x in d.atoms for v in x.vars()}
    univ = [v for v in univ if v in used]
    return GeometricAxiom(tuple(univ), tuple(ante), tuple(out))


def simplify(a: GeometricAxiom, guard_bound: int = 4) -> GeometricAxiom:
    """Equality elimination and clean-up, kept only if the oracle confirms equivalence.

    With ``guard_bound`` 0 the syntactic result is returned unchecked.
    """
    s = simplify_syntactic(a)
    if s == a or guard_bound <= 0:
        return s
    from .semantics import fo_equivalent

    if fo_equivalent(a, s, max_n=guard_bound, up_to_iso=True):
        return s
    return a


# ---------------------------------------------------------------- comparison


def canonical(a: GeometricAxiom) -> GeometricAxiom:
    """Rename variables to v0, v1, ... in order of first appearance."""
    if a.top:
        return a
    order: list[str] = list(a.universal)
    for x in a.antecedent:
        order.extend(x.vars())
    for d in a.disjuncts:
        order.extend(d.exist)
        for x in d.atoms:
            order.extend(x.vars())
    m = {v: f"v{i}" for i, v in enumerate(dict.fromkeys(order))}
    return GeometricAxiom(tuple(m[v] for v in a.universal), _subst(a.antecedent, m),
                          tuple(Disjunct(tuple(m[v] for v in d.exist), _subst(d.atoms, m), d.bottom)
                                for d in a.disjuncts))


def same_up_to_renaming(a: GeometricAxiom, b: GeometricAxiom) -> bool:
    """Alpha-equivalence, with Eq atoms read symmetrically and atom order ignored.

    Tries every bijection between the variables; fine for the small axioms
    produced here.
    """
    import itertools

    if a.top or b.top:
        return a.top == b.top
    if (len(a.universal), len(a.disjuncts)) != (len(b.universal), len(b.disjuncts)):
        return False

    def norm(x: FOAtom) -> FOAtom:
        return FOAtom("Eq", *sorted((x.a, x.b))) if x.kind == "Eq" else x

    def sig(ax, m):
        ante = frozenset(norm(x.rename(m)) for x in ax.antecedent)
        ds = frozenset((frozenset(m.get(v, v) for v in d.exist), d.bottom,
                        frozenset(norm(x.rename(m)) for x in d.atoms)) for d in ax.disjuncts)
        return ante, ds

    bvars = list(b.universal) + [v for d in b.disjuncts for v in d.exist]
    avars = list(a.universal) + [v for d in a.disjuncts for v in d.exist]
    target = sig(b, {})
    univ_b = list(b.universal)
    ex_b = list(dict.fromkeys(v for d in b.disjuncts for v in d.exist))
    ex_a = list(dict.fromkeys(v for d in a.disjuncts for v in d.exist))
    if len(ex_a) != len(ex_b) or len(set(avars)) != len(set(bvars)):
        return False
    for pu in itertools.permutations(univ_b):
        m0 = dict(zip(a.universal, pu))
        for pe in itertools.permutations(ex_b):
            m = dict(m0)
            m.update(zip(ex_a, pe))
            if sig(a, m) == target:
                return True
    return False
