"""Classical modal formulas: syntax trees, parsing, printing, NNF and polarity."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union


class Formula:
    """Base class of all modal formula nodes.

    Nodes are immutable frozen dataclasses, so structural equality and hashing
    come for free and are used wherever formulas are compared.
    """

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return to_ascii(self)


@dataclass(frozen=True, eq=True, repr=False)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not _ATOM_RE.fullmatch(self.name) or self.name in _KEYWORDS:
            raise ValueError(f"invalid atom name {self.name!r}")

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Bot(Formula):
    def __repr__(self):
        return "Bot()"


@dataclass(frozen=True, eq=True, repr=False)
class Top(Formula):
    def __repr__(self):
        return "Top()"


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)

    def __repr__(self):
        return f"Neg({self.sub!r})"


@dataclass(frozen=True, eq=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Imp(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Imp({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Box(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)

    def __repr__(self):
        return f"Box({self.sub!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Dia(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)

    def __repr__(self):
        return f"Dia({self.sub!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Hole(Formula):
    """Placeholder variable of a Skeleton template (printed as ``!name``)."""

    name: str

    def __repr__(self):
        return f"Hole({self.name!r})"


BOT = Bot()
TOP = Top()

UNARY = (Neg, Box, Dia)
BINARY = (And, Or, Imp)

_ATOM_RE = re.compile(r"[a-z][a-zA-Z0-9_]*")
_KEYWORDS = {"box", "dia", "true", "false"}


def rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    """Same connective as ``f`` over new children."""
    if isinstance(f, UNARY):
        return type(f)(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    return f


def subformula(f: Formula, path: tuple[int, ...]) -> Formula:
    for i in path:
        f = f.children()[i]
    return f


def walk(f: Formula, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Formula]]:
    """Pre-order traversal yielding ``(path, node)``."""
    yield path, f
    for i, c in enumerate(f.children()):
        yield from walk(c, path + (i,))


def atoms(f: Formula) -> list[str]:
    """Atom names in order of first occurrence."""
    seen: dict[str, None] = {}
    for _, g in walk(f):
        if isinstance(g, Atom):
            seen.setdefault(g.name)
    return list(seen)


def depth(f: Formula) -> int:
    kids = f.children()
    return 1 + max((depth(c) for c in kids), default=0) if kids else 0


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in f.children())


# ---------------------------------------------------------------- printing

_PREC = {Imp: 1, Or: 2, And: 3}


def _show(f: Formula, sym: Mapping[str, str]) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Hole):
        return "!" + f.name
    if isinstance(f, Bot):
        return sym["bot"]
    if isinstance(f, Top):
        return sym["top"]
    if isinstance(f, UNARY):
        op = sym[type(f).__name__.lower()]
        inner = _show(f.sub, sym)
        if isinstance(f.sub, BINARY):
            inner = f"({inner})"
        return op + inner
    prec = _PREC[type(f)]
    lhs, rhs = _show(f.left, sym), _show(f.right, sym)
    lp = _PREC.get(type(f.left), 9)
    rp = _PREC.get(type(f.right), 9)
    if isinstance(f, Imp):
        # right associative
        if lp <= prec:
            lhs = f"({lhs})"
        if rp < prec:
            rhs = f"({rhs})"
    else:
        if lp < prec:
            lhs = f"({lhs})"
        if rp <= prec:
            rhs = f"({rhs})"
    return f"{lhs} {sym[type(f).__name__.lower()]} {rhs}"


_ASCII = {"bot": "false", "top": "true", "neg": "~", "box": "box ", "dia": "dia ",
          "and": "&", "or": "|", "imp": "->"}
_UNICODE = {"bot": "⊥", "top": "⊤", "neg": "¬", "box": "□", "dia": "◇",
            "and": "∧", "or": "∨", "imp": "→"}


def to_ascii(f: Formula) -> str:
    return _show(f, _ASCII)


def to_unicode(f: Formula) -> str:
    return _show(f, _UNICODE)


def to_latex(f: Formula) -> str:
    sym = {"bot": r"\bot", "top": r"\top", "neg": r"\neg ", "box": r"\Box ",
           "dia": r"\Diamond ", "and": r"\wedge", "or": r"\vee", "imp": r"\rightarrow"}
    return _show(f, sym)


# ---------------------------------------------------------------- parsing


class ParseError(SyntaxError):
    """Raised on malformed formula text.

    ``offset`` is a byte offset into the UTF-8 encoding of the input and
    ``expected`` the set of tokens that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: set[str]):
        text = f"{message} at byte {offset}; expected one of: " + ", ".join(sorted(expected))
        super().__init__(text)
        self.message = text
        self.offset = offset
        self.expected = expected

    def __str__(self):
        return self.message


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->|→)|(?P<box>\[\]|□)|(?P<dia><>|◇)|(?P<neg>~|¬)"
    r"|(?P<and>&|∧)|(?P<or>\||∨)|(?P<bot>⊥)|(?P<top>⊤)|(?P<lp>\()|(?P<rp>\))"
    r"|(?P<ident>[a-zA-Z_][a-zA-Z0-9_]*))"
)

_PRIMARY_START = {"atom", "false", "true", "~", "box", "dia", "("}


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             len(text[:pos].encode()), _PRIMARY_START | {"&", "|", "->", ")"})
        kind = m.lastgroup
        tok_text = m.group(kind)
        start = m.start(kind)
        if kind == "ident":
            if tok_text in ("box", "dia"):
                kind = tok_text
            elif tok_text == "false":
                kind = "bot"
            elif tok_text == "true":
                kind = "top"
            elif not _ATOM_RE.fullmatch(tok_text):
                raise ParseError(f"invalid atom name {tok_text!r}",
                                 len(text[:start].encode()), {"atom"})
            else:
                kind = "atom"
        toks.append(_Tok(kind, tok_text, len(text[:start].encode())))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected: set[str]):
        t = self.peek()
        what = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"unexpected {what}", t.offset, expected)

    def parse(self) -> Formula:
        f = self.imp()
        if self.peek().kind != "eof":
            self.fail({"&", "|", "->", "end of input"})
        return f

    def imp(self) -> Formula:
        lhs = self.disj()
        if self.peek().kind == "arrow":
            self.take()
            return Imp(lhs, self.imp())
        return lhs

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek().kind == "or":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek().kind == "and":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "neg":
            self.take()
            return Neg(self.unary())
        if t.kind == "box":
            self.take()
            return Box(self.unary())
        if t.kind == "dia":
            self.take()
            return Dia(self.unary())
        if t.kind == "atom":
            self.take()
            return Atom(t.text)
        if t.kind == "bot":
            self.take()
            return BOT
        if t.kind == "top":
            self.take()
            return TOP
        if t.kind == "lp":
            self.take()
            f = self.imp()
            if self.peek().kind != "rp":
                self.fail({")", "&", "|", "->"})
            self.take()
            return f
        self.fail(_PRIMARY_START)


def parse(text: str) -> Formula:
    """Parse the ASCII/Unicode concrete syntax.

    >>> parse("dia box p -> box dia p")
    Imp(Dia(Box(Atom('p'))), Box(Dia(Atom('p'))))
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------- normal forms


def to_nnf(f: Formula) -> Formula:
    """Negation normal form over {and, or, box, dia, literals, bot, top}."""
    return _nnf(f, True)


def _nnf(f: Formula, pos: bool) -> Formula:
    if isinstance(f, (Atom, Hole)):
        return f if pos else Neg(f)
    if isinstance(f, Bot):
        return BOT if pos else TOP
    if isinstance(f, Top):
        return TOP if pos else BOT
    if isinstance(f, Neg):
        return _nnf(f.sub, not pos)
    if isinstance(f, And):
        op = And if pos else Or
        return op(_nnf(f.left, pos), _nnf(f.right, pos))
    if isinstance(f, Or):
        op = Or if pos else And
        return op(_nnf(f.left, pos), _nnf(f.right, pos))
    if isinstance(f, Imp):
        op = Or if pos else And
        return op(_nnf(f.left, not pos), _nnf(f.right, pos))
    if isinstance(f, Box):
        return (Box if pos else Dia)(_nnf(f.sub, pos))
    if isinstance(f, Dia):
        return (Dia if pos else Box)(_nnf(f.sub, pos))
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    for _, g in walk(f):
        if isinstance(g, Imp):
            return False
        if isinstance(g, Neg) and not isinstance(g.sub, (Atom, Hole)):
            return False
    return True


def is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Neg) and isinstance(f.sub, Atom))


# ---------------------------------------------------------------- occurrences


@dataclass(frozen=True)
class Occurrence:
    path: tuple[int, ...]
    variable: str
    positive: bool

    @property
    def sign(self) -> str:
        return "positive" if self.positive else "negative"


def occurrences(f: Formula, v: str) -> list[Occurrence]:
    """Every occurrence of atom ``v`` with its polarity.

    A path edge reverses polarity when it enters a negation or the antecedent
    of an implication.
    """
    out: list[Occurrence] = []

    def go(g: Formula, path: tuple[int, ...], pos: bool):
        if isinstance(g, Atom):
            if g.name == v:
                out.append(Occurrence(path, v, pos))
            return
        for i, c in enumerate(g.children()):
            flip = isinstance(g, Neg) or (isinstance(g, Imp) and i == 0)
            go(c, path + (i,), pos != flip)

    go(f, (), True)
    return out


def polarities(f: Formula) -> dict[str, set[bool]]:
    """Map each atom to the set of polarities it occurs with."""
    return {v: {o.positive for o in occurrences(f, v)} for v in atoms(f)}


# ---------------------------------------------------------------- substitution


class UnassignedPlaceholder(KeyError):
    pass


def holes(f: Formula) -> list[str]:
    return [g.name for _, g in walk(f) if isinstance(g, Hole)]


def substitute(template: Formula, assignment: Mapping[str, Formula]) -> Formula:
    """Replace each ``Hole`` by its assigned formula."""
    if isinstance(template, Hole):
        try:
            return assignment[template.name]
        except KeyError:
            raise UnassignedPlaceholder(template.name) from None
    kids = template.children()
    if not kids:
        return template
    return rebuild(template, tuple(substitute(c, assignment) for c in kids))


def rename_atoms(f: Formula, mapping: Mapping[str, str]) -> Formula:
    if isinstance(f, Atom):
        return Atom(mapping.get(f.name, f.name))
    kids = f.children()
    if not kids:
        return f
    return rebuild(f, tuple(rename_atoms(c, mapping) for c in kids))


def canonical_atoms(f: Formula) -> Formula:
    """Rename atoms to p0, p1, ... in order of first occurrence."""
    return rename_atoms(f, {a: f"p{i}" for i, a in enumerate(atoms(f))})


FormulaLike = Union[Formula, str]


def as_formula(f: FormulaLike) -> Formula:
    return parse(f) if isinstance(f, str) else f
