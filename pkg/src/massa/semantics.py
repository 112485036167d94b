"""Finite Kripke frames and the brute-force correspondence oracle.

Two evaluators are provided. ``eval_modal`` and ``eval_fo_frame`` work on a
single frame in plain Python and serve as the reference. The batch engine
stores every frame of a given size as one boolean array of shape
``(frames, n, n)`` and evaluates formulas on all of them at once with numpy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fo import (
    FOAnd, FOAtom, FOForall, FOFormula, FOImp, FONot, FOOr,
    GeometricAxiom, as_geometric, free_vars,
)
from .formula import (
    And, Atom, Bot, Box, Dia, Formula, FormulaLike, Imp, Neg, Or, Top,
    as_formula, atoms,
)

MAX_WORLDS = 8
MAX_BOUND = 5


class UnvaluedAtom(KeyError):
    pass


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    n: int
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if not 1 <= self.n <= MAX_WORLDS:
            raise ValueError(f"world count {self.n} outside [1, {MAX_WORLDS}]")
        object.__setattr__(self, "edges", frozenset(self.edges))
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge {(a, b)} outside [0, {self.n})")

    def successors(self, w: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == w)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for a, b in self.edges:
            m[a, b] = True
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Frame":
        n = m.shape[0]
        return cls(n, frozenset((int(a), int(b)) for a, b in zip(*np.nonzero(m))))

    def __str__(self):
        es = ",".join(f"({a},{b})" for a, b in sorted(self.edges))
        return f"n={self.n}; R={{{es}}}"

    def to_json(self):
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}


@dataclass(frozen=True)
class Model:
    frame: Frame
    valuation: Mapping[str, frozenset[int]] = field(default_factory=dict)


# ---------------------------------------------------------------- reference evaluators


def eval_modal(m: Model, w: int, f: FormulaLike) -> bool:
    f = as_formula(f)
    if not 0 <= w < m.frame.n:
        raise ValueError(f"world {w} outside frame")
    if isinstance(f, Atom):
        if f.name not in m.valuation:
            raise UnvaluedAtom(f.name)
        return w in m.valuation[f.name]
    if isinstance(f, Bot):
        return False
    if isinstance(f, Top):
        return True
    if isinstance(f, Neg):
        return not eval_modal(m, w, f.sub)
    if isinstance(f, And):
        return eval_modal(m, w, f.left) and eval_modal(m, w, f.right)
    if isinstance(f, Or):
        return eval_modal(m, w, f.left) or eval_modal(m, w, f.right)
    if isinstance(f, Imp):
        return (not eval_modal(m, w, f.left)) or eval_modal(m, w, f.right)
    if isinstance(f, Box):
        return all(eval_modal(m, v, f.sub) for v in m.frame.successors(w))
    if isinstance(f, Dia):
        return any(eval_modal(m, v, f.sub) for v in m.frame.successors(w))
    raise TypeError(f"cannot evaluate {f!r}")


def valuations(names: Sequence[str], n: int) -> Iterable[dict[str, frozenset[int]]]:
    subsets = [frozenset(i for i in range(n) if mask >> i & 1) for mask in range(1 << n)]
    for combo in itertools.product(subsets, repeat=len(names)):
        yield dict(zip(names, combo))


def frame_validates(fr: Frame, f: FormulaLike, max_atoms: int = 2) -> bool:
    """Truth at every world under every valuation of the formula's atoms."""
    f = as_formula(f)
    names = atoms(f)
    if len(names) > max_atoms:
        raise BudgetExceeded(f"{len(names)} atoms exceeds budget {max_atoms}")
    return bool(validity_mask(f, frames_array([fr]), max_atoms=max_atoms)[0])


def eval_fo_frame(fr: Frame, f: FOFormula | GeometricAxiom,
                  env: Mapping[str, int] | None = None) -> bool:
    if isinstance(f, GeometricAxiom):
        f = f.to_formula()
    env = dict(env or {})
    if isinstance(f, FOAtom):
        if f.kind == "top":
            return True
        if f.kind == "bot":
            return False
        a, b = env[f.a], env[f.b]
        return (a, b) in fr.edges if f.kind == "R" else a == b
    if isinstance(f, FONot):
        return not eval_fo_frame(fr, f.sub, env)
    if isinstance(f, FOAnd):
        return all(eval_fo_frame(fr, g, env) for g in f.items)
    if isinstance(f, FOOr):
        return any(eval_fo_frame(fr, g, env) for g in f.items)
    if isinstance(f, FOImp):
        return (not eval_fo_frame(fr, f.left, env)) or eval_fo_frame(fr, f.right, env)
    quant = all if isinstance(f, FOForall) else any
    return quant(eval_fo_frame(fr, f.body, {**env, **dict(zip(f.vars, vals))})
                 for vals in itertools.product(range(fr.n), repeat=len(f.vars)))


# ---------------------------------------------------------------- batch engine


@lru_cache(maxsize=None)
def all_frames(n: int) -> np.ndarray:
    """Every relation on ``n`` worlds; frame ``k`` has edge ``(i, j)`` iff bit ``i*n+j`` of ``k``."""
    if not 1 <= n <= MAX_BOUND:
        raise BudgetExceeded(f"frame size {n} outside [1, {MAX_BOUND}]")
    codes = np.arange(1 << (n * n), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n * n)) & 1
    out = bits.astype(bool).reshape(-1, n, n)
    out.setflags(write=False)
    return out


def _codes(rel: np.ndarray) -> np.ndarray:
    n = rel.shape[1]
    weights = (1 << np.arange(n * n, dtype=np.int64))
    return rel.reshape(rel.shape[0], -1).astype(np.int64) @ weights


def _decode(codes: np.ndarray, n: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n * n)) & 1).astype(bool).reshape(-1, n, n)


def _canonical_codes(rel: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    """Least code over all relabellings of each frame."""
    n = rel.shape[1]
    cols = []
    for perm in itertools.permutations(range(n)):
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                w[i, j] = 2.0 ** (perm[i] * n + perm[j])
        cols.append(w.ravel())
    W = np.stack(cols, axis=1)  # exact in float64: codes stay below 2**25
    flat = rel.reshape(rel.shape[0], -1)
    out = np.empty(rel.shape[0], dtype=np.int64)
    for lo in range(0, rel.shape[0], chunk):
        out[lo:lo + chunk] = (flat[lo:lo + chunk].astype(np.float64) @ W).min(axis=1).astype(np.int64)
    return out


@lru_cache(maxsize=None)
def iso_frames(n: int) -> np.ndarray:
    """One representative per isomorphism class of relations on ``n`` worlds.

    Every frame restricts to a frame on its first ``n - 1`` worlds, so the
    classes are found by extending smaller representatives with one world
    in every possible way and keeping least codes.
    """
    if not 1 <= n <= MAX_BOUND:
        raise BudgetExceeded(f"frame size {n} outside [1, {MAX_BOUND}]")
    if n == 1:
        return all_frames(1)
    base = iso_frames(n - 1)
    ext = ((np.arange(1 << (2 * n - 1))[:, None] >> np.arange(2 * n - 1)) & 1).astype(bool)
    reps = []
    for lo in range(0, base.shape[0], 256):
        b = base[lo:lo + 256]
        cand = np.zeros((b.shape[0], ext.shape[0], n, n), dtype=bool)
        cand[:, :, :n - 1, :n - 1] = b[:, None]
        cand[:, :, n - 1, :] = ext[None, :, :n]
        cand[:, :, :n - 1, n - 1] = ext[None, :, n:]
        reps.append(np.unique(_canonical_codes(cand.reshape(-1, n, n))))
    out = _decode(np.unique(np.concatenate(reps)), n)
    out.setflags(write=False)
    return out


def frames_array(frames: Sequence[Frame]) -> np.ndarray:
    n = frames[0].n
    if any(fr.n != n for fr in frames):
        raise ValueError("frames of mixed size")
    return np.stack([fr.matrix() for fr in frames])


def eval_modal_batch(f: Formula, rel: np.ndarray, val: Mapping[str, np.ndarray]) -> np.ndarray:
    """Truth table ``(frames, n)`` of ``f`` under a frame-independent valuation."""
    F, n, _ = rel.shape
    if isinstance(f, Atom):
        if f.name not in val:
            raise UnvaluedAtom(f.name)
        return np.broadcast_to(val[f.name], (F, n))
    if isinstance(f, Bot):
        return np.zeros((F, n), dtype=bool)
    if isinstance(f, Top):
        return np.ones((F, n), dtype=bool)
    if isinstance(f, Neg):
        return ~eval_modal_batch(f.sub, rel, val)
    if isinstance(f, (And, Or, Imp)):
        a = eval_modal_batch(f.left, rel, val)
        b = eval_modal_batch(f.right, rel, val)
        if isinstance(f, And):
            return a & b
        if isinstance(f, Or):
            return a | b
        return ~a | b
    s = eval_modal_batch(f.sub, rel, val)
    if isinstance(f, Box):
        return ~np.any(rel & ~s[:, None, :], axis=2)
    if isinstance(f, Dia):
        return np.any(rel & s[:, None, :], axis=2)
    raise TypeError(f"cannot evaluate {f!r}")


def validity_mask(f: FormulaLike, rel: np.ndarray, max_atoms: int = 2) -> np.ndarray:
    """Boolean vector: which frames validate ``f``."""
    f = as_formula(f)
    names = atoms(f)
    if len(names) > max_atoms:
        raise BudgetExceeded(f"{len(names)} atoms exceeds budget {max_atoms}")
    F, n, _ = rel.shape
    alive = np.arange(F)
    worlds = np.arange(n)
    for combo in itertools.product(range(1 << n), repeat=len(names)):
        if alive.size == 0:
            break
        val = {p: ((mask >> worlds) & 1).astype(bool) for p, mask in zip(names, combo)}
        ok = eval_modal_batch(f, rel[alive], val).all(axis=1)
        alive = alive[ok]
    mask = np.zeros(F, dtype=bool)
    mask[alive] = True
    return mask


def eval_fo_batch(f: FOFormula | GeometricAxiom, rel: np.ndarray,
                  env: Mapping[str, int] | None = None) -> np.ndarray:
    """Truth of a sentence (or of a formula under ``env``) on every frame."""
    if not env:
        g = f if isinstance(f, GeometricAxiom) else as_geometric(f)
        if g is not None and _closed(g):
            return eval_geometric_batch(g, rel)
    if isinstance(f, GeometricAxiom):
        f = f.to_formula()
    env = dict(env or {})
    F, n, _ = rel.shape
    if isinstance(f, FOAtom):
        if f.kind == "top":
            return np.ones(F, dtype=bool)
        if f.kind == "bot":
            return np.zeros(F, dtype=bool)
        a, b = env[f.a], env[f.b]
        if f.kind == "R":
            return rel[:, a, b]
        return np.full(F, a == b)
    if isinstance(f, FONot):
        return ~eval_fo_batch(f.sub, rel, env)
    if isinstance(f, FOAnd):
        out = np.ones(F, dtype=bool)
        for g in f.items:
            out &= eval_fo_batch(g, rel, env)
        return out
    if isinstance(f, FOOr):
        out = np.zeros(F, dtype=bool)
        for g in f.items:
            out |= eval_fo_batch(g, rel, env)
        return out
    if isinstance(f, FOImp):
        return ~eval_fo_batch(f.left, rel, env) | eval_fo_batch(f.right, rel, env)
    universal = isinstance(f, FOForall)
    out = np.full(F, universal)
    for vals in itertools.product(range(n), repeat=len(f.vars)):
        r = eval_fo_batch(f.body, rel, {**env, **dict(zip(f.vars, vals))})
        out = out & r if universal else out | r
    return out


def _closed(a: GeometricAxiom) -> bool:
    if a.top:
        return True
    univ = set(a.universal)
    if len(univ) != len(a.universal) or any(v not in univ for x in a.antecedent for v in x.vars()):
        return False
    for d in a.disjuncts:
        if set(d.exist) & univ or len(set(d.exist)) != len(d.exist):
            return False
        if any(v not in univ and v not in d.exist for x in d.atoms for v in x.vars()):
            return False
    return True


def _reduce(exist: Sequence[str], atoms_: Sequence[FOAtom], univ: Sequence[str]):
    """Substitute away existentials equated to other variables (Eq is identity)."""
    parent: dict[str, str] = {}

    def find(v):
        while parent.get(v, v) != v:
            v = parent[v]
        return v

    keep = []
    for x in atoms_:
        if x.kind == "Eq":
            a, b = find(x.a), find(x.b)
            if a == b:
                continue
            if a in exist:
                parent[a] = b
            elif b in exist:
                parent[b] = a
            else:
                keep.append(FOAtom("Eq", a, b))
        else:
            keep.append(x)
    out = []
    for x in keep:
        y = FOAtom(x.kind, find(x.a), find(x.b)) if x.kind in ("R", "Eq") else x
        if y not in out and not (y.kind == "Eq" and y.a == y.b):
            out.append(y)
    used = {v for x in out for v in x.vars()}
    return [v for v in exist if v in used and find(v) == v], out


def eval_geometric_batch(a: GeometricAxiom, rel: np.ndarray) -> np.ndarray:
    """Geometric axiom on every frame via tensor contraction.

    Each conjunction of atoms becomes an einsum over the frame axis and one
    axis per variable; existential axes are summed out, a positive count
    meaning the conjunction is satisfiable. Frames are processed in chunks to
    bound the size of intermediates.
    """
    F, n, _ = rel.shape
    if a.top:
        return np.ones(F, dtype=bool)
    univ = list(a.universal)
    ante_ex, ante = _reduce((), a.antecedent, univ)
    parts = [(ante_ex, ante, False)]
    for d in a.disjuncts:
        if not d.bottom and all(x.kind != "bot" for x in d.atoms):
            ex, at = _reduce(d.exist, d.atoms, univ)
            parts.append((ex, at, True))
    uni = list(range(1, len(univ) + 1))
    width = max(len(ex) for ex, _, _ in parts)
    chunk = max(1, (1 << 22) // n ** (len(uni) + width))
    eye = np.eye(n, dtype=np.float32)
    ones = np.ones(n, dtype=np.float32)
    plans: dict[int, object] = {}

    def conj(k, ex, atoms_, relf, diag):
        local = {v: i + 1 for i, v in enumerate(univ)}
        local.update({v: len(univ) + 1 + j for j, v in enumerate(ex)})
        ops = []
        for x in atoms_:
            if x.kind == "R":
                ops += [diag, [0, local[x.a]]] if x.a == x.b else [relf, [0, local[x.a], local[x.b]]]
            elif x.kind == "Eq":
                ops += [eye, [local[x.a], local[x.b]]]
        for u in uni:
            ops += [ones, [u]]
        ops += [np.ones(relf.shape[0], dtype=np.float32), [0]]
        if k not in plans:
            plans[k] = np.einsum_path(*ops, [0] + uni, optimize="greedy")[0]
        return np.einsum(*ops, [0] + uni, optimize=plans[k]) > 0

    out = np.empty(F, dtype=bool)
    for lo in range(0, F, chunk):
        relf = rel[lo:lo + chunk].astype(np.float32)
        diag = np.ascontiguousarray(np.einsum("fii->fi", relf))
        ante_v = conj(0, *parts[0][:2], relf, diag)
        cons = np.zeros_like(ante_v)
        for k, (ex, at, _) in enumerate(parts[1:], start=1):
            cons |= conj(k, ex, at, relf, diag)
        out[lo:lo + chunk] = (~ante_v | cons).reshape(relf.shape[0], -1).all(axis=1)
    return out


def eval_fo(fr: Frame, a: FOFormula | GeometricAxiom) -> bool:
    return bool(eval_fo_batch(a, frames_array([fr]))[0])


# ---------------------------------------------------------------- correspondence


@dataclass(frozen=True)
class OracleResult:
    ok: bool
    frames_checked: int
    counterexample: Frame | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "frames_checked": self.frames_checked,
                "counterexample": self.counterexample.to_json() if self.counterexample else None,
                "detail": self.detail}


def _check_bound(max_n: int):
    if not 1 <= max_n <= MAX_BOUND:
        raise BudgetExceeded(f"bound {max_n} outside [1, {MAX_BOUND}]")


FULL_BOUND = 4


def _frames(n: int, up_to_iso: bool) -> np.ndarray:
    if not up_to_iso and n > FULL_BOUND:
        raise BudgetExceeded(f"all frames of size {n} exceed the budget; check up to isomorphism")
    return iso_frames(n) if up_to_iso else all_frames(n)


def _sentence(a: FOFormula | GeometricAxiom) -> FOFormula | GeometricAxiom:
    fv = free_vars(a.to_formula() if isinstance(a, GeometricAxiom) else a)
    if fv:
        raise ValueError(f"free variables {sorted(fv)} in first-order condition")
    return a


def corresponds(f: FormulaLike, a: FOFormula | GeometricAxiom | Sequence,
                max_n: int = 3, up_to_iso: bool = False, max_atoms: int = 2) -> OracleResult:
    """Check that ``f`` is valid on exactly the frames satisfying ``a``, for all sizes up to ``max_n``.

    A sequence of conditions is read as their conjunction.
    """
    _check_bound(max_n)
    f = as_formula(f)
    conds = list(a) if isinstance(a, (list, tuple)) else [a]
    for c in conds:
        _sentence(c)
    checked = 0
    for n in range(1, max_n + 1):
        rel = _frames(n, up_to_iso)
        modal = validity_mask(f, rel, max_atoms=max_atoms)
        fo = np.ones(rel.shape[0], dtype=bool)
        for c in conds:
            fo &= eval_fo_batch(c, rel)
        bad = np.nonzero(modal != fo)[0]
        checked += rel.shape[0]
        if bad.size:
            fr = Frame.from_matrix(rel[bad[0]])
            which = "validates the formula but fails the condition" if modal[bad[0]] else \
                "satisfies the condition but refutes the formula"
            return OracleResult(False, checked, fr, f"frame {fr} {which}")
    return OracleResult(True, checked)


def fo_equivalent(a: FOFormula | GeometricAxiom, b: FOFormula | GeometricAxiom,
                  max_n: int = 3, up_to_iso: bool = False) -> OracleResult:
    _check_bound(max_n)
    _sentence(a)
    _sentence(b)
    checked = 0
    for n in range(1, max_n + 1):
        rel = _frames(n, up_to_iso)
        bad = np.nonzero(eval_fo_batch(a, rel) != eval_fo_batch(b, rel))[0]
        checked += rel.shape[0]
        if bad.size:
            fr = Frame.from_matrix(rel[bad[0]])
            return OracleResult(False, checked, fr, f"frame {fr} separates the conditions")
    return OracleResult(True, checked)


def modal_equivalent(f: FormulaLike, g: FormulaLike, max_n: int = 3, max_atoms: int = 2) -> OracleResult:
    """Pointwise equivalence on every model of size up to ``max_n``."""
    _check_bound(max_n)
    f, g = as_formula(f), as_formula(g)
    names = sorted(set(atoms(f)) | set(atoms(g)))
    if len(names) > max_atoms:
        raise BudgetExceeded(f"{len(names)} atoms exceeds budget {max_atoms}")
    checked = 0
    for n in range(1, max_n + 1):
        rel = all_frames(n)
        worlds = np.arange(n)
        for combo in itertools.product(range(1 << n), repeat=len(names)):
            val = {p: ((mask >> worlds) & 1).astype(bool) for p, mask in zip(names, combo)}
            diff = eval_modal_batch(f, rel, val) != eval_modal_batch(g, rel, val)
            bad = np.nonzero(diff.any(axis=1))[0]
            if bad.size:
                fr = Frame.from_matrix(rel[bad[0]])
                return OracleResult(False, checked + rel.shape[0], fr,
                                    f"models on {fr} separate the formulas")
        checked += rel.shape[0]
    return OracleResult(True, checked)
