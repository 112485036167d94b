"""Seeded random definite analytic inductive formulas."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .classify import AnalyticInductive, classify
from .formula import And, Atom, Box, Dia, Formula, Neg, Or, size


@dataclass(frozen=True)
class CorpusConfig:
    count: int = 200
    seed: int = 0
    atoms: tuple[str, ...] = ("p", "q")
    skeleton_depth: int = 3
    pia_depth: int = 2
    max_tries: int = 100_000


def _literal(rng: random.Random, cfg: CorpusConfig, negative: bool) -> Formula:
    a = Atom(rng.choice(cfg.atoms))
    return Neg(a) if negative else a


def random_pia(rng: random.Random, cfg: CorpusConfig, depth: int, negatives: int) -> Formula:
    """A PIA formula with exactly ``negatives`` (0 or 1) negative literals."""
    if depth == 0 or rng.random() < 0.3:
        return _literal(rng, cfg, negatives == 1)
    if rng.random() < 0.5:
        return Dia(random_pia(rng, cfg, depth - 1, negatives))
    left_neg = negatives if rng.random() < 0.5 else 0
    return And(random_pia(rng, cfg, depth - 1, left_neg),
               random_pia(rng, cfg, depth - 1, negatives - left_neg))


def random_skeleton(rng: random.Random, cfg: CorpusConfig, depth: int) -> Formula:
    if depth == 0 or rng.random() < 0.25:
        return random_pia(rng, cfg, cfg.pia_depth, int(rng.random() < 0.6))
    if rng.random() < 0.4:
        return Box(random_skeleton(rng, cfg, depth - 1))
    return Or(random_skeleton(rng, cfg, depth - 1), random_skeleton(rng, cfg, depth - 1))


def generate(cfg: CorpusConfig = CorpusConfig()) -> list[Formula]:
    """Distinct formulas accepted by the classifier as definite analytic inductive.

    Rejected draws (dependency cycles, non-definite shapes) are discarded, so
    the output is deterministic for a given configuration.
    """
    rng = random.Random(cfg.seed)
    out: list[Formula] = []
    seen = set()
    for _ in range(cfg.max_tries):
        if len(out) >= cfg.count:
            break
        f = random_skeleton(rng, cfg, cfg.skeleton_depth)
        if f in seen or size(f) < 3:
            continue
        c = classify(f)
        if isinstance(c, AnalyticInductive) and c.definite:
            seen.add(f)
            out.append(f)
    return out
