"""Print rule, axioms and oracle verdict for the standard examples."""

import sys

from massa.algorithm import run
from massa.render import ascii_tree
from massa.semantics import corresponds

EXAMPLES = [
    "box p -> dia p",
    "box p -> p",
    "box p -> box box p",
    "p -> box dia p",
    "dia p -> box dia p",
    "dia p -> box p",
    "dia box p -> box dia p",
    "box(box p -> q) | box(box q -> p)",
    "box(p -> q) -> (box p -> box q)",
    "box dia p -> dia box p",
    "p -> dia box p",
]


def main(trees=False):
    for text in EXAMPLES:
        out = run(text)
        print(text)
        if not out.ok:
            print(f"  fails at {out.stage}: {out.reason}")
            continue
        for p in out.parts:
            name = p.rule.name if p.rule else "-"
            print(f"  rule     {name}")
            print(f"  raw      {p.raw_axiom}")
            print(f"  axiom    {p.axiom}")
        res = corresponds(text, [p.axiom for p in out.parts], max_n=4, up_to_iso=True)
        print(f"  oracle   {'ok' if res.ok else res.detail} ({res.frames_checked} frames up to iso)")
        if trees:
            print(ascii_tree(out.derivation, indent="    "))
        print()


if __name__ == "__main__":
    main(trees="--trees" in sys.argv)
