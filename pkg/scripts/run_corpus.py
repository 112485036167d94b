"""Run MASSA over a seeded random corpus and summarise the outcome.

    python scripts/run_corpus.py --count 200 --seed 0 --bound 3 --out corpus.jsonl
"""

import argparse
import json
import re
import time
from collections import Counter

from massa.algorithm import run
from massa.calculus import check_proof
from massa.corpus import CorpusConfig, generate
from massa.fo import validate_geometric
from massa.formula import to_ascii
from massa.semantics import corresponds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--atoms", default="pq")
    ap.add_argument("--bound", type=int, default=3)
    ap.add_argument("--out", help="write one JSON record per formula")
    args = ap.parse_args()

    cfg = CorpusConfig(count=args.count, seed=args.seed, atoms=tuple(args.atoms))
    t0 = time.perf_counter()
    formulas = generate(cfg)
    tally = Counter()
    names = Counter()
    records = []
    for f in formulas:
        out = run(f)
        rec = {"formula": to_ascii(f), "ok": out.ok}
        if out.ok:
            rep = check_proof(out.derivation, out.rules)
            geometric = all(validate_geometric(p.axiom) == [] for p in out.parts)
            corr = corresponds(f, [p.axiom for p in out.parts], max_n=args.bound,
                               max_atoms=len(args.atoms)).ok
            rec.update(checked=rep.ok and rep.cut_free, geometric=geometric, corresponds=corr,
                       axiom=" & ".join(str(p.axiom) for p in out.parts))
            tally.update(success=1, checked=rec["checked"], geometric=geometric, corresponds=corr)
            names.update(r.name for r in out.rules)
        else:
            rec.update(stage=out.stage, reason=out.reason)
        records.append(rec)
    secs = time.perf_counter() - t0

    n = len(formulas)
    print(f"{n} formulas (seed {args.seed}, atoms {args.atoms}) in {secs:.1f}s")
    for key in ("success", "checked", "geometric", "corresponds"):
        print(f"  {key:<12} {tally[key]:>4}/{n}")
    print("  named rules:", ", ".join(f"{k} x{v}" for k, v in names.most_common() if not re.fullmatch(r"r\d*", k)) or "none")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")


if __name__ == "__main__":
    main()
