"""Command-line front end.

Exit codes: 0 success, 1 not analytic inductive (``classify``), 2 parse or
usage error, 3 MASSA failure, 4 correspondence counterexample.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import calculus as C
from .algorithm import Failure, MassaOutput, run
from .classify import AnalyticInductive, classify
from .fo import FOParseError, axiom_unicode, fo_ascii, parse_fo
from .formula import ParseError, parse, to_ascii
from .render import ascii_tree, latex_document, use_colour
from .semantics import MAX_BOUND, BudgetExceeded, all_frames, corresponds, iso_frames

OK, NOT_AI, PARSE, FAILED, COUNTER = 0, 1, 2, 3, 4

_STAGES = {
    "cuts": "atomic cuts", "forward": "forward chaining", "backward": "backward chaining",
    "merge": "chaining (no merging point)", "rule": "rule emission", "assemble": "assembly",
}


@dataclass
class Invocation:
    command: str
    formula: str | None = None
    file: str | None = None
    fmt: str = "text"
    verify: int = 0
    bound: int = 3
    iso: bool | None = None
    max_atoms: int = 2
    seed: int | None = None
    count: int = 20
    lines: list[str] | None = None

    def batch(self) -> bool:
        return self.formula is None

    def up_to_iso(self, n: int) -> bool:
        return self.iso if self.iso is not None else n > 3


def _bound(text: str) -> int:
    n = int(text)
    if not 0 <= n <= MAX_BOUND:
        raise argparse.ArgumentTypeError(f"bound must be between 0 and {MAX_BOUND}")
    return n


def _report_parse(e: SyntaxError, text: str):
    print(f"parse error: {e}", file=sys.stderr)
    off = getattr(e, "offset", None)
    if isinstance(off, int) and "\n" not in text:
        col = len(text.encode()[:off].decode(errors="ignore"))
        print(f"  {text}\n  {' ' * col}^", file=sys.stderr)


def _out(obj):
    print(json.dumps(obj, ensure_ascii=False))


# ---------------------------------------------------------------- classify

def classify_one(text: str) -> tuple[int, dict]:
    try:
        f = parse(text)
    except ParseError as e:
        return PARSE, {"input": text, "error": str(e), "offset": e.offset}
    c = classify(f)
    return (OK if isinstance(c, AnalyticInductive) else NOT_AI), {"input": text, **c.to_json()}


def _classify_text(d: dict) -> str:
    if d["status"] != "analytic_inductive":
        return f"{d['status'].replace('_', ' ')}: {d.get('reason', '')}"
    kind = "analytic Sahlqvist" if d["sahlqvist"] else "analytic inductive"
    lines = [f"{kind}, {'definite' if d['definite'] else 'not definite'}"]
    for i, c in enumerate(d["conjuncts"]):
        lines.append(f"  conjunct {i + 1}: skeleton {c['skeleton']}")
        for b in c["betas"]:
            lines.append(f"    beta {b['formula']} at {b['placeholder']}, critical {b['critical']}")
        for x in c["deltas"]:
            lines.append(f"    delta {x['formula']} at {x['placeholder']}")
        if c.get("omega"):
            lines.append("    omega " + ", ".join(f"{e['lower']} < {e['upper']}" for e in c["omega"]))
    return "\n".join(lines)


def cmd_classify(inv: Invocation, text: str) -> int:
    code, d = classify_one(text)
    if code == PARSE:
        _report_parse(_reparse(text), text)
    elif inv.fmt == "json":
        _out(d)
    else:
        print(_classify_text(d))
    return code


def _reparse(text: str) -> SyntaxError:
    try:
        parse(text)
    except ParseError as e:
        return e
    raise AssertionError("input parsed")


# ---------------------------------------------------------------- run / derive

def _verify(inv: Invocation, res: MassaOutput) -> dict:
    n = inv.verify
    r = corresponds(res.formula, res.axioms, max_n=n, up_to_iso=inv.up_to_iso(n),
                    max_atoms=inv.max_atoms)
    return {"bound": n, "up_to_iso": inv.up_to_iso(n), **r.to_json()}


def run_one(inv: Invocation, text: str) -> tuple[int, dict, MassaOutput | Failure | None]:
    try:
        f = parse(text)
    except ParseError as e:
        return PARSE, {"input": text, "status": "parse_error", "error": str(e), "offset": e.offset}, None
    res = run(f)
    d = {"input": text, **res.to_json()}
    if not res.ok:
        return FAILED, d, res
    if inv.verify:
        try:
            d["verification"] = _verify(inv, res)
        except BudgetExceeded as e:
            d["verification"] = {"ok": False, "error": str(e)}
            return PARSE, d, res
        if not d["verification"]["ok"]:
            return COUNTER, d, res
    return OK, d, res


def _run_text(d: dict, res, colour: bool) -> str:
    if d["status"] == "failure":
        lines = [f"MASSA failed: stuck at {_STAGES.get(d['stage'], d['stage'])}", f"  {d['reason']}"]
        lines += [f"  witness: {w}" for w in d["witness"]]
        return "\n".join(lines)
    lines = []
    for p in res.parts:
        lines.append(f"formula: {to_ascii(p.formula)}")
        lines.append(f"rule: {p.rule if p.rule else 'none (closes in G3K)'}")
        lines.append(f"raw axiom: {axiom_unicode(p.raw_axiom)}")
        lines.append(f"axiom: {axiom_unicode(p.axiom)}")
        lines.append("derivation:")
        lines.append(ascii_tree(p.derivation, colour=colour, indent="  "))
    v = d.get("verification")
    if v:
        if v.get("ok"):
            scope = " up to isomorphism" if v["up_to_iso"] else ""
            lines.append(f"verified on {v['frames_checked']} frames of size <= {v['bound']}{scope}")
        else:
            lines.append(f"verification failed: {v.get('detail') or v.get('error')}")
    return "\n".join(lines)


def cmd_run(inv: Invocation, text: str) -> int:
    code, d, res = run_one(inv, text)
    if code == PARSE and res is None:
        _report_parse(_reparse(text), text)
        return code
    if inv.fmt == "json":
        _out(d)
    elif inv.fmt == "latex":
        if res is None or not res.ok:
            print(_run_text(d, res, False), file=sys.stderr)
        else:
            for p in res.parts:
                print(latex_document(p.derivation, title=to_ascii(p.formula)))
    else:
        print(_run_text(d, res, use_colour(sys.stdout)))
    return code


def recheck(d: dict) -> tuple[int, list[C.ProofTree], list[str]]:
    """Rebuild derivations from ``run --format json`` output and re-validate them."""
    if d.get("status") != "ok":
        return FAILED, [], [d.get("reason", "no derivation in input")]
    parts = d.get("parts") or [d]
    trees, problems = [], []
    for p in parts:
        tree = C.tree_from_json(p["derivation"])
        rules = [C.GeometricRule.from_json(p["rule"])] if p.get("rule") else []
        rep = C.check_proof(tree, rules)
        if not rep.ok:
            problems += [str(v) for v in rep.violations]
        if not rep.cut_free:
            problems.append("derivation contains a cut")
        trees.append(tree)
    return (FAILED if problems else OK), trees, problems


def cmd_derive(inv: Invocation, text: str) -> int:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        code, trees, problems = recheck(json.loads(stripped))
        for p in problems:
            print(f"invalid derivation: {p}", file=sys.stderr)
        if code:
            return code
    else:
        code, d, res = run_one(Invocation("run"), text)
        if code == PARSE:
            _report_parse(_reparse(text), text)
            return code
        if code == FAILED:
            print(_run_text(d, res, False), file=sys.stderr)
            return code
        trees = [p.derivation for p in res.parts]
    for t in trees:
        if inv.fmt == "latex":
            print(latex_document(t))
        elif inv.fmt == "json":
            _out(C.tree_json(t))
        else:
            print(ascii_tree(t, colour=use_colour(sys.stdout)))
    return OK


# ---------------------------------------------------------------- verify / frames

def cmd_verify(inv: Invocation, modal: str, cond: str, bound: int) -> int:
    try:
        f = parse(modal)
    except ParseError as e:
        _report_parse(e, modal)
        return PARSE
    try:
        a = parse_fo(cond)
    except FOParseError as e:
        _report_parse(e, cond)
        return PARSE
    if bound < 1:
        print("bound must be at least 1", file=sys.stderr)
        return PARSE
    try:
        r = corresponds(f, a, max_n=bound, up_to_iso=inv.up_to_iso(bound), max_atoms=inv.max_atoms)
    except (BudgetExceeded, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return PARSE
    if inv.fmt == "json":
        _out({"formula": to_ascii(f), "condition": fo_ascii(a), "bound": bound, **r.to_json()})
    elif r.ok:
        print(f"ok: {r.frames_checked} frames up to size {bound}")
    else:
        print(f"counterexample: {r.detail}")
    return OK if r.ok else COUNTER


def cmd_frames(inv: Invocation, bound: int) -> int:
    if bound < 1:
        print("bound must be at least 1", file=sys.stderr)
        return PARSE
    iso = inv.up_to_iso(bound)
    counts = {}
    for n in range(1, bound + 1):
        try:
            counts[n] = int((iso_frames(n) if iso else all_frames(n)).shape[0])
        except (BudgetExceeded, MemoryError) as e:
            print(f"error: {e}", file=sys.stderr)
            return PARSE
    if inv.fmt == "json":
        _out({"bound": bound, "up_to_iso": iso, "counts": counts, "total": sum(counts.values())})
    else:
        for n, k in counts.items():
            print(f"size {n}: {k}")
        print(f"total: {sum(counts.values())}" + (" (up to isomorphism)" if iso else ""))
    return OK


# ---------------------------------------------------------------- batch

def _clean(lines) -> list[str]:
    return [l.strip() for l in lines if l.strip() and not l.lstrip().startswith("#")]


def _lines(inv: Invocation):
    if inv.lines is not None:
        yield from inv.lines
        return
    if inv.seed is not None:
        from .corpus import CorpusConfig, generate
        atoms = tuple("pqrs"[:max(1, min(inv.max_atoms, 4))])
        yield from (to_ascii(f) for f in generate(CorpusConfig(count=inv.count, seed=inv.seed, atoms=atoms)))
        return
    src = sys.stdin if inv.file == "-" else open(inv.file, encoding="utf-8")
    with src:
        yield from _clean(src)


def cmd_batch(inv: Invocation) -> int:
    """One JSON object per input line; the exit code is the largest per-line code."""
    worst = OK
    for text in _lines(inv):
        if inv.command == "classify":
            code, d = classify_one(text)
        else:
            code, d, _ = run_one(inv, text)
            if inv.command == "derive" and code == OK:
                d = {"input": text, "derivation": d["derivation"]}
        d["exit"] = code
        _out(d)
        worst = max(worst, code)
    return worst


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="massa", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json", "latex")):
        p.add_argument("--format", dest="fmt", choices=formats, default="text")
        p.add_argument("--max-atoms", type=int, default=2)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--iso", dest="iso", action="store_true", default=None,
                       help="check frames up to isomorphism (default above size 3)")
        g.add_argument("--all-frames", dest="iso", action="store_false")

    def source(p):
        p.add_argument("formula", nargs="?")
        p.add_argument("--file", help="one formula per line ('-' for stdin); JSON-lines output")
        p.add_argument("--seed", type=int, help="run a generated corpus instead of an input")
        p.add_argument("--count", type=int, default=20)

    p = sub.add_parser("classify", help="analytic inductive / Sahlqvist check")
    source(p)
    common(p, ("text", "json"))
    p = sub.add_parser("run", help="run MASSA and read off the frame condition")
    source(p)
    common(p)
    p.add_argument("--verify", type=_bound, default=0, metavar="N")
    p = sub.add_parser("derive", help="render or re-check a derivation ('-' reads stdin)")
    source(p)
    common(p)
    p = sub.add_parser("verify", help="check a modal formula against a first-order condition")
    p.add_argument("formula")
    p.add_argument("condition")
    p.add_argument("bound", type=_bound, nargs="?")
    p.add_argument("--bound", dest="bound_flag", type=_bound)
    common(p, ("text", "json"))
    p = sub.add_parser("frames", help="count the frames the oracle enumerates")
    p.add_argument("bound", type=_bound, nargs="?")
    p.add_argument("--bound", dest="bound_flag", type=_bound)
    common(p, ("text", "json"))
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return PARSE if e.code else OK
    inv = Invocation(ns.command, getattr(ns, "formula", None), getattr(ns, "file", None), ns.fmt,
                     getattr(ns, "verify", 0), iso=ns.iso, max_atoms=ns.max_atoms,
                     seed=getattr(ns, "seed", None), count=getattr(ns, "count", 20))
    if ns.command in ("verify", "frames"):
        bound = ns.bound_flag if ns.bound_flag is not None else ns.bound
        bound = 3 if bound is None else bound
        if ns.command == "verify":
            return cmd_verify(inv, ns.formula, ns.condition, bound)
        return cmd_frames(inv, bound)
    sources = sum(x is not None for x in (inv.formula, inv.file, inv.seed))
    if sources != 1:
        print("give exactly one of: a formula, --file, --seed", file=sys.stderr)
        return PARSE
    if inv.formula == "-":
        text = sys.stdin.read()
        if ns.command == "derive" and text.lstrip().startswith("{"):
            return cmd_derive(inv, text)
        lines = _clean(text.splitlines())
        if len(lines) == 1:
            inv.formula = lines[0]
        else:
            inv.formula, inv.lines = None, lines
    if inv.batch():
        return cmd_batch(inv)
    return {"classify": cmd_classify, "run": cmd_run, "derive": cmd_derive}[ns.command](inv, inv.formula)


if __name__ == "__main__":
    sys.exit(main())
