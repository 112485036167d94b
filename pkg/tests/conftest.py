import os

from hypothesis import HealthCheck, settings, strategies as st

from massa.formula import And, Atom, Bot, Box, Dia, Imp, Neg, Or, Top

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ATOMS = st.sampled_from(["p", "q"]).map(Atom)


def formulas(max_leaves: int = 8, atoms=ATOMS):
    leaves = st.one_of(atoms, st.just(Bot()), st.just(Top()))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            sub.map(Neg), sub.map(Box), sub.map(Dia),
            st.builds(And, sub, sub), st.builds(Or, sub, sub), st.builds(Imp, sub, sub),
        ),
        max_leaves=max_leaves,
    )


def _seq_key(s, m):
    rel = set()
    for r in s.rel:
        a, b = m[r.a], m[r.b]
        rel.add(("Eq", *sorted((a, b))) if r.kind == "Eq" else ("R", a, b))
    return (frozenset(rel), frozenset((m[f.label], f.formula) for f in s.left),
            frozenset((m[f.label], f.formula) for f in s.right))


def same_sequent(a, b) -> bool:
    """Set-equality of two sequents up to a bijective renaming of labels."""
    import itertools
    la, lb = sorted(a.labels()), sorted(b.labels())
    if len(la) != len(lb):
        return False
    target = _seq_key(b, {l: l for l in lb})
    return any(_seq_key(a, dict(zip(la, perm))) == target for perm in itertools.permutations(lb))


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, secs = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.2f}s)")
