from massa.classify import AnalyticInductive, classify
from massa.corpus import CorpusConfig, generate
from massa.formula import atoms, size


def test_deterministic():
    cfg = CorpusConfig(count=25, seed=7)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(CorpusConfig(count=25, seed=8))


def test_distinct_definite_and_within_atoms():
    fs = generate(CorpusConfig(count=60, seed=2, atoms=("p", "q", "r")))
    assert len(fs) == 60 == len(set(fs))
    for f in fs:
        c = classify(f)
        assert isinstance(c, AnalyticInductive) and c.definite
        assert set(atoms(f)) <= {"p", "q", "r"} and size(f) >= 3


def test_prefix_stable():
    assert generate(CorpusConfig(count=30, seed=4))[:10] == generate(CorpusConfig(count=10, seed=4))
