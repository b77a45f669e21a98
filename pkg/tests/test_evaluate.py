from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idforge.evaluate import (
    PairConfusion,
    SyntheticCorpusSpec,
    compare_resolutions,
    generate_synthetic_corpus,
    pair_confusion,
    precision_recall,
    rater_agreement,
    splitting_lumping,
)
from idforge.forest import LabeledPair
from idforge.ingest import IdentityTable
from oracles import pair_metrics_bruteforce


def test_pair_confusion_identical():
    part = {"a": 0, "b": 0, "c": 1}
    c = pair_confusion(part, part)
    assert c.fp == 0 and c.fn == 0
    assert c.total == 3


def test_pair_confusion_example():
    golden = {"a": 0, "b": 0, "c": 0, "d": 1}
    predicted = {"a": 0, "b": 0, "c": 1, "d": 2}
    c = pair_confusion(predicted, golden)
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 2, 0, 3)


def test_pair_confusion_all_lumped():
    n = 6
    golden = {i: i for i in range(n)}
    predicted = {i: 0 for i in range(n)}
    c = pair_confusion(predicted, golden)
    assert c.fp == n * (n - 1) // 2


def test_pair_confusion_universe_mismatch():
    with pytest.raises(ValueError):
        pair_confusion({"a": 0}, {"b": 0})


partitions = st.integers(min_value=1, max_value=25).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 5), min_size=n, max_size=n),
        st.lists(st.integers(0, 5), min_size=n, max_size=n),
    )
)


@settings(max_examples=120)
@given(partitions)
def test_pair_confusion_matches_bruteforce(case):
    pred_labels, gold_labels = case
    predicted = dict(enumerate(pred_labels))
    golden = dict(enumerate(gold_labels))
    c = pair_confusion(predicted, golden)
    assert (c.tp, c.fp, c.fn, c.tn) == pair_metrics_bruteforce(predicted, golden)
    assert c.total == len(predicted) * (len(predicted) - 1) // 2


def test_precision_recall_examples():
    assert precision_recall(PairConfusion(tp=1, fp=0, fn=2, tn=3)) == (1.0, 1 / 3)
    assert precision_recall(PairConfusion(tp=5, fp=0, fn=0, tn=0)) == (1.0, 1.0)
    p, r = precision_recall(PairConfusion(tp=0, fp=0, fn=2, tn=1))
    assert p is None and r == 0.0


def test_splitting_lumping_examples():
    s, l = splitting_lumping(PairConfusion(tp=1, fp=0, fn=2, tn=3))
    assert s == pytest.approx(2 / 3) and l == 0.0
    assert splitting_lumping(PairConfusion(tp=4, fp=0, fn=0, tn=0)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        splitting_lumping(PairConfusion(tp=0, fp=3, fn=0, tn=1))


@settings(max_examples=60)
@given(partitions)
def test_splitting_plus_recall_is_one(case):
    pred_labels, gold_labels = case
    predicted = dict(enumerate(pred_labels))
    golden = dict(enumerate(gold_labels))
    c = pair_confusion(predicted, golden)
    if c.tp + c.fn == 0:
        return
    splitting, _ = splitting_lumping(c)
    _, recall = precision_recall(c)
    assert splitting + recall == pytest.approx(1.0)


def test_compare_resolutions_identical():
    part = {i: i % 3 for i in range(9)}
    report = compare_resolutions(part, dict(part))
    assert report.a_vs_b["splitting"] == 0.0
    assert report.b_vs_a["lumping"] == 0.0
    assert report.entities_a == report.entities_b == 3


def test_compare_resolutions_single_merge():
    singletons = {i: i for i in range(4)}
    merged = {0: 0, 1: 0, 2: 2, 3: 3}
    report = compare_resolutions(singletons, merged)
    assert report.a_vs_b["splitting"] == 1.0  # A splits B's only true pair
    assert report.entities_b == 3
    assert report.samples_a_splits == [(0, 1)]


def test_compare_resolutions_entity_counts():
    a = {i: i % 6 for i in range(12)}
    b = {i: i % 8 for i in range(12)}
    report = compare_resolutions(a, b)
    assert report.entities_a == 6
    assert report.entities_b == 8


def test_compare_resolutions_coverage():
    with pytest.raises(ValueError):
        compare_resolutions({1: 0}, {1: 0, 2: 0})
    with pytest.raises(ValueError):
        compare_resolutions({1: 0}, {1: 0}, universe={1, 2})


def test_rater_agreement_thresholds():
    labels = [
        LabeledPair(0, 1, 1.0, rater="r1"),
        LabeledPair(0, 1, 0.7, rater="r2"),  # thresholds to 1: agree
        LabeledPair(0, 2, 0.0, rater="r1"),
        LabeledPair(0, 2, 0.9, rater="r2"),  # disagree
        LabeledPair(0, 3, 1.0, rater="r1"),  # only one rater: ignored
        LabeledPair(0, 2, 0.0, rater="r2"),  # r2 rejudges: latest wins -> agree
    ]
    report = rater_agreement(labels, "r1", "r2")
    assert report["pairs_compared"] == 2
    assert report["agreements"] == 2
    assert report["disagreements"] == 0


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------


def test_zero_rates_give_singletons():
    corpus = generate_synthetic_corpus(SyntheticCorpusSpec(developers=10, seed=1))
    assert len(corpus.golden) == 10
    assert sorted(corpus.golden.values()) == list(range(10))
    assert corpus.homonyms == {}


def test_typo_rate_one_gives_pairs():
    corpus = generate_synthetic_corpus(SyntheticCorpusSpec(developers=10, typo=1.0, seed=2))
    by_entity = {}
    for author, entity in corpus.golden.items():
        by_entity.setdefault(entity, []).append(author)
    assert len(by_entity) == 10
    assert all(len(v) == 2 for v in by_entity.values())


def test_org_alias_creates_homonym():
    corpus = generate_synthetic_corpus(
        SyntheticCorpusSpec(developers=6, org_alias=1.0, seed=3)
    )
    assert corpus.homonyms
    for author, entities in corpus.homonyms.items():
        assert len(entities) >= 2
        assert author not in corpus.golden


def test_same_seed_byte_identical():
    spec = SyntheticCorpusSpec(developers=20, typo=0.5, env_switch=0.5, seed=9)
    a = generate_synthetic_corpus(spec)
    b = generate_synthetic_corpus(spec)
    assert [c.to_ndjson() for c in a.commits] == [c.to_ndjson() for c in b.commits]
    assert a.golden == b.golden and a.homonyms == b.homonyms
    c = generate_synthetic_corpus(SyntheticCorpusSpec(developers=20, typo=0.5, env_switch=0.5, seed=10))
    assert [x.to_ndjson() for x in c.commits] != [x.to_ndjson() for x in a.commits]


def test_every_alias_traces_to_one_developer(small_corpus):
    # golden is a function: each author string names exactly one entity
    assert len(small_corpus.golden) == len(set(small_corpus.golden))
    for author in small_corpus.homonyms:
        assert author not in small_corpus.golden
    # and every commit's author is accounted for
    known = set(small_corpus.golden) | set(small_corpus.homonyms)
    assert {c.author_string for c in small_corpus.commits} <= known


def test_golden_id_partition_excludes_homonyms(small_corpus):
    table = IdentityTable.from_commits(small_corpus.commits)
    part = small_corpus.golden_id_partition(table)
    homonym_ids = {
        table.by_author(a).id for a in small_corpus.homonyms if a in table
    }
    assert not (set(part) & homonym_ids)


def test_rate_validation():
    with pytest.raises(ValueError):
        SyntheticCorpusSpec(developers=5, typo=1.5)
    with pytest.raises(ValueError):
        SyntheticCorpusSpec(developers=0)
