"""The confusion-region loop: train fold classifiers, queue their
disagreements for human judgment, ingest labels, retrain, repeat.

Labels live in an append-only NDJSON journal; replaying the journal
reconstructs the store bit-exactly, and the latest judgment per rater
wins. The queue orders pairs by model uncertainty (probability nearest
0.5 first) and carries the display bundle a human rater needs: both
identities, commit date ranges, the feature values, fold votes, and the
blended probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .forest import ForestModel, ForestParams, LabeledPair, predict_proba, train_forest
from .ingest import CommitRecord, IdentityTable
from .pairgen import PairFeatures

PairKey = tuple[int, int]


class InsufficientLabels(ValueError):
    pass


def pair_key(id1: int, id2: int) -> PairKey:
    return (id1, id2) if id1 < id2 else (id2, id1)


# ---------------------------------------------------------------------------
# Label store + journal
# ---------------------------------------------------------------------------


class LabelStore:
    """Append-only label journal with latest-per-rater semantics."""

    def __init__(self, journal: TextIO | None = None) -> None:
        self._journal = journal
        self._by_pair: dict[PairKey, dict[str, LabeledPair]] = {}
        self._latest: dict[PairKey, LabeledPair] = {}
        self._events: list[LabeledPair] = []

    def __len__(self) -> int:
        return len(self._by_pair)

    def __contains__(self, key: PairKey) -> bool:
        return pair_key(*key) in self._by_pair

    def record(self, label: LabeledPair) -> None:
        key = pair_key(label.id1, label.id2)
        if self._journal is not None:
            self._journal.write(
                json.dumps(
                    {
                        "id1": key[0],
                        "id2": key[1],
                        "match": label.match,
                        "canonical": label.canonical,
                        "rater": label.rater,
                        "ts": label.timestamp,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            self._journal.flush()
        self._by_pair.setdefault(key, {})[label.rater] = label
        self._latest[key] = label
        self._events.append(label)

    def latest(self, key: PairKey) -> LabeledPair | None:
        return self._latest.get(pair_key(*key))

    def events(self) -> list[LabeledPair]:
        return list(self._events)

    def pairs(self) -> list[PairKey]:
        return sorted(self._by_pair)

    def training_labels(self) -> dict[PairKey, int]:
        """Latest judgment per pair, thresholded at 0.5 (ties up)."""
        return {key: lp.label() for key, lp in self._latest.items()}

    @classmethod
    def replay(cls, fh: TextIO, journal: TextIO | None = None) -> "LabelStore":
        """Rebuild a store from a journal; an incomplete trailing line
        (crash mid-write) is ignored."""
        store = cls(journal=journal)
        for raw in fh:
            if not raw.endswith("\n"):
                break
            line = raw.strip()
            if not line:
                continue
            event = json.loads(line)
            store._apply(
                LabeledPair(
                    id1=event["id1"],
                    id2=event["id2"],
                    match=event["match"],
                    canonical=event.get("canonical"),
                    rater=event.get("rater", ""),
                    timestamp=event.get("ts", 0.0),
                )
            )
        return store

    def _apply(self, label: LabeledPair) -> None:
        key = pair_key(label.id1, label.id2)
        self._by_pair.setdefault(key, {})[label.rater] = label
        self._latest[key] = label
        self._events.append(label)


# ---------------------------------------------------------------------------
# Confusion region
# ---------------------------------------------------------------------------


def vote_disagreement(votes: np.ndarray) -> np.ndarray:
    """Row mask: True iff the m classifier votes are not unanimous.

    For m = 3 this admits exactly the 2^3 - 2 mixed patterns and excludes
    (Link, Link, Link) and (No-Link, No-Link, No-Link).
    """
    votes = np.asarray(votes, dtype=bool)
    return votes.any(axis=1) & ~votes.all(axis=1)


def _partition_stratified(
    y: np.ndarray, m: int, seed: int
) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in range(m)]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < m:
            raise InsufficientLabels(
                f"need at least {m} labeled examples of class {cls} to train "
                f"{m} fold classifiers, got {len(idx)}"
            )
        idx = idx[rng.permutation(len(idx))]
        for i, row in enumerate(idx):
            parts[i % m].append(int(row))
    return [np.sort(np.array(p)) for p in parts]


def train_fold_classifiers(
    X_labeled: np.ndarray,
    y_labeled: np.ndarray,
    m: int = 3,
    params: ForestParams = ForestParams(),
) -> list[ForestModel]:
    """m forests on disjoint stratified partitions of the labeled data."""
    if m < 2:
        raise ValueError("need at least 2 fold classifiers")
    parts = _partition_stratified(y_labeled, m, params.seed)
    models = []
    for i, part in enumerate(parts):
        models.append(
            train_forest(
                X_labeled[part], y_labeled[part], replace(params, seed=params.seed + 1 + i)
            )
        )
    return models


def confusion_region(
    unlabeled_keys: Sequence[PairKey],
    X_unlabeled: np.ndarray,
    models: Sequence[ForestModel],
    threshold: float | None = None,
) -> tuple[list[PairKey], np.ndarray, np.ndarray]:
    """Pairs on which the fold classifiers disagree.

    Returns (region keys, votes matrix, mean probability per pair); a pair
    is in the region iff its votes are not unanimous.
    """
    if len(unlabeled_keys) == 0:
        return [], np.zeros((0, len(models)), dtype=bool), np.zeros(0)
    if threshold is None:
        threshold = models[0].params.link_threshold
    probs = np.stack([predict_proba(m, X_unlabeled) for m in models], axis=1)
    votes = probs >= threshold
    mask = vote_disagreement(votes)
    region = [unlabeled_keys[i] for i in np.flatnonzero(mask)]
    return region, votes, probs.mean(axis=1)


# ---------------------------------------------------------------------------
# Label queue
# ---------------------------------------------------------------------------


@dataclass
class QueueEntry:
    pair: PairKey
    features: dict[str, float]
    votes: list[bool]
    probability: float
    a1: dict
    a2: dict

    def to_json(self) -> dict:
        return {
            "pair_id": f"{self.pair[0]}-{self.pair[1]}",
            "a1": self.a1,
            "a2": self.a2,
            "features": self.features,
            "votes": [bool(v) for v in self.votes],
            "probability": self.probability,
        }


@dataclass
class LabelQueue:
    entries: list[QueueEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: PairKey) -> bool:
        key = pair_key(*key)
        return any(e.pair == key for e in self.entries)

    def head(self, limit: int | None = None) -> list[QueueEntry]:
        return list(self.entries) if limit is None else self.entries[:limit]

    def remove(self, key: PairKey) -> bool:
        key = pair_key(*key)
        before = len(self.entries)
        self.entries = [e for e in self.entries if e.pair != key]
        return len(self.entries) < before


def identity_display(
    ident, commit_spans: Mapping[int, tuple[int, int]] | None = None,
    affiliations: Mapping[str, str] | None = None,
) -> dict:
    out = {"id": ident.id, "author": ident.author, "name": ident.name, "email": ident.email}
    if affiliations and ident.author in affiliations:
        out["affiliation"] = affiliations[ident.author]
    if commit_spans and ident.id in commit_spans:
        first, last = commit_spans[ident.id]
        out["first_commit"] = first
        out["last_commit"] = last
    return out


def commit_spans(commits: Iterable[CommitRecord], table: IdentityTable) -> dict[int, tuple[int, int]]:
    spans: dict[int, tuple[int, int]] = {}
    for commit in commits:
        aid = table.by_author(commit.author_string).id
        first, last = spans.get(aid, (commit.timestamp, commit.timestamp))
        spans[aid] = (min(first, commit.timestamp), max(last, commit.timestamp))
    return spans


def enqueue_for_labeling(
    region: Sequence[PairKey],
    features_by_pair: Mapping[PairKey, PairFeatures],
    feature_names: Sequence[str],
    votes_by_pair: Mapping[PairKey, Sequence[bool]],
    prob_by_pair: Mapping[PairKey, float],
    table: IdentityTable,
    spans: Mapping[int, tuple[int, int]] | None = None,
    affiliations: Mapping[str, str] | None = None,
) -> LabelQueue:
    """Queue ordered by uncertainty: probability nearest 0.5 first.
    Duplicate submissions collapse to a single entry."""
    queue = LabelQueue()
    seen: set[PairKey] = set()
    normalized = [pair_key(*k) for k in region]
    ordered = sorted(normalized, key=lambda k: (abs(prob_by_pair[k] - 0.5), k))
    for key in ordered:
        if key in seen:
            continue
        seen.add(key)
        pf = features_by_pair[key]
        queue.entries.append(
            QueueEntry(
                pair=key,
                features=dict(zip(feature_names, pf.values)),
                votes=list(votes_by_pair[key]),
                probability=float(prob_by_pair[key]),
                a1=identity_display(table.by_id(key[0]), spans, affiliations),
                a2=identity_display(table.by_id(key[1]), spans, affiliations),
            )
        )
    return queue


def record_label(
    queue: LabelQueue,
    store: LabelStore,
    key: PairKey,
    match: float,
    canonical: int | None,
    rater: str,
    table: IdentityTable,
    timestamp: float = 0.0,
) -> None:
    """Append a judgment and dequeue the pair.

    The pair must be queued or previously labeled (re-judgeable); a
    canonical, when given, must reference an existing identity.
    """
    key = pair_key(*key)
    if key not in queue and key not in store:
        raise KeyError(f"pair {key} is not queued and has no prior judgment")
    if canonical is not None and not (0 <= canonical < len(table)):
        raise ValueError(f"canonical {canonical} is not an existing identity")
    store.record(
        LabeledPair(
            id1=key[0], id2=key[1], match=match, canonical=canonical,
            rater=rater, timestamp=timestamp,
        )
    )
    queue.remove(key)


# ---------------------------------------------------------------------------
# Relabel suggestions and the loop
# ---------------------------------------------------------------------------


def relabel_suggestions(
    store: LabelStore,
    model: ForestModel,
    features_by_pair: Mapping[PairKey, PairFeatures],
    confidence: float = 0.9,
) -> list[dict]:
    """Labeled pairs where the model confidently disagrees with the label —
    in practice many such "mistakes" turn out to be labeling errors."""
    out = []
    for key, label in sorted(store.training_labels().items()):
        pf = features_by_pair.get(key)
        if pf is None:
            continue
        p = float(predict_proba(model, np.asarray(pf.values).reshape(1, -1))[0])
        if (label == 0 and p >= confidence) or (label == 1 and p <= 1.0 - confidence):
            out.append(
                {
                    "pair_id": f"{key[0]}-{key[1]}",
                    "label": label,
                    "probability": p,
                }
            )
    out.sort(key=lambda row: -abs(row["probability"] - 0.5))
    return out


@dataclass
class ActiveLearningResult:
    store: LabelStore
    model: ForestModel | None
    region_sizes: list[int]
    labels_spent: int


def iterate(
    all_keys: Sequence[PairKey],
    X: np.ndarray,
    seed_labels: LabelStore,
    labeler: Callable[[PairKey], float],
    rounds: int,
    m: int = 3,
    params: ForestParams = ForestParams(),
    feature_names: Sequence[str] | None = None,
) -> ActiveLearningResult:
    """Run the loop: train m fold classifiers on current labels, ask the
    labeler about every pair in the confusion region, repeat.

    Stops when the region empties or the round cap is hit, then trains the
    final model on everything labeled. ``labeler`` maps a pair key to a
    match probability in [0, 1] (a human behind a queue, or a golden oracle
    in tests). rounds=0 returns the seed labels and seed-trained model.
    """
    key_index = {pair_key(*k): i for i, k in enumerate(all_keys)}
    store = seed_labels
    region_sizes: list[int] = []
    labels_spent = 0

    def labeled_matrix() -> tuple[np.ndarray, np.ndarray]:
        items = sorted(store.training_labels().items())
        rows = [key_index[k] for k, _ in items if k in key_index]
        labels = [lbl for k, lbl in items if k in key_index]
        return X[rows], np.asarray(labels, dtype=np.int64)

    for round_no in range(rounds):
        X_lab, y_lab = labeled_matrix()
        models = train_fold_classifiers(X_lab, y_lab, m, replace(params, seed=params.seed + round_no))
        unlabeled = [k for k in map(lambda k: pair_key(*k), all_keys) if k not in store]
        if not unlabeled:
            region_sizes.append(0)
            break
        Xu = X[[key_index[k] for k in unlabeled]]
        region, _, _ = confusion_region(unlabeled, Xu, models)
        region_sizes.append(len(region))
        if not region:
            break
        for key in region:
            match = labeler(key)
            store.record(LabeledPair(id1=key[0], id2=key[1], match=match, rater="oracle"))
            labels_spent += 1
    X_lab, y_lab = labeled_matrix()
    final = train_forest(X_lab, y_lab, params, feature_names=feature_names)
    return ActiveLearningResult(
        store=store, model=final, region_sizes=region_sizes, labels_spent=labels_spent
    )
