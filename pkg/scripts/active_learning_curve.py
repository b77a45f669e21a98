#!/usr/bin/env python3
"""Trace the active-learning loop round by round: cumulative labels spent
vs the F1 the model would reach if training stopped there, compared with
the F1 of training on every candidate pair.

Writes a CSV (round, region_size, labels_cumulative, labels_fraction, f1,
f1_full) showing how quickly confusion-region labeling closes the gap.

Usage: python scripts/active_learning_curve.py [out.csv] [--developers N] [--seed S]
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from idforge.active import LabelStore, confusion_region, pair_key, train_fold_classifiers
from idforge.evaluate import (
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    label_candidate_pairs,
)
from idforge.fingerprints import (
    build_file_author_index,
    build_text_embeddings,
    build_timezone_vectors,
)
from idforge.forest import ForestParams, LabeledPair, predict_proba, train_forest
from idforge.ingest import IdentityTable
from idforge.pairgen import assemble_features, generate_candidate_pairs
from idforge.stats import Stoplist, build_frequency_tables


def f1_score(model, X, y) -> float:
    pred = predict_proba(model, X) >= 0.5
    truth = y == 1
    tp = int((pred & truth).sum())
    fp = int((pred & ~truth).sum())
    fn = int((~pred & truth).sum())
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("out", nargs="?", default="active_curve.csv")
    parser.add_argument("--developers", type=int, default=150)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--rounds", type=int, default=10)
    parser.add_argument("--seed-labels", type=int, default=12, help="per class")
    args = parser.parse_args()

    spec = SyntheticCorpusSpec(
        developers=args.developers, typo=0.3, env_switch=0.3, org_alias=0.05,
        template=0.05, anonymous=0.05, name_reorder=0.1, seed=args.seed,
    )
    corpus = generate_synthetic_corpus(spec)
    table = IdentityTable.from_commits(corpus.commits)
    index = build_file_author_index(corpus.commits, table)
    tzvecs = build_timezone_vectors(corpus.commits, table)
    embeddings = build_text_embeddings(corpus.commits, table, seed=args.seed)
    tables = build_frequency_tables(table.identities())
    stop = Stoplist.seed()
    candidates = generate_candidate_pairs(table.identities(), index, "blocked")
    golden_ids = corpus.golden_id_partition(table)
    kept, labels = label_candidate_pairs(candidates, golden_ids)
    truth = dict(zip(kept, labels))
    X = np.array(
        [assemble_features(k, table, tables, stop, index, tzvecs, embeddings).values for k in kept]
    )
    y = np.array(labels, dtype=np.int64)
    key_row = {k: i for i, k in enumerate(kept)}
    params = ForestParams(n_trees=100, seed=args.seed)

    print(f"{len(kept)} candidate pairs, {int(y.sum())} true links")
    full_model = train_forest(X, y, params)
    f1_full = f1_score(full_model, X, y)
    print(f"training on every pair: F1 = {f1_full:.4f}")

    rng = np.random.default_rng(args.seed)
    store = LabelStore()
    pos = [k for k in kept if truth[k] == 1]
    neg = [k for k in kept if truth[k] == 0]
    for idx in rng.choice(len(pos), size=min(args.seed_labels, len(pos)), replace=False):
        k = pos[int(idx)]
        store.record(LabeledPair(k[0], k[1], 1.0, rater="seed"))
    for idx in rng.choice(len(neg), size=min(args.seed_labels, len(neg)), replace=False):
        k = neg[int(idx)]
        store.record(LabeledPair(k[0], k[1], 0.0, rater="seed"))

    rows = []

    def snapshot(round_no: int, region_size: int) -> None:
        training = store.training_labels()
        rows_idx = [key_row[k] for k in sorted(training)]
        y_lab = np.array([training[k] for k in sorted(training)], dtype=np.int64)
        model = train_forest(X[rows_idx], y_lab, params)
        f1 = f1_score(model, X, y)
        fraction = len(training) / len(kept)
        rows.append((round_no, region_size, len(training), fraction, f1, f1_full))
        print(
            f"round {round_no}: region {region_size:5d}, labels {len(training):5d} "
            f"({fraction:.1%}), F1 {f1:.4f} (full {f1_full:.4f})"
        )

    snapshot(0, 0)
    for round_no in range(1, args.rounds + 1):
        training = store.training_labels()
        labeled = sorted(training)
        X_lab = X[[key_row[k] for k in labeled]]
        y_lab = np.array([training[k] for k in labeled], dtype=np.int64)
        unlabeled = [k for k in kept if k not in store]
        if not unlabeled:
            break
        models = train_fold_classifiers(
            X_lab, y_lab, 3, replace(params, seed=params.seed + round_no)
        )
        Xu = X[[key_row[k] for k in unlabeled]]
        region, _, _ = confusion_region(unlabeled, Xu, models)
        if not region:
            snapshot(round_no, 0)
            break
        for k in region:
            store.record(LabeledPair(k[0], k[1], float(truth[k]), rater="oracle"))
        snapshot(round_no, len(region))

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("round", "region_size", "labels_cumulative", "labels_fraction", "f1", "f1_full"))
        for row in rows:
            writer.writerow(row)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
