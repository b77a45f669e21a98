"""Random-forest link predictor over pair feature vectors.

Bagged binary trees with Gini splits on per-node random feature subsets.
Everything is deterministic given the seed, and the serialized model is a
plain JSON document (schema below) that any conforming loader can replay
to the exact same predictions:

    {"format": "idforge-forest", "version": 1,
     "params": {...}, "feature_names": [...], "training_digest": "...",
     "trees": [[node, ...], ...]}

    internal node: [feature_index, threshold, left_index, right_index, gain]
    leaf node:     ["leaf", class0_count, class1_count]

A sample goes left iff value < threshold; a tree votes 1 iff its leaf has
class1_count > class0_count; the forest probability is the fraction of
trees voting 1. ``gain`` is the bootstrap-weighted Gini decrease used for
feature importance.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from .evaluate import PairConfusion


@dataclass(frozen=True)
class LabeledPair:
    """A human judgment on a pair: subjective match probability in [0, 1]."""

    id1: int
    id2: int
    match: float
    canonical: int | None = None
    rater: str = ""
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.match <= 1.0:
            raise ValueError(f"match must be in [0, 1], got {self.match}")

    def label(self) -> int:
        # ties threshold up
        return 1 if self.match >= 0.5 else 0


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None  # default ceil(sqrt(n_features))
    seed: int = 0
    link_threshold: float = 0.5
    downsample_negatives: float | None = None  # max negatives per positive


@dataclass
class ForestModel:
    params: ForestParams
    feature_names: tuple[str, ...]
    trees: list[list[list]]
    training_digest: str
    _arrays: list[tuple] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _gini(n0: float, n1: float) -> float:
    n = n0 + n1
    if n == 0:
        return 0.0
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


def _build_tree(
    X: np.ndarray, y: np.ndarray, rng: np.random.Generator, params: ForestParams
) -> list[list]:
    n, d = X.shape
    boot = rng.integers(0, n, size=n)
    Xb = X[boot]
    yb = y[boot]
    k = params.features_per_split or math.ceil(math.sqrt(d))
    k = min(k, d)
    nodes: list[list] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)  # reserve slot so child ids stay topological
        ys = yb[idx]
        n1 = int(ys.sum())
        n0 = len(idx) - n1
        if (
            n0 == 0
            or n1 == 0
            or len(idx) < 2 * params.min_leaf
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            nodes[node_id] = ["leaf", n0, n1]
            return node_id
        parent_gini = _gini(n0, n1)
        feats = rng.choice(d, size=k, replace=False)
        best_gain = 0.0
        best = None  # (feature, threshold, left_mask)
        for f in feats:
            x = Xb[idx, f]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            ys_sorted = ys[order]
            ones_left = np.cumsum(ys_sorted)
            total1 = ones_left[-1]
            m = len(idx)
            counts_left = np.arange(1, m)
            cut_ok = xs[:-1] < xs[1:]
            if params.min_leaf > 1:
                cut_ok = cut_ok.copy()
                cut_ok[: params.min_leaf - 1] = False
                cut_ok[m - params.min_leaf :] = False
            if not cut_ok.any():
                continue
            l1 = ones_left[:-1]
            l0 = counts_left - l1
            r1 = total1 - l1
            r0 = (m - counts_left) - r1
            with np.errstate(invalid="ignore"):
                gl = 1.0 - (l1 / counts_left) ** 2 - (l0 / counts_left) ** 2
                nr = m - counts_left
                gr = 1.0 - (r1 / nr) ** 2 - (r0 / nr) ** 2
            weighted = (counts_left * gl + nr * gr) / m
            weighted[~cut_ok] = np.inf
            pos = int(np.argmin(weighted))
            gain = parent_gini - float(weighted[pos])
            if gain > best_gain:
                t = (float(xs[pos]) + float(xs[pos + 1])) / 2.0
                if not float(xs[pos]) < t:
                    t = float(xs[pos + 1])
                best_gain = gain
                best = (int(f), t)
        if best is None:
            nodes[node_id] = ["leaf", n0, n1]
            return node_id
        f, t = best
        left_mask = Xb[idx, f] < t
        left_idx = idx[left_mask]
        right_idx = idx[~left_mask]
        weighted_gain = best_gain * len(idx) / n
        left_id = grow(left_idx, depth + 1)
        right_id = grow(right_idx, depth + 1)
        nodes[node_id] = [f, t, left_id, right_id, weighted_gain]
        return node_id

    grow(np.arange(n), 0)
    return nodes


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams = ForestParams(),
    feature_names: Sequence[str] | None = None,
) -> ForestModel:
    """Fit a bagged forest; deterministic for a fixed seed.

    Raises on empty input or single-class labels — a link predictor needs
    both matched and unmatched examples.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with matching label vector")
    if len(y) == 0:
        raise ValueError("training set is empty")
    if y.min() == y.max():
        raise ValueError("training set contains a single class; need both links and non-links")
    rng = np.random.default_rng(params.seed)
    if params.downsample_negatives is not None:
        pos = np.flatnonzero(y == 1)
        neg = np.flatnonzero(y == 0)
        keep = int(params.downsample_negatives * len(pos))
        if keep < len(neg):
            neg = rng.choice(neg, size=max(keep, 1), replace=False)
        sel = np.sort(np.concatenate([pos, neg]))
        X, y = X[sel], y[sel]
    names = tuple(feature_names) if feature_names else tuple(
        f"f{i}" for i in range(X.shape[1])
    )
    if len(names) != X.shape[1]:
        raise ValueError("feature_names length does not match X width")
    digest = hashlib.sha256(X.tobytes() + y.tobytes()).hexdigest()
    trees = [_build_tree(X, y, rng, params) for _ in range(params.n_trees)]
    return ForestModel(
        params=params, feature_names=names, trees=trees, training_digest=digest
    )


def _tree_arrays(tree: list[list]) -> tuple:
    n = len(tree)
    feat = np.full(n, -1, dtype=np.int64)
    thresh = np.zeros(n)
    left = np.zeros(n, dtype=np.int64)
    right = np.zeros(n, dtype=np.int64)
    vote = np.zeros(n, dtype=np.int64)
    for i, node in enumerate(tree):
        if node[0] == "leaf":
            vote[i] = 1 if node[2] > node[1] else 0
        else:
            feat[i], thresh[i], left[i], right[i] = node[0], node[1], node[2], node[3]
    return feat, thresh, left, right, vote


def _ensure_arrays(model: ForestModel) -> list[tuple]:
    if not model._arrays:
        model._arrays = [_tree_arrays(t) for t in model.trees]
    return model._arrays


def predict_proba(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Fraction of trees voting link, per row; values in {0, 1/T, ..., 1}."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model ({model.n_features})"
        )
    votes = np.zeros(len(X))
    for feat, thresh, left, right, vote in _ensure_arrays(model):
        cur = np.zeros(len(X), dtype=np.int64)
        while True:
            internal = feat[cur] >= 0
            if not internal.any():
                break
            rows = np.flatnonzero(internal)
            node = cur[rows]
            goleft = X[rows, feat[node]] < thresh[node]
            cur[rows] = np.where(goleft, left[node], right[node])
        votes += vote[cur]
    return votes / len(model.trees)


def predict(
    model: ForestModel, features: Sequence[float] | np.ndarray, threshold: float | None = None
) -> tuple[float, bool]:
    """(probability, link) for one pair; link iff probability >= threshold."""
    if threshold is None:
        threshold = model.params.link_threshold
    p = float(predict_proba(model, np.asarray(features, dtype=np.float64).reshape(1, -1))[0])
    return p, p >= threshold


def feature_importance(model: ForestModel) -> list[tuple[str, float]]:
    """Mean impurity decrease per feature, normalized to sum 1, descending."""
    sums = np.zeros(model.n_features)
    for tree in model.trees:
        for node in tree:
            if node[0] != "leaf":
                sums[node[0]] += node[4]
    total = sums.sum()
    if total > 0:
        sums = sums / total
    ranked = sorted(zip(model.feature_names, sums.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return ranked


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold assignment per row, stratified by class; errors if a class
    cannot reach every fold."""
    if k < 2:
        raise ValueError("need k >= 2 folds")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds = np.zeros(len(y), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(
                f"class {cls} has only {len(idx)} examples; every one of the {k} "
                "folds would need at least one"
            )
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = np.arange(len(idx)) % k
    return folds


@dataclass
class CrossValResult:
    fold_confusions: list[PairConfusion]
    precision: float
    recall: float

    @property
    def total(self) -> PairConfusion:
        tp = sum(c.tp for c in self.fold_confusions)
        fp = sum(c.fp for c in self.fold_confusions)
        fn = sum(c.fn for c in self.fold_confusions)
        tn = sum(c.tn for c in self.fold_confusions)
        return PairConfusion(tp=tp, fp=fp, fn=fn, tn=tn)


def cross_validate(
    X: np.ndarray, y: np.ndarray, k: int, params: ForestParams = ForestParams()
) -> CrossValResult:
    """Stratified k-fold CV; per-fold confusion and aggregate precision/recall."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, k, params.seed)
    confusions = []
    for fold in range(k):
        test = folds == fold
        model = train_forest(X[~test], y[~test], replace(params, seed=params.seed + fold))
        prob = predict_proba(model, X[test])
        pred = (prob >= params.link_threshold).astype(np.int64)
        truth = y[test]
        confusions.append(
            PairConfusion(
                tp=int(((pred == 1) & (truth == 1)).sum()),
                fp=int(((pred == 1) & (truth == 0)).sum()),
                fn=int(((pred == 0) & (truth == 1)).sum()),
                tn=int(((pred == 0) & (truth == 0)).sum()),
            )
        )
    total_tp = sum(c.tp for c in confusions)
    total_fp = sum(c.fp for c in confusions)
    total_fn = sum(c.fn for c in confusions)
    precision = total_tp / (total_tp + total_fp) if total_tp + total_fp else float("nan")
    recall = total_tp / (total_tp + total_fn) if total_tp + total_fn else float("nan")
    return CrossValResult(fold_confusions=confusions, precision=precision, recall=recall)


# ---------------------------------------------------------------------------
# Model and label files
# ---------------------------------------------------------------------------


def save_model(model: ForestModel, fh: TextIO, manifest: dict | None = None) -> None:
    doc = {
        "format": "idforge-forest",
        "version": 1,
        "params": {
            "n_trees": model.params.n_trees,
            "max_depth": model.params.max_depth,
            "min_leaf": model.params.min_leaf,
            "features_per_split": model.params.features_per_split,
            "seed": model.params.seed,
            "link_threshold": model.params.link_threshold,
            "downsample_negatives": model.params.downsample_negatives,
        },
        "feature_names": list(model.feature_names),
        "training_digest": model.training_digest,
        "trees": model.trees,
    }
    if manifest is not None:
        doc["_manifest"] = manifest
    json.dump(doc, fh)
    fh.write("\n")


def load_model(fh: TextIO) -> ForestModel:
    doc = json.load(fh)
    if doc.get("format") != "idforge-forest" or doc.get("version") != 1:
        raise ValueError("not an idforge forest model file (format/version mismatch)")
    params = ForestParams(**doc["params"])
    return ForestModel(
        params=params,
        feature_names=tuple(doc["feature_names"]),
        trees=doc["trees"],
        training_digest=doc["training_digest"],
    )


LABELS_CSV_FIELDS = ("id1", "id2", "match", "canonical", "rater", "timestamp")


def write_labels_csv(fh: TextIO, labels: Iterable[LabeledPair]) -> None:
    import csv

    writer = csv.writer(fh)
    writer.writerow(LABELS_CSV_FIELDS)
    for lp in labels:
        writer.writerow(
            (
                lp.id1,
                lp.id2,
                repr(lp.match),
                "" if lp.canonical is None else lp.canonical,
                lp.rater,
                repr(lp.timestamp),
            )
        )


def read_labels_csv(fh: TextIO) -> list[LabeledPair]:
    import csv

    reader = csv.reader(line for line in fh if not line.startswith("#"))
    header = next(reader, None)
    if header is None or tuple(header) != LABELS_CSV_FIELDS:
        raise ValueError(f"unexpected labels CSV header: {header}")
    out = []
    for row in reader:
        out.append(
            LabeledPair(
                id1=int(row[0]),
                id2=int(row[1]),
                match=float(row[2]),
                canonical=int(row[3]) if row[3] else None,
                rater=row[4],
                timestamp=float(row[5]) if row[5] else 0.0,
            )
        )
    return out
