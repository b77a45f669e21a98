"""Command-line pipeline: synth | ingest | stats | fingerprints | pairs |
train | crossval | active | predict | resolve | evaluate | impact | serve.

Every command is idempotent given identical inputs + config + seed, writes
outputs atomically (temp + rename), and exits 0 on success, 1 on data
errors, 2 on usage errors. All randomness flows from the single root seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .active import LabelStore, commit_spans, iterate, pair_key
from .config import STORE_ENV, PipelineConfig
from .evaluate import (
    SyntheticCorpusSpec,
    compare_resolutions,
    generate_synthetic_corpus,
    label_candidate_pairs,
)
from .fingerprints import (
    build_file_author_index,
    build_text_embeddings,
    build_timezone_vectors,
    read_fingerprint_store,
    write_fingerprint_store,
)
from .forest import (
    cross_validate,
    feature_importance,
    load_model,
    predict_proba,
    read_labels_csv,
    save_model,
    train_forest,
)
from .ingest import IdentityTable, parse_commit_stream, split_records
from .ioutil import atomic_write, manifest_comment, manifest_dict, manifest_header
from .netimpact import (
    MEASURE_FUNCTIONS,
    build_bipartite,
    impact_report,
    merge_identities,
    project_collaboration,
)
from .pairgen import (
    assemble_features,
    feature_names,
    generate_candidate_pairs,
    read_pairs_csv,
    write_pairs_csv,
)
from .resolve import (
    elect_all_canonicals,
    export_identity_map,
    large_cluster_report,
    read_identity_map_csv,
    read_partition_csv,
    transitive_closure,
    write_identity_map_csv,
    write_partition_csv,
)
from .stats import ATTRIBUTES, Stoplist, build_frequency_tables, top_frequent_strings


class DataError(Exception):
    """Input problems the user can act on; exit code 1."""


class Store:
    """Fixed file layout under the store root."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.commits = self.root / "commits.ndjson"
        self.identities = self.root / "identities.csv"
        self.stoplist = self.root / "stoplist.txt"
        self.fingerprints = self.root / "fingerprints.ndjson"
        self.pairs = self.root / "pairs.csv"
        self.labels = self.root / "labels.ndjson"
        self.model = self.root / "model.json"
        self.crossval = self.root / "crossval.json"
        self.links = self.root / "links.csv"
        self.partition = self.root / "partition.csv"
        self.splits = self.root / "splits.ndjson"
        self.identity_map = self.root / "identity_map.csv"
        self.cluster_report = self.root / "cluster_report.json"
        self.metrics = self.root / "metrics.json"
        self.impact = self.root / "impact.json"
        self.rho_bars = self.root / "rho_bars.csv"
        self.queue_snapshot = self.root / "queue.json"
        self.active_report = self.root / "active_report.json"

    def freq(self, attr: str) -> Path:
        return self.root / f"freq_{attr}.csv"

    def need(self, path: Path, hint: str) -> Path:
        if not path.exists():
            raise DataError(f"missing {path}; run `idforge {hint}` first")
        return path


def _load_commits(store: Store):
    with open(store.need(store.commits, "ingest"), "rb") as fh:
        records, errors = split_records(parse_commit_stream(fh, "ndjson"))
    if errors:
        raise DataError(f"{store.commits} is corrupt: {errors[0].reason}")
    return records


def _load_table(store: Store) -> IdentityTable:
    with open(store.need(store.identities, "ingest"), encoding="utf-8", newline="") as fh:
        return IdentityTable.read_csv(fh)


def _load_stoplist(store: Store) -> Stoplist:
    if store.stoplist.exists():
        with open(store.stoplist, encoding="utf-8") as fh:
            return Stoplist.from_file(fh)
    return Stoplist.seed()


def _load_fingerprints(store: Store):
    with open(store.need(store.fingerprints, "fingerprints"), encoding="utf-8") as fh:
        return read_fingerprint_store(fh)


def _load_pairs(store: Store):
    with open(store.need(store.pairs, "pairs"), encoding="utf-8", newline="") as fh:
        return read_pairs_csv(fh)


def _load_labels(path: Path) -> LabelStore:
    if str(path).endswith(".csv"):
        labels = read_labels_csv(open(path, encoding="utf-8", newline=""))
        store = LabelStore()
        for lp in labels:
            store.record(lp)
        return store
    with open(path, encoding="utf-8") as fh:
        return LabelStore.replay(fh)


def _read_golden_csv(path: Path) -> tuple[dict[str, int], set[str]]:
    """author -> entity for non-homonym rows, plus the homonym string set."""
    golden: dict[str, int] = {}
    homonyms: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or tuple(header) != ("author", "entity", "homonym"):
            raise DataError(f"unexpected golden CSV header in {path}: {header}")
        for row in reader:
            if row[2] == "1":
                homonyms.add(row[0])
            else:
                golden[row[0]] = int(row[1])
    return golden, homonyms


def _golden_id_partition(golden: dict[str, int], table: IdentityTable) -> dict[int, int]:
    return {
        table.by_author(author).id: entity
        for author, entity in golden.items()
        if author in table
    }


def _features_matrix(pairs):
    keys = [pair_key(p.id1, p.id2) for p in pairs]
    X = np.array([p.values for p in pairs]) if pairs else np.zeros((0, 14))
    return keys, X, {k: p for k, p in zip(keys, pairs)}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(args, config: PipelineConfig) -> int:
    spec = SyntheticCorpusSpec(
        developers=args.developers,
        typo=args.typo,
        env_switch=args.env_switch,
        name_reorder=args.name_reorder,
        org_alias=args.org_alias,
        template=args.template,
        anonymous=args.anonymous,
        email_domain=args.email_domain,
        seed=config.seed,
    )
    corpus = generate_synthetic_corpus(spec)
    chash = config.config_hash()

    def write_corpus(fh):
        fh.write(manifest_header("synthetic-corpus", chash, config.seed))
        for commit in corpus.commits:
            fh.write(commit.to_ndjson() + "\n")

    def write_golden(fh):
        fh.write(manifest_comment("golden", chash, config.seed))
        writer = csv.writer(fh)
        writer.writerow(("author", "entity", "homonym"))
        for author in sorted(corpus.golden):
            writer.writerow((author, corpus.golden[author], 0))
        for author in sorted(corpus.homonyms):
            for entity in corpus.homonyms[author]:
                writer.writerow((author, entity, 1))

    atomic_write(args.out, write_corpus)
    atomic_write(args.golden_out, write_golden)
    print(
        f"synth: {len(corpus.commits)} commits, {len(corpus.golden)} author strings, "
        f"{len(corpus.homonyms)} homonym strings -> {args.out}"
    )
    return 0


def cmd_ingest(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    input_path = Path(args.input)
    if not input_path.exists():
        raise DataError(f"input {input_path} does not exist")
    with open(input_path, "rb") as fh:
        records, errors = split_records(parse_commit_stream(fh, args.format))
    for err in errors:
        print(f"ingest: {err.location}: {err.reason}", file=sys.stderr)
    table = IdentityTable.from_commits(records)
    chash = config.config_hash()

    def write_commits(fh):
        fh.write(manifest_header("commits", chash, config.seed))
        for commit in records:
            fh.write(commit.to_ndjson() + "\n")

    def write_identities(fh):
        fh.write(manifest_comment("identities", chash, config.seed))
        table.write_csv(fh)

    atomic_write(store.commits, write_commits)
    atomic_write(store.identities, write_identities)
    print(f"ingest: {len(records)} commits, {len(table)} identities -> {store.root}")
    if errors:
        print(f"ingest: {len(errors)} malformed records reported", file=sys.stderr)
        return 1
    return 0


def cmd_stats(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    table = _load_table(store)
    tables = build_frequency_tables(table.identities())
    chash = config.config_hash()
    for attr in ATTRIBUTES:
        def write_freq(fh, attr=attr):
            fh.write(manifest_comment(f"freq-{attr}", chash, config.seed))
            tables.write_csv(attr, fh)

        atomic_write(store.freq(attr), write_freq)
    if not store.stoplist.exists():
        atomic_write(store.stoplist, lambda fh: Stoplist.seed().to_file(fh))
        print(f"stats: seeded stoplist at {store.stoplist} (curate by hand)")
    print(f"stats: frequency tables for {len(ATTRIBUTES)} attributes -> {store.root}")
    if args.top:
        # the raw material for stoplist curation: strings this frequent are
        # usually tool defaults or group ids, not people
        ranked = top_frequent_strings(tables, args.top)
        for attr in ATTRIBUTES:
            row = ", ".join(f"{value} ({count})" for value, count in ranked[attr])
            print(f"stats: top {attr}: {row}")
    return 0


def cmd_fingerprints(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    commits = _load_commits(store)
    table = _load_table(store)
    index = build_file_author_index(commits, table)
    tzvecs = build_timezone_vectors(commits, table)
    embeddings = build_text_embeddings(
        commits, table, d=config.embed_dim, seed=config.seed, backend=config.embed_backend
    )
    atomic_write(
        store.fingerprints,
        lambda fh: write_fingerprint_store(fh, index, tzvecs, embeddings),
    )
    axes = next(iter(tzvecs.values())).axes if tzvecs else ()
    print(
        f"fingerprints: {len(index.files_by_author)} authors with files, "
        f"{len(axes)} surviving zones, d={config.embed_dim} -> {store.fingerprints}"
    )
    return 0


def cmd_pairs(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    table = _load_table(store)
    tables = build_frequency_tables(table.identities())
    stop = _load_stoplist(store)
    index, tzvecs, embeddings = _load_fingerprints(store)
    candidates = generate_candidate_pairs(
        table.identities(),
        index,
        strategy=config.strategy,
        all_pairs_cap=config.all_pairs_cap,
        max_gram_block=config.max_gram_block,
    )
    features = [
        assemble_features(
            pair, table, tables, stop, index, tzvecs, embeddings,
            include_levenshtein=config.include_levenshtein,
        )
        for pair in candidates
    ]
    chash = config.config_hash()

    def write_pairs(fh):
        fh.write(manifest_comment("pairs", chash, config.seed))
        write_pairs_csv(fh, features, include_levenshtein=config.include_levenshtein)

    atomic_write(store.pairs, write_pairs)
    print(f"pairs: {len(features)} candidate pairs ({config.strategy}) -> {store.pairs}")
    if args.golden and config.strategy == "blocked":
        if len(table) > 500:
            print("pairs: recall measurement skipped (corpus above 500 identities)")
            return 0
        golden, _ = _read_golden_csv(Path(args.golden))
        golden_ids = _golden_id_partition(golden, table)
        exhaustive = generate_candidate_pairs(
            table.identities(), None, "all_pairs", all_pairs_cap=500
        )
        truth_keys, truth_labels = label_candidate_pairs(exhaustive, golden_ids)
        true_pairs = {k for k, lbl in zip(truth_keys, truth_labels) if lbl == 1}
        caught = len(true_pairs & {(p.id1, p.id2) for p in features})
        recall = caught / len(true_pairs) if true_pairs else 1.0
        print(f"pairs: blocked recall of true alias pairs = {recall:.4f} ({caught}/{len(true_pairs)})")
    return 0


def _labeled_matrix(store: Store, labels: LabelStore):
    names, pairs = _load_pairs(store)
    keys, X, by_pair = _features_matrix(pairs)
    key_row = {k: i for i, k in enumerate(keys)}
    training = labels.training_labels()
    rows = [key_row[k] for k in sorted(training) if k in key_row]
    y = np.array([training[k] for k in sorted(training) if k in key_row], dtype=np.int64)
    if len(rows) == 0:
        raise DataError("no labeled pairs intersect the candidate pair set")
    return names, X[rows], y


def cmd_train(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    labels = _load_labels(Path(args.labels) if args.labels else store.need(store.labels, "active"))
    names, X, y = _labeled_matrix(store, labels)
    model = train_forest(X, y, config.forest_params(), feature_names=names)
    atomic_write(
        store.model,
        lambda fh: save_model(model, fh, manifest_dict("model", config.config_hash(), config.seed)),
    )
    ranked = feature_importance(model)[:5]
    print(f"train: {len(y)} labeled pairs ({int(y.sum())} links) -> {store.model}")
    print("train: top importances " + ", ".join(f"{n}={v:.3f}" for n, v in ranked))
    return 0


def cmd_crossval(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    names, pairs = _load_pairs(store)
    keys, X, _ = _features_matrix(pairs)
    blocking_fn = 0
    if args.golden:
        table = _load_table(store)
        golden, _ = _read_golden_csv(Path(args.golden))
        golden_ids = _golden_id_partition(golden, table)
        kept, labels = label_candidate_pairs(keys, golden_ids)
        key_set = set(kept)
        rows = [i for i, k in enumerate(keys) if k in key_set]
        X = X[rows]
        y = np.array(labels, dtype=np.int64)
        # golden pairs missed by blocking still count against recall
        by_entity: dict[int, list[int]] = {}
        for ident_id, entity in golden_ids.items():
            by_entity.setdefault(entity, []).append(ident_id)
        candidate_set = set(kept)
        for members in by_entity.values():
            members.sort()
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    if (members[i], members[j]) not in candidate_set:
                        blocking_fn += 1
    elif args.labels:
        labels = _load_labels(Path(args.labels))
        names, X, y = _labeled_matrix(store, labels)
    else:
        raise DataError("crossval needs --golden or --labels")
    result = cross_validate(X, y, args.k, config.forest_params())
    total = result.total
    tp, fp = total.tp, total.fp
    fn = total.fn + blocking_fn
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    doc = {
        "_manifest": manifest_dict("crossval", config.config_hash(), config.seed),
        "k": args.k,
        "folds": [
            {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn} for c in result.fold_confusions
        ],
        "classifier": {"precision": result.precision, "recall": result.recall},
        "end_to_end": {
            "precision": precision,
            "recall": recall,
            "splitting": fn / (tp + fn) if tp + fn else None,
            "lumping": fp / (tp + fn) if tp + fn else None,
            "blocking_misses": blocking_fn,
        },
    }
    atomic_write(store.crossval, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))
    print(
        f"crossval: k={args.k} precision={precision:.4f} recall={recall:.4f} "
        f"(classifier-only: {result.precision:.4f}/{result.recall:.4f}) -> {store.crossval}"
    )
    return 0


def cmd_active(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    names, pairs = _load_pairs(store)
    keys, X, by_pair = _features_matrix(pairs)
    if args.golden:
        table = _load_table(store)
        golden, _ = _read_golden_csv(Path(args.golden))
        golden_ids = _golden_id_partition(golden, table)
        kept, labels = label_candidate_pairs(keys, golden_ids)
        truth = {k: v for k, v in zip(kept, labels)}
        key_set = set(kept)
        rows = [i for i, k in enumerate(keys) if k in key_set]
        keys = [keys[i] for i in rows]
        X = X[rows]
        rng = np.random.default_rng(config.seed)
        pos = [k for k in keys if truth[k] == 1]
        neg = [k for k in keys if truth[k] == 0]
        if len(pos) < config.al_classifiers or len(neg) < config.al_classifiers:
            raise DataError("golden corpus has too few pairs of one class to seed the loop")
        n_seed = max(config.al_classifiers, args.seed_labels // 2)
        store_labels = LabelStore(journal=open(store.labels, "w", encoding="utf-8"))
        from .forest import LabeledPair

        for k in list(rng.choice(len(pos), size=min(n_seed, len(pos)), replace=False)):
            key = pos[int(k)]
            store_labels.record(LabeledPair(key[0], key[1], 1.0, rater="seed"))
        for k in list(rng.choice(len(neg), size=min(n_seed, len(neg)), replace=False)):
            key = neg[int(k)]
            store_labels.record(LabeledPair(key[0], key[1], 0.0, rater="seed"))
        result = iterate(
            keys,
            X,
            store_labels,
            labeler=lambda k: float(truth[k]),
            rounds=args.rounds if args.rounds is not None else config.al_rounds,
            m=config.al_classifiers,
            params=config.forest_params(),
            feature_names=names,
        )
        atomic_write(
            store.model,
            lambda fh: save_model(result.model, fh, manifest_dict("model", config.config_hash(), config.seed)),
        )
        doc = {
            "_manifest": manifest_dict("active", config.config_hash(), config.seed),
            "region_sizes": result.region_sizes,
            "labels_spent": result.labels_spent,
            "labels_total": len(result.store),
            "candidate_pairs": len(keys),
        }
        atomic_write(store.active_report, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))
        print(
            f"active: oracle loop regions={result.region_sizes} "
            f"labels={len(result.store)}/{len(keys)} -> {store.model}"
        )
        return 0
    # human mode: compute the current confusion region and snapshot the queue
    from .service import LabelService

    table = _load_table(store)
    label_store = (
        _load_labels(store.labels) if store.labels.exists() else LabelStore()
    )
    service = LabelService(
        table, keys, by_pair, tuple(names), label_store, config,
        spans=commit_spans(_load_commits(store), table),
    )
    info = service.refresh_queue()
    doc = {
        "_manifest": manifest_dict("queue", config.config_hash(), config.seed),
        "info": info,
        "entries": [e.to_json() for e in service.queue.head(args.limit)],
    }
    atomic_write(store.queue_snapshot, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))
    print(f"active: queue of {info['queue']} pairs -> {store.queue_snapshot}")
    return 0


def cmd_predict(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    with open(store.need(store.model, "train"), encoding="utf-8") as fh:
        model = load_model(fh)
    names, pairs = _load_pairs(store)
    if tuple(names) != model.feature_names:
        raise DataError(
            f"pairs file features {names} do not match model features {model.feature_names}"
        )
    keys, X, _ = _features_matrix(pairs)
    probs = predict_proba(model, X)
    threshold = config.link_threshold

    def write_links(fh):
        fh.write(manifest_comment("links", config.config_hash(), config.seed))
        writer = csv.writer(fh)
        writer.writerow(("id1", "id2", "probability", "link"))
        for (id1, id2), p in zip(keys, probs):
            writer.writerow((id1, id2, repr(float(p)), 1 if p >= threshold else 0))

    atomic_write(store.links, write_links)
    n_links = int((probs >= threshold).sum())
    print(f"predict: {n_links} links among {len(keys)} candidates -> {store.links}")
    return 0


def _read_links(store: Store) -> list[tuple[int, int]]:
    links = []
    with open(store.need(store.links, "predict"), encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        next(reader)
        for row in reader:
            if row[3] == "1":
                links.append((int(row[0]), int(row[1])))
    return links


def cmd_resolve(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    table = _load_table(store)
    commits = _load_commits(store)
    links = _read_links(store)
    partition, closure_added = transitive_closure(links, universe=range(len(table)))
    if store.splits.exists():
        with open(store.splits, encoding="utf-8") as fh:
            from .resolve import replay_split_journal_tolerant

            partition, skipped = replay_split_journal_tolerant(fh, partition)
        if skipped:
            print(
                f"resolve: skipped {skipped} journaled splits that no longer match "
                "the current clustering",
                file=sys.stderr,
            )
    counts: dict[int, int] = {}
    for commit in commits:
        aid = table.by_author(commit.author_string).id
        counts[aid] = counts.get(aid, 0) + 1
    labels = _load_labels(store.labels).events() if store.labels.exists() else None
    elect_all_canonicals(partition, labels, counts, table)
    mapping = export_identity_map(partition, table)
    chash = config.config_hash()

    def write_part(fh):
        fh.write(manifest_comment("partition", chash, config.seed))
        write_partition_csv(fh, partition)

    def write_map(fh):
        fh.write(manifest_comment("identity-map", chash, config.seed))
        write_identity_map_csv(fh, mapping)

    atomic_write(store.partition, write_part)
    atomic_write(store.identity_map, write_map)
    report = large_cluster_report(
        partition, config.cluster_threshold, table, _load_stoplist(store), counts
    )
    doc = {
        "_manifest": manifest_dict("cluster-report", chash, config.seed),
        "threshold": config.cluster_threshold,
        "closure_added_links": closure_added,
        "direct_links": len(links),
        "clusters": len(partition.clusters),
        "large_clusters": [
            {
                "cluster_id": e.cluster.cluster_id,
                "size": e.size,
                "suggest_dissolve": e.suggest_dissolve,
                "members": e.members,
            }
            for e in report
        ],
    }
    atomic_write(store.cluster_report, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))
    print(
        f"resolve: {len(links)} links (+{closure_added} via closure) -> "
        f"{len(partition.clusters)} clusters, {len(report)} of size >= {config.cluster_threshold}"
    )
    return 0


def cmd_evaluate(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    table = _load_table(store)
    with open(store.need(store.partition, "resolve"), encoding="utf-8", newline="") as fh:
        predicted = read_partition_csv(fh).as_mapping()
    if args.golden:
        golden, _ = _read_golden_csv(Path(args.golden))
        reference = _golden_id_partition(golden, table)
    elif args.against:
        with open(args.against, encoding="utf-8", newline="") as fh:
            reference = read_partition_csv(fh).as_mapping()
    else:
        raise DataError("evaluate needs --golden or --against")
    universe = set(reference)
    predicted = {k: v for k, v in predicted.items() if k in universe}
    if set(predicted) != universe:
        missing = sorted(universe - set(predicted))[:5]
        raise DataError(f"partition does not cover the reference universe; missing ids {missing}")
    report = compare_resolutions(predicted, reference)
    m = report.a_vs_b
    doc = {
        "_manifest": manifest_dict("metrics", config.config_hash(), config.seed),
        "precision": m["precision"],
        "recall": m["recall"],
        "splitting": m["splitting"],
        "lumping": m["lumping"],
        "entities_a": report.entities_a,
        "entities_b": report.entities_b,
        "samples": report.to_json()["samples"],
        "reverse": report.b_vs_a,
    }
    atomic_write(store.metrics, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))
    print(
        f"evaluate: precision={m['precision']:.4f} recall={m['recall']:.4f} "
        f"splitting={m['splitting']:.4f} lumping={m['lumping']:.4f} -> {store.metrics}"
    )
    return 0


def cmd_impact(args, config: PipelineConfig) -> int:
    store = Store(config.store)
    table = _load_table(store)
    commits = _load_commits(store)
    with open(store.need(store.identity_map, "resolve"), encoding="utf-8", newline="") as fh:
        author_map = read_identity_map_csv(fh)
    id_map = {}
    for ident in table.identities():
        canonical_author = author_map.get(ident.author, ident.author)
        if canonical_author not in table:
            raise DataError(f"canonical author {canonical_author!r} is not in the identity table")
        id_map[ident.id] = table.by_author(canonical_author).id
    report = impact_report(
        commits, table, id_map, measures=tuple(config.measures), reductions=config.reductions
    )
    doc = {"_manifest": manifest_dict("impact", config.config_hash(), config.seed)}
    doc.update({m: row for m, row in report.items()})
    atomic_write(store.impact, lambda fh: json.dump(doc, fh, indent=2, sort_keys=True))

    def write_bars(fh):
        fh.write(manifest_comment("rho-bars", config.config_hash(), config.seed))
        writer = csv.writer(fh)
        writer.writerow(("measure", "rho", "flagged"))
        for measure in config.measures:
            row = report[measure]
            rho = "" if row["rho"] is None else repr(row["rho"])
            writer.writerow((measure, rho, 1 if row["flagged"] else 0))

    atomic_write(store.rho_bars, write_bars)
    # per-node measures on raw and corrected graphs, for external plotting
    bip = build_bipartite(commits, table)
    raw = project_collaboration(bip)
    corrected = merge_identities(raw, id_map)
    for path, graph in ((store.root / "measures_raw.csv", raw), (store.root / "measures_corrected.csv", corrected)):
        values = {m: MEASURE_FUNCTIONS[m](graph) for m in config.measures}

        def write_measures(fh, graph=graph, values=values):
            fh.write(manifest_comment("measures", config.config_hash(), config.seed))
            writer = csv.writer(fh)
            writer.writerow(["node"] + list(config.measures))
            for node in graph.nodes():
                writer.writerow([node] + [repr(float(values[m][node])) for m in config.measures])

        atomic_write(path, write_measures)
    flagged = [m for m in config.measures if report[m]["flagged"]]
    rhos = ", ".join(
        f"{m}={report[m]['rho']:.4f}" if report[m]["rho"] is not None else f"{m}=undef"
        for m in config.measures
    )
    print(f"impact: {rhos}; flagged: {flagged or 'none'} -> {store.impact}")
    return 0


def cmd_serve(args, config: PipelineConfig) -> int:
    from .service import LabelService, serve

    store = Store(config.store)
    table = _load_table(store)
    commits = _load_commits(store)
    names, pairs = _load_pairs(store)
    keys, X, by_pair = _features_matrix(pairs)
    store.labels.parent.mkdir(parents=True, exist_ok=True)
    existing = (
        _load_labels(store.labels) if store.labels.exists() else LabelStore()
    )
    journal = open(store.labels, "a", encoding="utf-8")
    label_store = LabelStore(journal=journal)
    for event in existing.events():
        label_store._apply(event)
    partition = None
    if store.partition.exists():
        with open(store.partition, encoding="utf-8", newline="") as fh:
            partition = read_partition_csv(fh)
        if store.splits.exists():
            from .resolve import replay_split_journal

            with open(store.splits, encoding="utf-8") as fh:
                partition = replay_split_journal(fh, partition)
    counts: dict[int, int] = {}
    for commit in commits:
        aid = table.by_author(commit.author_string).id
        counts[aid] = counts.get(aid, 0) + 1
    affiliations = {}
    if args.affiliations:
        with open(args.affiliations, encoding="utf-8", newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            next(reader, None)
            affiliations = {row[0]: row[1] for row in reader}
    split_journal = open(store.splits, "a", encoding="utf-8")
    service = LabelService(
        table,
        keys,
        by_pair,
        tuple(names),
        label_store,
        config,
        spans=commit_spans(commits, table),
        affiliations=affiliations,
        partition=partition,
        split_journal=split_journal,
        stoplist=_load_stoplist(store),
        commit_counts=counts,
    )
    service.refresh_queue()
    httpd = serve(service, args.host, args.port, ui_dir=args.ui)
    actual_port = httpd.server_address[1]
    print(f"serve: http://{args.host}:{actual_port}/ (api under /api/, ui={'on' if args.ui else 'off'})")
    sys.stdout.flush()
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.shutdown()
        journal.close()
        split_journal.close()
    return 0


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--store", help=f"store root (default 'store' or ${STORE_ENV})")
    parser.add_argument("--seed", type=int, help="root seed for every random choice")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idforge",
        description="identity resolution for version-control author records",
    )
    parser.add_argument("--version", action="version", version=f"idforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with injected identity errors")
    _add_common(p)
    p.add_argument("--developers", type=int, default=100)
    p.add_argument("--typo", type=float, default=0.0)
    p.add_argument("--env-switch", dest="env_switch", type=float, default=0.0)
    p.add_argument("--name-reorder", dest="name_reorder", type=float, default=0.0)
    p.add_argument("--org-alias", dest="org_alias", type=float, default=0.0)
    p.add_argument("--template", type=float, default=0.0)
    p.add_argument("--anonymous", type=float, default=0.0)
    p.add_argument("--email-domain", dest="email_domain", type=float, default=0.0)
    p.add_argument("--out", default="corpus.ndjson")
    p.add_argument("--golden-out", dest="golden_out", default="golden.csv")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("ingest", help="parse a commit stream into the store")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("ndjson", "git-log"), default="ndjson")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("stats", help="frequency tables and the seed stoplist")
    _add_common(p)
    p.add_argument("--top", type=int, help="print the N most frequent strings per attribute")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("fingerprints", help="file/time-zone/text fingerprints")
    _add_common(p)
    p.add_argument("--dim", dest="embed_dim", type=int, help="embedding dimension")
    p.set_defaults(fn=cmd_fingerprints)

    p = sub.add_parser("pairs", help="candidate pairs and their feature vectors")
    _add_common(p)
    p.add_argument("--strategy", choices=("blocked", "all_pairs"))
    p.add_argument("--golden", help="golden CSV: also report blocked recall (corpora <= 500)")
    p.set_defaults(fn=cmd_pairs)

    p = sub.add_parser("train", help="train the link classifier from labels")
    _add_common(p)
    p.add_argument("--labels", help="labels CSV or journal (default: store journal)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("crossval", help="k-fold cross-validation of the classifier")
    _add_common(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--golden", help="golden CSV; auto-labels candidate pairs")
    p.add_argument("--labels", help="labels CSV or journal")
    p.set_defaults(fn=cmd_crossval)

    p = sub.add_parser("active", help="active-learning loop (oracle mode) or queue snapshot")
    _add_common(p)
    p.add_argument("--golden", help="golden CSV: run the loop with an oracle labeler")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed-labels", dest="seed_labels", type=int, default=24)
    p.add_argument("--limit", type=int, default=100, help="queue snapshot size")
    p.set_defaults(fn=cmd_active)

    p = sub.add_parser("predict", help="predict links for all candidate pairs")
    _add_common(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("resolve", help="transitive closure, canonical election, identity map")
    _add_common(p)
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("evaluate", help="pairwise metrics against a reference resolution")
    _add_common(p)
    p.add_argument("--golden", help="golden CSV reference")
    p.add_argument("--against", help="another partition CSV as reference")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("impact", help="network measures on raw vs corrected graphs")
    _add_common(p)
    p.set_defaults(fn=cmd_impact)

    p = sub.add_parser("serve", help="label service + static UI")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8341)
    p.add_argument("--ui", help="directory with the built labeler UI")
    p.add_argument("--affiliations", help="CSV author,affiliation for the rater display")
    p.set_defaults(fn=cmd_serve)

    return parser


_CONFIG_FLAGS = ("store", "seed", "strategy", "embed_dim")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        key: getattr(args, key) for key in _CONFIG_FLAGS if getattr(args, key, None) is not None
    }
    try:
        config = PipelineConfig.load(args.config, overrides)
        return args.fn(args, config)
    except DataError as exc:
        print(f"idforge: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"idforge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
