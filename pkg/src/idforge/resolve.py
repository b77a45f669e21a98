"""Transitive closure of predicted links into identity clusters, oversized
cluster review, manual disaggregation, and canonical identity map export.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

from .ingest import IdentityTable
from .stats import Stoplist


class UnionFind:
    """Disjoint sets with path compression and union by size; ties attach
    the larger root id under the smaller, keeping results deterministic."""

    def __init__(self, items: Iterable[int] = ()) -> None:
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: int) -> None:
        if item not in self.parent:
            self.parent[item] = item
            self.size[item] = 1

    def find(self, item: int) -> int:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if (self.size[ra], -ra) < (self.size[rb], -rb):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


@dataclass
class IdentityCluster:
    cluster_id: int
    members: tuple[int, ...]  # sorted
    canonical: int | None = None
    provenance: str = "algorithmic"


@dataclass
class Partition:
    """Exhaustive, disjoint clustering of the identity universe."""

    clusters: dict[int, IdentityCluster] = field(default_factory=dict)

    def as_mapping(self) -> dict[int, int]:
        """member -> cluster id, the shape the metrics consume."""
        return {m: cid for cid, c in self.clusters.items() for m in c.members}

    def cluster_of(self, member: int) -> IdentityCluster:
        return self.clusters[self.as_mapping()[member]]

    def universe(self) -> set[int]:
        return {m for c in self.clusters.values() for m in c.members}

    def sizes(self) -> list[int]:
        return sorted((len(c.members) for c in self.clusters.values()), reverse=True)


def transitive_closure(
    links: Iterable[tuple[int, int]], universe: Iterable[int]
) -> tuple[Partition, int]:
    """Connected components over predicted links; singletons for unlinked ids.

    Also returns the closure-added pair count: pairs that ended up
    co-clustered without a direct link between them.
    """
    uf = UnionFind(universe)
    direct: set[tuple[int, int]] = set()
    for a, b in links:
        if a == b:
            continue
        if a not in uf.parent or b not in uf.parent:
            raise ValueError(f"link ({a}, {b}) references ids outside the universe")
        direct.add((a, b) if a < b else (b, a))
        uf.union(a, b)
    groups: dict[int, list[int]] = {}
    for item in uf.parent:
        groups.setdefault(uf.find(item), []).append(item)
    partition = Partition()
    for cid, members in enumerate(sorted(groups.values(), key=min)):
        partition.clusters[cid] = IdentityCluster(
            cluster_id=cid, members=tuple(sorted(members))
        )
    co_clustered = sum(len(c.members) * (len(c.members) - 1) // 2 for c in partition.clusters.values())
    return partition, co_clustered - len(direct)


@dataclass
class ClusterReportEntry:
    cluster: IdentityCluster
    size: int
    members: list[dict]
    suggest_dissolve: bool


def large_cluster_report(
    partition: Partition,
    threshold: int = 10,
    table: IdentityTable | None = None,
    stoplist: Stoplist | None = None,
    commit_counts: Mapping[int, int] | None = None,
) -> list[ClusterReportEntry]:
    """Clusters with >= threshold members, largest first, with display data
    for human review. A cluster whose members all carry stoplisted names is
    flagged with a dissolve suggestion (the all-"root" case)."""
    if threshold < 2:
        raise ValueError("threshold must be >= 2")
    entries = []
    big = [c for c in partition.clusters.values() if len(c.members) >= threshold]
    big.sort(key=lambda c: (-len(c.members), c.members[0]))
    for cluster in big:
        members = []
        all_stoplisted = stoplist is not None and table is not None
        for mid in cluster.members:
            row: dict = {"id": mid}
            if table is not None:
                ident = table.by_id(mid)
                row.update(author=ident.author, name=ident.name, email=ident.email)
                if stoplist is not None and not stoplist.matches("name", ident.name):
                    all_stoplisted = False
            if commit_counts is not None:
                row["commits"] = commit_counts.get(mid, 0)
            members.append(row)
        entries.append(
            ClusterReportEntry(
                cluster=cluster,
                size=len(cluster.members),
                members=members,
                suggest_dissolve=all_stoplisted,
            )
        )
    return entries


def apply_split(
    partition: Partition, cluster_id: int, assignment: Mapping[int, str]
) -> Partition:
    """Replace one cluster by one cluster per distinct assignment tag.

    The assignment must cover exactly the cluster's members. Never merges:
    every output cluster is a subset of exactly one input cluster.
    """
    if cluster_id not in partition.clusters:
        raise KeyError(f"unknown cluster {cluster_id}")
    cluster = partition.clusters[cluster_id]
    members = set(cluster.members)
    assigned = set(assignment)
    if assigned != members:
        missing = sorted(members - assigned)
        extra = sorted(assigned - members)
        raise ValueError(
            f"assignment must cover the cluster exactly; missing={missing} extra={extra}"
        )
    by_tag: dict[str, list[int]] = {}
    for member, tag in sorted(assignment.items()):
        by_tag.setdefault(str(tag), []).append(member)
    # All other clusters keep their ids untouched; split parts get fresh ids.
    out = Partition()
    for cid in sorted(partition.clusters):
        if cid != cluster_id:
            out.clusters[cid] = partition.clusters[cid]
    next_id = max(partition.clusters) + 1
    for tag in sorted(by_tag):
        out.clusters[next_id] = IdentityCluster(
            cluster_id=next_id,
            members=tuple(sorted(by_tag[tag])),
            provenance="manually-split",
        )
        next_id += 1
    return out


def elect_canonical(
    cluster: IdentityCluster,
    labels: Sequence | None = None,
    commit_counts: Mapping[int, int] | None = None,
    table: IdentityTable | None = None,
) -> int:
    """Human-chosen canonical when a label names one inside the cluster;
    otherwise most commits, then longest name, then lowest id."""
    if not cluster.members:
        raise ValueError("cannot elect a canonical for an empty cluster")
    members = set(cluster.members)
    if labels:
        chosen = None
        for lp in labels:
            if lp.canonical is not None and lp.canonical in members and (
                lp.id1 in members or lp.id2 in members
            ):
                chosen = lp.canonical  # latest wins; labels arrive in journal order
        if chosen is not None:
            return chosen

    def rank(mid: int) -> tuple:
        commits = commit_counts.get(mid, 0) if commit_counts else 0
        name_len = len(table.by_id(mid).name) if table else 0
        return (-commits, -name_len, mid)

    return min(cluster.members, key=rank)


def elect_all_canonicals(
    partition: Partition,
    labels: Sequence | None = None,
    commit_counts: Mapping[int, int] | None = None,
    table: IdentityTable | None = None,
) -> None:
    for cluster in partition.clusters.values():
        cluster.canonical = elect_canonical(cluster, labels, commit_counts, table)


def export_identity_map(partition: Partition, table: IdentityTable) -> dict[str, str]:
    """author string -> canonical author string; idempotent and total over
    the corpus's author strings. Canonicals must be elected first."""
    mapping: dict[str, str] = {}
    for cluster in partition.clusters.values():
        if cluster.canonical is None:
            raise ValueError(
                f"cluster {cluster.cluster_id} has no canonical; elect canonicals first"
            )
        canonical_author = table.by_id(cluster.canonical).author
        for member in cluster.members:
            mapping[table.by_id(member).author] = canonical_author
    return mapping


# ---------------------------------------------------------------------------
# Files and journals
# ---------------------------------------------------------------------------

PARTITION_CSV_FIELDS = ("cluster_id", "identity_id", "canonical_flag", "provenance")


def write_partition_csv(fh: TextIO, partition: Partition) -> None:
    writer = csv.writer(fh)
    writer.writerow(PARTITION_CSV_FIELDS)
    for cid in sorted(partition.clusters):
        cluster = partition.clusters[cid]
        for member in cluster.members:
            writer.writerow(
                (cid, member, 1 if member == cluster.canonical else 0, cluster.provenance)
            )


def read_partition_csv(fh: TextIO) -> Partition:
    reader = csv.reader(line for line in fh if not line.startswith("#"))
    header = next(reader, None)
    if header is None or tuple(header) != PARTITION_CSV_FIELDS:
        raise ValueError(f"unexpected partition CSV header: {header}")
    rows: dict[int, list[tuple[int, int, str]]] = {}
    for row in reader:
        rows.setdefault(int(row[0]), []).append((int(row[1]), int(row[2]), row[3]))
    partition = Partition()
    for cid in sorted(rows):
        members = tuple(sorted(m for m, _, _ in rows[cid]))
        canonical = next((m for m, flag, _ in rows[cid] if flag), None)
        provenance = rows[cid][0][2]
        partition.clusters[cid] = IdentityCluster(
            cluster_id=cid, members=members, canonical=canonical, provenance=provenance
        )
    return partition


def write_identity_map_csv(fh: TextIO, mapping: Mapping[str, str]) -> None:
    writer = csv.writer(fh)
    writer.writerow(("raw_author", "canonical_author"))
    for raw in sorted(mapping):
        writer.writerow((raw, mapping[raw]))


def read_identity_map_csv(fh: TextIO) -> dict[str, str]:
    reader = csv.reader(line for line in fh if not line.startswith("#"))
    header = next(reader, None)
    if header is None or tuple(header) != ("raw_author", "canonical_author"):
        raise ValueError(f"unexpected identity map header: {header}")
    return {row[0]: row[1] for row in reader}


def append_split_journal(fh: TextIO, cluster_id: int, assignment: Mapping[int, str], rater: str = "") -> None:
    fh.write(
        json.dumps(
            {"cluster_id": cluster_id, "assignment": {str(k): str(v) for k, v in sorted(assignment.items())}, "rater": rater},
            sort_keys=True,
        )
        + "\n"
    )
    fh.flush()


def replay_split_journal(fh: TextIO, partition: Partition) -> Partition:
    """Re-apply a journaled split session; a resolution session is replayable."""
    for line in fh:
        line = line.strip()
        if not line:
            continue
        event = json.loads(line)
        assignment = {int(k): v for k, v in event["assignment"].items()}
        partition = apply_split(partition, event["cluster_id"], assignment)
    return partition


def replay_split_journal_tolerant(fh: TextIO, partition: Partition) -> tuple[Partition, int]:
    """Replay, skipping entries that no longer match the partition.

    After links are re-predicted, closure produces fresh clusters; journal
    entries recorded against the previous resolution may reference cluster
    ids or member sets that no longer exist. Those are skipped and counted
    rather than aborting the resolve."""
    skipped = 0
    for line in fh:
        line = line.strip()
        if not line:
            continue
        event = json.loads(line)
        assignment = {int(k): v for k, v in event["assignment"].items()}
        cid = event["cluster_id"]
        cluster = partition.clusters.get(cid)
        if cluster is None or set(assignment) != set(cluster.members):
            skipped += 1
            continue
        partition = apply_split(partition, cid, assignment)
    return partition, skipped
