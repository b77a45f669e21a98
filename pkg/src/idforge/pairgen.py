"""Candidate-pair generation (blocking) and per-pair feature assembly.

Exhaustive comparison is quadratic (a 16K-identity corpus already means
16,007^2 = 256,224,049 comparisons counting self-pairs); authors touch
only a small fraction of all files, so blocked generation unions three
cheap keys instead: shared files, exact lower-cased email or user name,
and intersecting name character-3-gram blocks. Self-pairs are never
emitted — they carry no information.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .fingerprints import (
    EmbeddingStore,
    FileAuthorIndex,
    TimezoneVector,
    file_similarity,
    text_similarity,
    timezone_similarity,
)
from .ingest import AuthorIdentity, IdentityTable
from .stats import FrequencyTables, Stoplist, frequency_similarity
from .strsim import levenshtein_similarity, pair_string_features

STRING_FEATURES = ("jw_name", "jw_email", "jw_first", "jw_last", "jw_user", "jw_inverse_first")
FREQUENCY_FEATURES = ("f_name", "f_first", "f_last", "f_user", "f_email")
FINGERPRINT_FEATURES = ("sim_files", "sim_tz", "sim_text")
LEVENSHTEIN_EXTRAS = ("lev_name", "lev_email")

DEFAULT_ALL_PAIRS_CAP = 20_000
DEFAULT_MAX_GRAM_BLOCK = 1_000


def feature_names(include_levenshtein: bool = False) -> tuple[str, ...]:
    names = STRING_FEATURES + FREQUENCY_FEATURES + FINGERPRINT_FEATURES
    if include_levenshtein:
        names = names + LEVENSHTEIN_EXTRAS
    return names


@dataclass(frozen=True)
class PairFeatures:
    """Feature vector for one unordered identity pair (id1 < id2)."""

    id1: int
    id2: int
    values: tuple[float, ...]

    def as_dict(self, include_levenshtein: bool = False) -> dict[str, float]:
        return dict(zip(feature_names(include_levenshtein), self.values))


class PairCapExceeded(ValueError):
    pass


def generate_candidate_pairs(
    identities: Sequence[AuthorIdentity],
    index: FileAuthorIndex | None,
    strategy: str = "blocked",
    all_pairs_cap: int = DEFAULT_ALL_PAIRS_CAP,
    max_gram_block: int = DEFAULT_MAX_GRAM_BLOCK,
) -> list[tuple[int, int]]:
    """Candidate (id1, id2) pairs, deduplicated, id1 < id2, sorted.

    ``all_pairs`` refuses corpora above the cap. ``blocked`` unions file
    blocks, exact email/user blocks, and name 3-gram blocks (grams whose
    block exceeds ``max_gram_block`` identities are skipped to bound the
    quadratic worst case; names shorter than 3 characters block on the
    whole name).
    """
    if strategy == "all_pairs":
        n = len(identities)
        if n > all_pairs_cap:
            raise PairCapExceeded(
                f"all_pairs on {n} identities exceeds the cap of {all_pairs_cap}; "
                "use --strategy blocked or raise the cap"
            )
        ids = sorted(ident.id for ident in identities)
        return [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
    if strategy != "blocked":
        raise ValueError(f"unknown pair generation strategy {strategy!r}")

    blocks: dict[str, list[int]] = {}

    def put(key: str, ident_id: int) -> None:
        blocks.setdefault(key, []).append(ident_id)

    for ident in identities:
        if ident.email:
            put("e:" + ident.email.lower(), ident.id)
        if ident.user_name:
            put("u:" + ident.user_name.lower(), ident.id)
        name = ident.name.lower()
        if name:
            if len(name) < 3:
                put("g:" + name, ident.id)
            else:
                for k in range(len(name) - 2):
                    put("g:" + name[k : k + 3], ident.id)

    pairs: set[tuple[int, int]] = set()
    for key, members in blocks.items():
        members = sorted(set(members))
        if key.startswith("g:") and len(members) > max_gram_block:
            continue
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                pairs.add((members[i], members[j]))
    if index is not None:
        for authors in index.authors_by_file.values():
            members = sorted(authors)
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    pairs.add((members[i], members[j]))
    return sorted(pairs)


def assemble_features(
    pair: tuple[int, int],
    table: IdentityTable,
    tables: FrequencyTables,
    stop: Stoplist,
    index: FileAuthorIndex,
    tzvecs: dict[int, TimezoneVector],
    embeddings: EmbeddingStore,
    include_levenshtein: bool = False,
) -> PairFeatures:
    """The full per-pair feature vector, missing-value conventions applied."""
    id1, id2 = (pair[0], pair[1]) if pair[0] < pair[1] else (pair[1], pair[0])
    a1 = table.by_id(id1)
    a2 = table.by_id(id2)
    strings = pair_string_features(a1, a2)
    freqs = tuple(
        frequency_similarity(a1, a2, attr, tables, stop)
        for attr in ("name", "first_name", "last_name", "user_name", "email")
    )
    v1 = tzvecs.get(id1)
    v2 = tzvecs.get(id2)
    sim_tz = timezone_similarity(v1, v2) if v1 is not None and v2 is not None else 0.0
    values = (
        strings.as_tuple()
        + freqs
        + (
            file_similarity(id1, id2, index),
            sim_tz,
            text_similarity(embeddings.vector(id1), embeddings.vector(id2)),
        )
    )
    if include_levenshtein:
        lev_name = (
            levenshtein_similarity(a1.name, a2.name) if a1.name and a2.name else -1.0
        )
        lev_email = (
            levenshtein_similarity(a1.email, a2.email) if a1.email and a2.email else -1.0
        )
        values = values + (lev_name, lev_email)
    return PairFeatures(id1=id1, id2=id2, values=values)


def write_pairs_csv(
    fh: TextIO, pairs: Iterable[PairFeatures], include_levenshtein: bool = False
) -> None:
    writer = csv.writer(fh)
    writer.writerow(("id1", "id2") + feature_names(include_levenshtein))
    for pf in pairs:
        writer.writerow((pf.id1, pf.id2) + tuple(repr(v) for v in pf.values))


def read_pairs_csv(fh: TextIO) -> tuple[tuple[str, ...], list[PairFeatures]]:
    reader = csv.reader(line for line in fh if not line.startswith("#"))
    header = next(reader)
    names = tuple(header[2:])
    out = []
    for row in reader:
        out.append(
            PairFeatures(
                id1=int(row[0]), id2=int(row[1]), values=tuple(float(v) for v in row[2:])
            )
        )
    return names, out
