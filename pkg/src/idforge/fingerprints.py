"""Behavioral similarity signals: file overlap, time-zone profile, and
commit-message text.

The text backend is pluggable. The default, ``hashtfidf``, is fully
deterministic: each token gets a fixed pseudo-random unit direction drawn
from a keyed blake2b hash of (token, seed), and an author's embedding is
the tf-idf-weighted sum of those directions over the author's pooled
commit messages, with weight tf * ln(1 + N/df). Same corpus + seed +
dimension gives bit-identical vectors on every run.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ingest import CommitRecord, IdentityTable

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_ZONE_RE = re.compile(r"^\s*(?:UTC|GMT)?\s*([+-]?)(\d{1,2}):?(\d{2})?\s*$", re.IGNORECASE)

DEFAULT_EMBED_DIM = 200
DEFAULT_MATCH_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


def normalize_zone(raw: str) -> str:
    """Canonicalize a raw zone string to signed +HHMM where recognizable.

    Unrecognizable strings (misspellings, names like "EST", empty) keep
    their verbatim form as their own axis; filtering happens later by
    author count, not by repair.
    """
    m = _ZONE_RE.match(raw)
    if not m:
        return raw
    sign = m.group(1) or "+"
    hh = int(m.group(2))
    mm = int(m.group(3) or 0)
    if hh > 23 or mm > 59:
        return raw
    return f"{sign}{hh:02d}{mm:02d}"


# ---------------------------------------------------------------------------
# Files-modified fingerprint
# ---------------------------------------------------------------------------


@dataclass
class FileAuthorIndex:
    """file -> authors that modified it, and author -> file set.

    Each file carries weight 1/|authors(file)|: a file only one person
    ever touched is maximal evidence, a file everyone touches is none.
    """

    authors_by_file: dict[str, set[int]] = field(default_factory=dict)
    files_by_author: dict[int, set[str]] = field(default_factory=dict)

    def weight(self, path: str) -> float:
        return 1.0 / len(self.authors_by_file[path])

    def files(self, author_id: int) -> set[str]:
        return self.files_by_author.get(author_id, set())


def build_file_author_index(
    commits: Iterable[CommitRecord], table: IdentityTable
) -> FileAuthorIndex:
    index = FileAuthorIndex()
    for commit in commits:
        ident = table.by_author(commit.author_string)
        files = index.files_by_author.setdefault(ident.id, set())
        for path in commit.files:
            files.add(path)
            index.authors_by_file.setdefault(path, set()).add(ident.id)
    return index


def file_similarity(a1: int, a2: int, index: FileAuthorIndex) -> float:
    """Sum of 1/|authors(f)| over files modified by both authors.

    The shared files are summed in sorted order: set iteration over strings
    is hash-randomized per process, and reproducible runs need a canonical
    float accumulation order."""
    f1 = index.files_by_author.get(a1)
    f2 = index.files_by_author.get(a2)
    if not f1 or not f2:
        return 0.0
    if len(f2) < len(f1):
        f1, f2 = f2, f1
    return sum(1.0 / len(index.authors_by_file[f]) for f in sorted(f1) if f in f2)


# ---------------------------------------------------------------------------
# Time-zone fingerprint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimezoneVector:
    """Sparse per-author vector over the surviving zone axes.

    Entry for zone t is (author's commit count in t) / (number of authors
    active in t); zones with fewer than 2 distinct authors are dropped
    before vectors are built.
    """

    axes: tuple[str, ...]
    entries: dict[str, float]

    def norm(self) -> float:
        # sorted so the accumulation order never depends on insertion history
        return math.sqrt(sum(self.entries[k] ** 2 for k in sorted(self.entries)))


def build_timezone_vectors(
    commits: Iterable[CommitRecord], table: IdentityTable
) -> dict[int, TimezoneVector]:
    counts: dict[int, dict[str, int]] = {}
    zone_authors: dict[str, set[int]] = {}
    for commit in commits:
        ident = table.by_author(commit.author_string)
        zone = normalize_zone(commit.tz_offset)
        per_author = counts.setdefault(ident.id, {})
        per_author[zone] = per_author.get(zone, 0) + 1
        zone_authors.setdefault(zone, set()).add(ident.id)
    surviving = tuple(sorted(z for z, authors in zone_authors.items() if len(authors) >= 2))
    axis_set = set(surviving)
    vectors: dict[int, TimezoneVector] = {}
    for ident in table.identities():
        per_author = counts.get(ident.id, {})
        entries = {
            zone: n / len(zone_authors[zone])
            for zone, n in per_author.items()
            if zone in axis_set
        }
        vectors[ident.id] = TimezoneVector(axes=surviving, entries=entries)
    return vectors


def timezone_similarity(v1: TimezoneVector, v2: TimezoneVector) -> float:
    """Cosine of two zone vectors; 0 when either is the zero vector.

    Shared axes are accumulated in sorted order so the result is identical
    however the sparse entries were inserted (fresh build vs store reload)
    and symmetric to the last bit."""
    if v1.axes != v2.axes:
        raise ValueError("timezone vectors come from different corpora (axis mismatch)")
    n1 = v1.norm()
    n2 = v2.norm()
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    small, large = (v1.entries, v2.entries)
    if len(large) < len(small):
        small, large = large, small
    dot = sum(small[k] * large[k] for k in sorted(small) if k in large)
    return dot / (n1 * n2)


# ---------------------------------------------------------------------------
# Commit-message text fingerprint
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingStore:
    """Per-author document vectors plus everything needed to embed new text."""

    dim: int
    seed: int
    backend: str
    n_docs: int
    doc_freq: dict[str, int]
    vectors: dict[int, np.ndarray]

    def vector(self, author_id: int) -> np.ndarray:
        v = self.vectors.get(author_id)
        if v is None:
            return np.zeros(self.dim)
        return v


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def token_direction(token: str, seed: int, dim: int) -> np.ndarray:
    """Fixed pseudo-random direction for a token: unit-free Gaussian draw
    seeded by blake2b(token, key=seed). Independent of vocabulary order."""
    key = seed.to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    return rng.standard_normal(dim)


def _hashtfidf_vector(
    token_counts: dict[str, int], doc_freq: dict[str, int], n_docs: int, seed: int, dim: int
) -> np.ndarray:
    vec = np.zeros(dim)
    for token, tf in token_counts.items():
        idf = math.log(1.0 + n_docs / doc_freq[token])
        vec += tf * idf * token_direction(token, seed, dim)
    return vec


def build_text_embeddings(
    commits: Iterable[CommitRecord],
    table: IdentityTable,
    d: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
    backend: str = "hashtfidf",
) -> EmbeddingStore:
    """One d-vector per author from the author's pooled commit messages.

    Authors with no messages (or only token-free ones) get the zero vector,
    pushing the matching decision to string features.
    """
    if d < 2:
        raise ValueError("embedding dimension must be >= 2")
    if backend != "hashtfidf":
        raise ValueError(f"unknown embedding backend {backend!r}")
    token_counts: dict[int, dict[str, int]] = {}
    for commit in commits:
        ident = table.by_author(commit.author_string)
        counts = token_counts.setdefault(ident.id, {})
        for token in tokenize(commit.message):
            counts[token] = counts.get(token, 0) + 1
    nonempty = {aid: counts for aid, counts in token_counts.items() if counts}
    doc_freq: dict[str, int] = {}
    for counts in nonempty.values():
        for token in counts:
            doc_freq[token] = doc_freq.get(token, 0) + 1
    n_docs = len(nonempty)
    vectors: dict[int, np.ndarray] = {}
    for ident in table.identities():
        counts = nonempty.get(ident.id)
        if not counts:
            vectors[ident.id] = np.zeros(d)
        else:
            vectors[ident.id] = _hashtfidf_vector(counts, doc_freq, n_docs, seed, d)
    return EmbeddingStore(
        dim=d, seed=seed, backend=backend, n_docs=n_docs, doc_freq=doc_freq, vectors=vectors
    )


def embed_text(store: EmbeddingStore, text: str) -> np.ndarray:
    """Embed a single message with the store's vocabulary statistics.
    Tokens unseen at build time carry no weight."""
    counts: dict[str, int] = {}
    for token in tokenize(text):
        if token in store.doc_freq:
            counts[token] = counts.get(token, 0) + 1
    return _hashtfidf_vector(counts, store.doc_freq, store.n_docs, store.seed, store.dim)


def text_similarity(e1: np.ndarray, e2: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0 when either vector is zero."""
    if e1.shape != e2.shape:
        raise ValueError(f"embedding dimension mismatch: {e1.shape} vs {e2.shape}")
    n1 = float(np.linalg.norm(e1))
    n2 = float(np.linalg.norm(e2))
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    return float(np.dot(e1, e2)) / (n1 * n2)


# ---------------------------------------------------------------------------
# Commit-level matching (homonym reattribution stub)
# ---------------------------------------------------------------------------


def commit_fingerprint_match(
    commit: CommitRecord,
    candidates: Sequence[int],
    index: FileAuthorIndex,
    tzvecs: dict[int, TimezoneVector],
    embeddings: EmbeddingStore,
    weights: tuple[float, float, float] = DEFAULT_MATCH_WEIGHTS,
) -> list[tuple[int, float]]:
    """Rank candidate authors by fingerprint closeness to a single commit.

    Score is the convex combination w_f*file + w_t*tz + w_x*text where
    file = sum of W_f over the commit's files also in the candidate's file
    set, tz = candidate's vector entry at the commit's (normalized) zone
    divided by the vector norm, and text = cosine of the hash-embedded
    message against the candidate's embedding. Ties break on ascending id.
    This is the matching contract for per-commit homonym reattribution;
    the ranking weights are configurable.
    """
    if not candidates:
        raise ValueError("candidate set must be nonempty")
    w_file, w_tz, w_text = weights
    zone = normalize_zone(commit.tz_offset)
    msg_vec = embed_text(embeddings, commit.message)
    scored = []
    for cand in candidates:
        cand_files = index.files(cand)
        s_file = sum(
            1.0 / len(index.authors_by_file[f])
            for f in sorted(commit.files)
            if f in cand_files
        )
        tzv = tzvecs.get(cand)
        if tzv is not None and zone in tzv.entries:
            s_tz = tzv.entries[zone] / tzv.norm()
        else:
            s_tz = 0.0
        s_text = text_similarity(msg_vec, embeddings.vector(cand))
        scored.append((cand, w_file * s_file + w_tz * s_tz + w_text * s_text))
    scored.sort(key=lambda it: (-it[1], it[0]))
    return scored


# ---------------------------------------------------------------------------
# Fingerprint store serialization
# ---------------------------------------------------------------------------


def write_fingerprint_store(
    fh,
    index: FileAuthorIndex,
    tzvecs: dict[int, TimezoneVector],
    embeddings: EmbeddingStore,
) -> None:
    """NDJSON dump: a header line with d/seed/backend, then one line per author."""
    axes = next(iter(tzvecs.values())).axes if tzvecs else ()
    header = {
        "_header": {
            "kind": "fingerprints",
            "dim": embeddings.dim,
            "seed": embeddings.seed,
            "backend": embeddings.backend,
            "n_docs": embeddings.n_docs,
            "tz_axes": list(axes),
        }
    }
    fh.write(json.dumps(header, ensure_ascii=False) + "\n")
    fh.write(json.dumps({"_doc_freq": dict(sorted(embeddings.doc_freq.items()))}) + "\n")
    for aid in sorted(set(index.files_by_author) | set(tzvecs) | set(embeddings.vectors)):
        tzv = tzvecs.get(aid)
        row = {
            "id": aid,
            "files": sorted(index.files_by_author.get(aid, ())),
            "tz": dict(sorted(tzv.entries.items())) if tzv else {},
            "embedding": [float(x) for x in embeddings.vector(aid)],
        }
        fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_fingerprint_store(
    fh,
) -> tuple[FileAuthorIndex, dict[int, TimezoneVector], EmbeddingStore]:
    header_line = json.loads(fh.readline())
    meta = header_line["_header"]
    doc_freq = json.loads(fh.readline())["_doc_freq"]
    axes = tuple(meta["tz_axes"])
    index = FileAuthorIndex()
    tzvecs: dict[int, TimezoneVector] = {}
    vectors: dict[int, np.ndarray] = {}
    for line in fh:
        if not line.strip():
            continue
        row = json.loads(line)
        aid = row["id"]
        for path in row["files"]:
            index.files_by_author.setdefault(aid, set()).add(path)
            index.authors_by_file.setdefault(path, set()).add(aid)
        tzvecs[aid] = TimezoneVector(axes=axes, entries=dict(row["tz"]))
        vectors[aid] = np.asarray(row["embedding"], dtype=float)
    embeddings = EmbeddingStore(
        dim=meta["dim"],
        seed=meta["seed"],
        backend=meta["backend"],
        n_docs=meta["n_docs"],
        doc_freq=doc_freq,
        vectors=vectors,
    )
    return index, tzvecs, embeddings
