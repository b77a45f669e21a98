from __future__ import annotations

import hashlib
import io
import math

import numpy as np
import pytest

from idforge.fingerprints import (
    EmbeddingStore,
    TimezoneVector,
    build_file_author_index,
    build_text_embeddings,
    build_timezone_vectors,
    commit_fingerprint_match,
    embed_text,
    file_similarity,
    normalize_zone,
    read_fingerprint_store,
    text_similarity,
    timezone_similarity,
    tokenize,
    write_fingerprint_store,
)
from idforge.ingest import CommitRecord, IdentityTable


def commit(sha, author, files, tz="+0000", msg="", ts=1500000000):
    return CommitRecord(
        sha=sha,
        author_string=author,
        timestamp=ts,
        tz_offset=tz,
        files=frozenset(files),
        message=msg,
    )


def build(commits):
    table = IdentityTable.from_commits(commits)
    return table, build_file_author_index(commits, table)


def test_file_weights():
    commits = [
        commit("1", "a <a@x>", ["shared.py", "only_a.py"]),
        commit("2", "b <b@x>", ["shared.py"]),
    ]
    table, index = build(commits)
    assert index.weight("shared.py") == 0.5
    assert index.weight("only_a.py") == 1.0


def test_file_similarity_examples():
    commits = [
        commit("1", "a <a@x>", ["f1", "f2", "alone_a"]),
        commit("2", "b <b@x>", ["f1", "f2", "alone_b"]),
        commit("3", "c <c@x>", ["f2"]),
        commit("4", "d <d@x>", ["f2", "other"]),
    ]
    table, index = build(commits)
    a, b, c = (table.by_author(s).id for s in ("a <a@x>", "b <b@x>", "c <c@x>"))
    # f1 touched by {a,b}: weight 1/2; f2 touched by {a,b,c,d}: weight 1/4
    assert file_similarity(a, b, index) == pytest.approx(0.5 + 0.25)
    assert file_similarity(a, c, index) == pytest.approx(0.25)


def test_file_similarity_disjoint_and_missing():
    commits = [commit("1", "a <a@x>", ["f1"]), commit("2", "b <b@x>", ["f2"])]
    table, index = build(commits)
    a, b = table.by_author("a <a@x>").id, table.by_author("b <b@x>").id
    assert file_similarity(a, b, index) == 0.0
    assert file_similarity(a, 999, index) == 0.0  # absent id = empty file set


def test_file_similarity_symmetric_and_monotone():
    base = [
        commit("1", "a <a@x>", ["f1", "f2"]),
        commit("2", "b <b@x>", ["f1", "f2"]),
    ]
    table, index = build(base)
    a, b = table.by_author("a <a@x>").id, table.by_author("b <b@x>").id
    before = file_similarity(a, b, index)
    assert before == file_similarity(b, a, index)
    # an unrelated author touching an unrelated file changes nothing
    more = base + [commit("3", "c <c@x>", ["f9"])]
    table2, index2 = build(more)
    assert file_similarity(a, b, index2) == before
    # an author joining a shared file strictly decreases the pair's score
    dilute = base + [commit("3", "c <c@x>", ["f1"])]
    table3, index3 = build(dilute)
    assert file_similarity(a, b, index3) < before


def test_normalize_zone_variants():
    assert normalize_zone("+0200") == "+0200"
    assert normalize_zone("0200") == "+0200"
    assert normalize_zone("+02:00") == "+0200"
    assert normalize_zone("UTC+2:00") == "+0200"
    assert normalize_zone("GMT-0500") == "-0500"
    assert normalize_zone("-05") == "-0500"
    assert normalize_zone("EST") == "EST"
    assert normalize_zone("") == ""
    assert normalize_zone("+9999") == "+9999"  # out of range stays verbatim


def test_timezone_vectors_shared_zone():
    commits = [
        commit("1", "a <a@x>", ["f"], tz="+0200"),
        commit("2", "a <a@x>", ["f"], tz="+0200"),
        commit("3", "b <b@x>", ["f"], tz="+0200"),
    ]
    table = IdentityTable.from_commits(commits)
    vecs = build_timezone_vectors(commits, table)
    a, b = table.by_author("a <a@x>").id, table.by_author("b <b@x>").id
    assert vecs[a].axes == ("+0200",)
    assert vecs[a].entries == {"+0200": 2 / 2}  # 2 commits / 2 authors
    assert vecs[b].entries == {"+0200": 1 / 2}


def test_single_author_zone_dropped():
    commits = [
        commit("1", "a <a@x>", ["f"], tz="+0200"),
        commit("2", "b <b@x>", ["f"], tz="+0200"),
        commit("3", "a <a@x>", ["f"], tz="+1400"),  # only author a here
    ]
    table = IdentityTable.from_commits(commits)
    vecs = build_timezone_vectors(commits, table)
    assert "+1400" not in vecs[0].axes
    assert set(vecs[0].entries) == {"+0200"}


def test_zone_normalization_pools_variant_spellings():
    commits = [
        commit("1", "a <a@x>", ["f"], tz="+02:00"),
        commit("2", "b <b@x>", ["f"], tz="UTC+0200"),
    ]
    table = IdentityTable.from_commits(commits)
    vecs = build_timezone_vectors(commits, table)
    assert vecs[0].axes == ("+0200",)


def test_author_without_surviving_zone_gets_zero_vector():
    commits = [
        commit("1", "a <a@x>", ["f"], tz="+0200"),
        commit("2", "b <b@x>", ["f"], tz="+0200"),
        commit("3", "c <c@x>", ["f"], tz="WEIRD"),
    ]
    table = IdentityTable.from_commits(commits)
    vecs = build_timezone_vectors(commits, table)
    c = table.by_author("c <c@x>").id
    assert vecs[c].entries == {}
    assert timezone_similarity(vecs[0], vecs[c]) == 0.0


def test_timezone_cosine():
    axes = ("+0000", "+0200")
    v1 = TimezoneVector(axes=axes, entries={"+0000": 1.0, "+0200": 1.0})
    v2 = TimezoneVector(axes=axes, entries={"+0000": 1.0})
    v3 = TimezoneVector(axes=axes, entries={"+0200": 3.0})
    assert timezone_similarity(v1, v1) == pytest.approx(1.0)
    assert timezone_similarity(v2, v3) == 0.0
    assert timezone_similarity(v1, v2) == pytest.approx(1 / math.sqrt(2))


def test_timezone_axis_mismatch_rejected():
    v1 = TimezoneVector(axes=("+0000",), entries={"+0000": 1.0})
    v2 = TimezoneVector(axes=("+0100",), entries={"+0100": 1.0})
    with pytest.raises(ValueError):
        timezone_similarity(v1, v2)


def test_cosine_scale_invariance():
    axes = ("+0000", "+0200")
    v1 = TimezoneVector(axes=axes, entries={"+0000": 1.0, "+0200": 2.0})
    v2 = TimezoneVector(axes=axes, entries={"+0000": 0.5, "+0200": 0.1})
    scaled = TimezoneVector(axes=axes, entries={k: 7.5 * v for k, v in v2.entries.items()})
    assert timezone_similarity(v1, scaled) == pytest.approx(timezone_similarity(v1, v2))


# ---------------------------------------------------------------------------
# Text embeddings
# ---------------------------------------------------------------------------


def _oracle_embedding(messages_by_author, author, seed, dim):
    """Independent re-derivation of the documented hash projection."""
    token_counts = {}
    for msg in messages_by_author[author]:
        import re

        for token in re.findall(r"\w+", msg.lower()):
            token_counts[token] = token_counts.get(token, 0) + 1
    all_tokens = {}
    for who, msgs in messages_by_author.items():
        toks = set()
        for msg in msgs:
            import re

            toks.update(re.findall(r"\w+", msg.lower()))
        if toks:
            all_tokens[who] = toks
    n_docs = len(all_tokens)
    vec = np.zeros(dim)
    for token, tf in token_counts.items():
        df = sum(1 for toks in all_tokens.values() if token in toks)
        key = seed.to_bytes(8, "little")
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        direction = rng.standard_normal(dim)
        vec += tf * math.log(1 + n_docs / df) * direction
    return vec


def test_embeddings_match_hash_projection_oracle():
    msgs = {
        "a <a@x>": ["fix the parser bug", "parser cleanup"],
        "b <b@x>": ["add streaming api", "api docs"],
        "c <c@x>": ["fix docs typo"],
    }
    commits = [
        commit(f"{i}", who, ["f"], msg=m)
        for i, (who, m) in enumerate(
            (who, m) for who, ms in msgs.items() for m in ms
        )
    ]
    table = IdentityTable.from_commits(commits)
    store = build_text_embeddings(commits, table, d=16, seed=42)
    for who, messages in msgs.items():
        expected = _oracle_embedding(msgs, who, seed=42, dim=16)
        got = store.vector(table.by_author(who).id)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_embeddings_deterministic_and_message_driven():
    commits_a = [commit("1", "a <a@x>", ["f"], msg="exactly the same words")]
    commits_b = [commit("2", "b <b@x>", ["g"], msg="exactly the same words")]
    both = commits_a + commits_b
    table = IdentityTable.from_commits(both)
    store1 = build_text_embeddings(both, table, d=32, seed=7)
    store2 = build_text_embeddings(both, table, d=32, seed=7)
    a, b = table.by_author("a <a@x>").id, table.by_author("b <b@x>").id
    np.testing.assert_array_equal(store1.vector(a), store1.vector(b))
    np.testing.assert_array_equal(store1.vector(a), store2.vector(a))


def test_author_with_no_messages_gets_zero_vector():
    commits = [
        commit("1", "a <a@x>", ["f"], msg=""),
        commit("2", "b <b@x>", ["f"], msg="actual words"),
    ]
    table = IdentityTable.from_commits(commits)
    store = build_text_embeddings(commits, table, d=8, seed=0)
    assert not store.vector(table.by_author("a <a@x>").id).any()


def test_embedding_dimension_validated():
    with pytest.raises(ValueError):
        build_text_embeddings([], IdentityTable(), d=1)


def test_text_similarity_contract():
    e = np.array([1.0, 2.0, 3.0])
    assert text_similarity(e, e) == pytest.approx(1.0)
    assert text_similarity(e, -e) == pytest.approx(-1.0)
    assert text_similarity(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 0.0
    assert text_similarity(e, np.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        text_similarity(e, np.zeros(4))


# ---------------------------------------------------------------------------
# Commit-level fingerprint matching
# ---------------------------------------------------------------------------


def _match_fixture():
    commits = [
        commit("1", "a <a@x>", ["a_only.py"], tz="+0100", msg="alpha words"),
        commit("2", "a <a@x>", ["a_only.py"], tz="+0100", msg="alpha again"),
        commit("3", "b <b@x>", ["b_only.py"], tz="+0900", msg="beta words"),
        commit("4", "c <c@x>", ["b_only.py"], tz="+0900", msg="beta words too"),
        commit("5", "c <c@x>", ["a_only.py"], tz="+0100", msg="alpha words"),
    ]
    table = IdentityTable.from_commits(commits)
    index = build_file_author_index(commits, table)
    tzvecs = build_timezone_vectors(commits, table)
    embeddings = build_text_embeddings(commits, table, d=16, seed=3)
    return commits, table, index, tzvecs, embeddings


def test_match_single_candidate():
    commits, table, index, tzvecs, embeddings = _match_fixture()
    probe = commit("x", "who <w@x>", ["b_only.py"], tz="+0900", msg="beta")
    ranked = commit_fingerprint_match(probe, [2], index, tzvecs, embeddings)
    assert ranked[0][0] == 2


def test_match_exclusive_files_dominate():
    commits = [
        commit("1", "a <a@x>", ["a_exclusive.py"]),
        commit("2", "b <b@x>", ["b_exclusive.py"]),
    ]
    table = IdentityTable.from_commits(commits)
    index = build_file_author_index(commits, table)
    tzvecs = build_timezone_vectors(commits, table)
    embeddings = build_text_embeddings(commits, table, d=8, seed=0)
    a = table.by_author("a <a@x>").id
    b = table.by_author("b <b@x>").id
    probe = commit("x", "who <w@x>", ["a_exclusive.py"])
    ranked = commit_fingerprint_match(probe, [b, a], index, tzvecs, embeddings)
    assert ranked[0][0] == a


def test_match_all_ties_fall_back_to_ascending_id():
    commits, table, index, tzvecs, embeddings = _match_fixture()
    probe = commit("x", "who <w@x>", ["nowhere.py"], tz="NOPE", msg="")
    ranked = commit_fingerprint_match(probe, [2, 0, 1], index, tzvecs, embeddings)
    assert [r[0] for r in ranked] == [0, 1, 2]


def test_match_argmax_scale_invariant():
    commits, table, index, tzvecs, embeddings = _match_fixture()
    probe = commit("x", "who <w@x>", ["a_only.py"], tz="+0100", msg="alpha words")
    base = commit_fingerprint_match(probe, [0, 1, 2], index, tzvecs, embeddings)
    scaled = commit_fingerprint_match(
        probe, [0, 1, 2], index, tzvecs, embeddings, weights=(2 / 3, 2 / 3, 2 / 3)
    )
    assert [r[0] for r in base] == [r[0] for r in scaled]


def test_match_requires_candidates():
    commits, table, index, tzvecs, embeddings = _match_fixture()
    with pytest.raises(ValueError):
        commit_fingerprint_match(commits[0], [], index, tzvecs, embeddings)


def test_fingerprint_store_roundtrip(small_corpus, small_stores):
    table, index, tzvecs, embeddings = small_stores
    buf = io.StringIO()
    write_fingerprint_store(buf, index, tzvecs, embeddings)
    buf.seek(0)
    index2, tzvecs2, embeddings2 = read_fingerprint_store(buf)
    assert index2.files_by_author == index.files_by_author
    assert index2.authors_by_file == index.authors_by_file
    some = sorted(tzvecs)[:20]
    for aid in some:
        assert tzvecs2[aid] == tzvecs[aid]
        np.testing.assert_array_equal(embeddings2.vector(aid), embeddings.vector(aid))
    assert embeddings2.doc_freq == embeddings.doc_freq


def test_single_shared_exclusive_file_scores_half():
    commits = [
        commit("1", "a <a@x>", ["pair_only.py", "noise_a.py"]),
        commit("2", "b <b@x>", ["pair_only.py", "noise_b.py"]),
    ]
    table, index = build(commits)
    a, b = table.by_author("a <a@x>").id, table.by_author("b <b@x>").id
    assert file_similarity(a, b, index) == 0.5


def test_dropping_subthreshold_zone_preserves_surviving_entries():
    shared = [
        commit("1", "a <a@x>", ["f"], tz="+0200"),
        commit("2", "a <a@x>", ["f"], tz="+0200"),
        commit("3", "b <b@x>", ["f"], tz="+0200"),
    ]
    with_stray = shared + [commit("4", "a <a@x>", ["f"], tz="+1345")]
    table1 = IdentityTable.from_commits(shared)
    table2 = IdentityTable.from_commits(with_stray)
    vecs1 = build_timezone_vectors(shared, table1)
    vecs2 = build_timezone_vectors(with_stray, table2)
    assert vecs1[0].axes == vecs2[0].axes == ("+0200",)
    assert vecs1[0].entries == vecs2[0].entries
    assert vecs1[1].entries == vecs2[1].entries


def test_unknown_embedding_backend_rejected():
    with pytest.raises(ValueError):
        build_text_embeddings([], IdentityTable(), d=8, backend="doc2vec")


def test_file_similarity_independent_of_commit_order():
    base = [
        commit("1", "a <a@x>", ["m1", "m2", "m3"]),
        commit("2", "b <b@x>", ["m2", "m3", "m4"]),
        commit("3", "c <c@x>", ["m3"]),
    ]
    table1, index1 = build(base)
    table2, index2 = build(list(reversed(base)))
    a1, b1 = table1.by_author("a <a@x>").id, table1.by_author("b <b@x>").id
    a2, b2 = table2.by_author("a <a@x>").id, table2.by_author("b <b@x>").id
    assert file_similarity(a1, b1, index1) == file_similarity(a2, b2, index2)
