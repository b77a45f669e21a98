from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from idforge.evaluate import SyntheticCorpusSpec, generate_synthetic_corpus
from idforge.fingerprints import (
    build_file_author_index,
    build_text_embeddings,
    build_timezone_vectors,
)
from idforge.ingest import IdentityTable


@pytest.fixture(scope="session")
def small_corpus():
    """120 developers with the full error mix; shared by integration tests."""
    spec = SyntheticCorpusSpec(
        developers=120,
        typo=0.3,
        env_switch=0.3,
        name_reorder=0.1,
        org_alias=0.05,
        template=0.05,
        anonymous=0.05,
        seed=11,
    )
    return generate_synthetic_corpus(spec)


@pytest.fixture(scope="session")
def small_stores(small_corpus):
    table = IdentityTable.from_commits(small_corpus.commits)
    index = build_file_author_index(small_corpus.commits, table)
    tzvecs = build_timezone_vectors(small_corpus.commits, table)
    embeddings = build_text_embeddings(small_corpus.commits, table, d=64, seed=5)
    return table, index, tzvecs, embeddings
