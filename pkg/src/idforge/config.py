"""Pipeline configuration: one JSON file, flag overrides win, one root seed."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

DEFAULT_STORE = "store"
STORE_ENV = "IDFORGE_STORE"


@dataclass
class PipelineConfig:
    store: str = DEFAULT_STORE
    seed: int = 0

    # candidate-pair generation
    strategy: str = "blocked"
    all_pairs_cap: int = 20_000
    max_gram_block: int = 1_000
    include_levenshtein: bool = False

    # text embedding backend
    embed_dim: int = 200
    embed_backend: str = "hashtfidf"

    # forest hyperparameters
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None
    link_threshold: float = 0.5
    downsample_negatives: float | None = None

    # active learning
    al_classifiers: int = 3
    al_rounds: int = 5

    # cluster review
    cluster_threshold: int = 10

    # network impact
    measures: list[str] = field(
        default_factory=lambda: ["degree", "clustering", "constraint", "eigenvector"]
    )
    reductions: dict[str, str] = field(
        default_factory=lambda: {
            "degree": "sum",
            "clustering": "mean",
            "constraint": "mean",
            "eigenvector": "mean",
        }
    )

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None) -> "PipelineConfig":
        """Defaults <- config file <- explicit overrides, in that order.
        The store root additionally honors the IDFORGE_STORE variable."""
        values: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(loaded) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(loaded)
        env_store = os.environ.get(STORE_ENV)
        if env_store and "store" not in values:
            values["store"] = env_store
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls(**values)

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def forest_params(self):
        from .forest import ForestParams

        return ForestParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_leaf=self.min_leaf,
            features_per_split=self.features_per_split,
            seed=self.seed,
            link_threshold=self.link_threshold,
            downsample_negatives=self.downsample_negatives,
        )
