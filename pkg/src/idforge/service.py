"""HTTP label service: the queue/labels/suggestions/retrain/clusters API
consumed by the labeler UI, plus static serving of the UI bundle.

Concurrency contract: reads are free, writes (label submissions, splits)
are serialized under one lock and applied in arrival order, and a retrain
runs as an exclusive phase that swaps the served model atomically — a
second retrain request while one is in flight gets 409.
"""

from __future__ import annotations

import json
import threading
import time
import traceback
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .active import (
    InsufficientLabels,
    LabelQueue,
    LabelStore,
    commit_spans,
    confusion_region,
    enqueue_for_labeling,
    pair_key,
    relabel_suggestions,
    train_fold_classifiers,
)
from .config import PipelineConfig
from .forest import predict_proba, train_forest
from .ingest import IdentityTable
from .pairgen import PairFeatures
from .resolve import (
    Partition,
    append_split_journal,
    apply_split,
    large_cluster_report,
)
from .stats import Stoplist

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".json": "application/json",
    ".ico": "image/x-icon",
}


class ApiError(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


def _int_param(query: dict, name: str, default: int) -> int:
    raw = query.get(name, [str(default)])[0]
    try:
        return int(raw)
    except ValueError:
        raise ApiError(422, f"{name} must be an integer, got {raw!r}")


class LabelService:
    """All mutable state behind the HTTP surface."""

    def __init__(
        self,
        table: IdentityTable,
        keys: list[tuple[int, int]],
        features_by_pair: dict[tuple[int, int], PairFeatures],
        feature_names: tuple[str, ...],
        store: LabelStore,
        config: PipelineConfig,
        spans: dict[int, tuple[int, int]] | None = None,
        affiliations: dict[str, str] | None = None,
        partition: Partition | None = None,
        split_journal=None,
        stoplist: Stoplist | None = None,
        commit_counts: dict[int, int] | None = None,
    ) -> None:
        self.table = table
        self.keys = [pair_key(*k) for k in keys]
        self.features_by_pair = features_by_pair
        self.feature_names = feature_names
        self.store = store
        self.config = config
        self.spans = spans or {}
        self.affiliations = affiliations or {}
        self.partition = partition
        self.split_journal = split_journal
        self.stoplist = stoplist
        self.commit_counts = commit_counts or {}
        self.X = np.array([features_by_pair[k].values for k in self.keys])
        self.queue = LabelQueue()
        self.model = None
        self._write_lock = threading.RLock()
        self._retraining = False

    # -- queue + labels ----------------------------------------------------

    def refresh_queue(self) -> dict:
        """Train fold classifiers on current labels and rebuild the queue
        from their confusion region. Runs as an exclusive phase: label
        submissions wait while the served model and queue are swapped."""
        with self._write_lock:
            return self._refresh_queue_locked()

    def _refresh_queue_locked(self) -> dict:
        labels = self.store.training_labels()
        labeled_keys = [k for k in self.keys if k in labels]
        unlabeled = [k for k in self.keys if k not in labels]
        key_row = {k: i for i, k in enumerate(self.keys)}
        if not unlabeled:
            self.queue = LabelQueue()
            return {"queue": 0, "region": 0}
        X_lab = self.X[[key_row[k] for k in labeled_keys]]
        y_lab = np.array([labels[k] for k in labeled_keys], dtype=np.int64)
        Xu = self.X[[key_row[k] for k in unlabeled]]
        try:
            models = train_fold_classifiers(
                X_lab, y_lab, self.config.al_classifiers, self.config.forest_params()
            )
        except (InsufficientLabels, ValueError):
            # not enough seed labels for fold classifiers: queue everything
            # in pair order at maximum uncertainty so labeling can begin
            votes = {k: [] for k in unlabeled}
            probs = {k: 0.5 for k in unlabeled}
            self.queue = enqueue_for_labeling(
                unlabeled, self.features_by_pair, self.feature_names, votes, probs,
                self.table, self.spans, self.affiliations,
            )
            return {"queue": len(self.queue), "region": len(unlabeled), "seeding": True}
        region, votes_m, probs_m = confusion_region(unlabeled, Xu, models)
        votes = {k: votes_m[i].tolist() for i, k in enumerate(unlabeled)}
        probs = {k: float(probs_m[i]) for i, k in enumerate(unlabeled)}
        self.queue = enqueue_for_labeling(
            region, self.features_by_pair, self.feature_names, votes, probs,
            self.table, self.spans, self.affiliations,
        )
        if y_lab.min() != y_lab.max():
            self.model = train_forest(
                X_lab, y_lab, self.config.forest_params(), self.feature_names
            )
        return {"queue": len(self.queue), "region": len(region)}

    def submit_label(self, payload: dict) -> dict:
        pair_id = payload.get("pair_id")
        match = payload.get("match")
        canonical = payload.get("canonical_id")
        rater = payload.get("rater", "")
        if not isinstance(match, (int, float)) or isinstance(match, bool) or not 0 <= match <= 1:
            raise ApiError(422, f"match must be a number in [0, 1], got {match!r}")
        key = self._parse_pair_id(pair_id)
        if canonical is not None:
            if not isinstance(canonical, int) or not 0 <= canonical < len(self.table):
                raise ApiError(422, f"canonical_id {canonical!r} is not an existing identity")
        with self._write_lock:
            if key not in self.queue and key not in self.store:
                raise ApiError(404, f"pair {pair_id} is not queued and has no prior judgment")
            from .forest import LabeledPair

            self.store.record(
                LabeledPair(
                    id1=key[0], id2=key[1], match=float(match),
                    canonical=canonical, rater=str(rater), timestamp=time.time(),
                )
            )
            self.queue.remove(key)
            return {"stored": len(self.store), "queue": len(self.queue)}

    def _parse_pair_id(self, pair_id) -> tuple[int, int]:
        if isinstance(pair_id, str) and "-" in pair_id:
            a, _, b = pair_id.partition("-")
            try:
                key = pair_key(int(a), int(b))
            except ValueError:
                raise ApiError(422, f"malformed pair_id {pair_id!r}")
        elif isinstance(pair_id, (list, tuple)) and len(pair_id) == 2:
            key = pair_key(int(pair_id[0]), int(pair_id[1]))
        else:
            raise ApiError(422, f"malformed pair_id {pair_id!r}")
        if key not in self.features_by_pair:
            raise ApiError(404, f"unknown pair {pair_id}")
        return key

    def suggestions(self) -> list[dict]:
        if self.model is None:
            return []
        return relabel_suggestions(self.store, self.model, self.features_by_pair)

    def retrain(self) -> dict:
        with self._write_lock:
            if self._retraining:
                raise ApiError(409, "a retrain round is already in flight")
            self._retraining = True
        try:
            return self.refresh_queue()
        finally:
            self._retraining = False

    # -- clusters ----------------------------------------------------------

    def clusters(self, min_size: int) -> list[dict]:
        if self.partition is None:
            raise ApiError(404, "no partition loaded; run resolve first")
        report = large_cluster_report(
            self.partition,
            threshold=max(min_size, 2),
            table=self.table,
            stoplist=self.stoplist,
            commit_counts=self.commit_counts,
        )
        return [
            {
                "cluster_id": entry.cluster.cluster_id,
                "size": entry.size,
                "members": entry.members,
                "suggest_dissolve": entry.suggest_dissolve,
            }
            for entry in report
        ]

    def split_cluster(self, cluster_id: int, payload: dict) -> dict:
        assignments = payload.get("assignments")
        if not isinstance(assignments, dict) or not assignments:
            raise ApiError(422, "body must carry a non-empty 'assignments' object")
        try:
            assignment = {int(k): str(v) for k, v in assignments.items()}
        except ValueError:
            raise ApiError(422, "assignment keys must be identity ids")
        with self._write_lock:
            if self.partition is None or cluster_id not in self.partition.clusters:
                raise ApiError(404, f"unknown cluster {cluster_id}")
            members = set(self.partition.clusters[cluster_id].members)
            if set(assignment) - members:
                raise ApiError(
                    409, "assignment references ids outside the cluster; reload the partition"
                )
            if members - set(assignment):
                missing = sorted(members - set(assignment))
                raise ApiError(422, f"assignment incomplete; untagged members: {missing}")
            self.partition = apply_split(self.partition, cluster_id, assignment)
            if self.split_journal is not None:
                append_split_journal(self.split_journal, cluster_id, assignment)
            return {"clusters": len(self.partition.clusters)}

    def status(self) -> dict:
        return {
            "pairs": len(self.keys),
            "labeled": len(self.store),
            "queue": len(self.queue),
            "model": self.model is not None,
            "retraining": self._retraining,
            "partition_clusters": len(self.partition.clusters) if self.partition else None,
        }


def make_handler(service: LabelService, ui_dir: str | None):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ApiError(422, f"invalid JSON body: {exc}")
            if not isinstance(payload, dict):
                raise ApiError(422, "JSON body must be an object")
            return payload

        def _static(self, path: str) -> None:
            if ui_root is None:
                self._send_json(404, {"error": "no UI bundle configured; API only"})
                return
            rel = path.lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                self._send_json(404, {"error": f"no such file {path}"})
                return
            body = target.read_bytes()
            self.send_response(200)
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            try:
                url = urlparse(self.path)
                query = parse_qs(url.query)
                if url.path == "/api/queue":
                    limit = _int_param(query, "limit", 50)
                    self._send_json(
                        200, [e.to_json() for e in service.queue.head(limit)]
                    )
                elif url.path == "/api/suggestions":
                    self._send_json(200, service.suggestions())
                elif url.path == "/api/clusters":
                    min_size = _int_param(query, "min_size", service.config.cluster_threshold)
                    self._send_json(200, service.clusters(min_size))
                elif url.path == "/api/status":
                    self._send_json(200, service.status())
                elif url.path.startswith("/api/"):
                    self._send_json(404, {"error": f"no such endpoint {url.path}"})
                else:
                    self._static(url.path)
            except ApiError as exc:
                self._send_json(exc.status, {"error": str(exc)})
            except Exception:
                self._send_json(500, {"error": traceback.format_exc(limit=3)})

        def do_POST(self) -> None:
            try:
                url = urlparse(self.path)
                if url.path == "/api/labels":
                    self._send_json(200, service.submit_label(self._read_json()))
                elif url.path == "/api/retrain":
                    self._send_json(200, service.retrain())
                elif url.path.startswith("/api/clusters/") and url.path.endswith("/split"):
                    middle = url.path[len("/api/clusters/") : -len("/split")]
                    try:
                        cluster_id = int(middle)
                    except ValueError:
                        raise ApiError(404, f"bad cluster id {middle!r}")
                    self._send_json(200, service.split_cluster(cluster_id, self._read_json()))
                else:
                    self._send_json(404, {"error": f"no such endpoint {url.path}"})
            except ApiError as exc:
                self._send_json(exc.status, {"error": str(exc)})
            except Exception:
                self._send_json(500, {"error": traceback.format_exc(limit=3)})

    return Handler


def serve(service: LabelService, host: str, port: int, ui_dir: str | None = None) -> ThreadingHTTPServer:
    """Create the HTTP server (caller decides threading/serve_forever)."""
    handler = make_handler(service, ui_dir)
    return ThreadingHTTPServer((host, port), handler)
