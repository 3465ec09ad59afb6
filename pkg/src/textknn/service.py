"""HTTP facade over classify/explain/audit/incremental operations.

A single session owns the encoder, the index, and the write-ahead audit log.
Mutations (document add, relabel, class add) are logged before they are
applied and are replayed on restart, so the served index is always
base-index + log. Reads and writes share one lock: a local audit tool wants
snapshot consistency, not throughput.
"""
from __future__ import annotations

import json
import mimetypes
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import TEST, LabeledCorpus, load_corpus
from .encoder import TrainableEncoder, load_checkpoint
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicateIdError,
    EngineError,
    NotFoundError,
    UnknownIdError,
)
from .evaluator import evaluate
from .explainer import (
    DUPLICATE,
    LABEL_INCONSISTENCY,
    explain,
    find_near_duplicates,
    flag_inconsistencies,
    project_2d,
)
from .index import load_index


@dataclass
class ServeConfig:
    checkpoint: Path
    index: Path
    corpus: Path
    host: str = "127.0.0.1"
    port: int = 0
    corpus_format: str = "tsv"
    test_corpus: Optional[Path] = None
    test_format: str = "tsv"
    k: Optional[int] = None
    audit_log: Optional[Path] = None
    static_dir: Optional[Path] = None
    # externally computed 2-D coordinates (CSV id,x,y[,label]) served in
    # place of the built-in PCA, e.g. from an offline TSNE run
    projection_file: Optional[Path] = None

    def audit_path(self) -> Path:
        return Path(self.audit_log) if self.audit_log else Path(f"{self.index}.audit.jsonl")


class SessionState:
    """Mutable serving state guarded by one lock; the audit log is written
    ahead of every in-memory mutation."""

    def __init__(self, encoder, index, texts, k, audit_path, test_corpus=None,
                 external_coords=None):
        self.encoder = encoder
        self.index = index
        self.texts = dict(texts)
        if not 1 <= k <= len(index):
            raise ConfigError(f"k must lie in [1, {len(index)}], got {k}")
        self.k = k
        self.audit_path = Path(audit_path)
        self.test_corpus: Optional[LabeledCorpus] = test_corpus
        self.external_coords: Optional[dict[int, tuple[float, float]]] = external_coords
        self.lock = threading.RLock()
        self._audit_fh = None

    # -- audit -----------------------------------------------------------

    def _append_audit(self, entry: dict) -> None:
        if self._audit_fh is None:
            self._audit_fh = self.audit_path.open("a", encoding="utf-8")
        entry = {"ts": time.time(), **entry}
        self._audit_fh.write(json.dumps(entry) + "\n")
        self._audit_fh.flush()

    def close(self) -> None:
        if self._audit_fh is not None:
            self._audit_fh.close()
            self._audit_fh = None

    # -- mutations ---------------------------------------------------------

    def add_document(self, text: str, label: str, doc_id: Optional[int] = None) -> int:
        with self.lock:
            if not isinstance(text, str) or not text.strip():
                raise ConfigError("document text must be a non-empty string")
            if not isinstance(label, str) or not label:
                raise ConfigError("label must be a non-empty string")
            vector = self.encoder.encode_text(text)
            new_id = doc_id if doc_id is not None else self._next_id()
            if new_id in self.index:
                raise DuplicateIdError(f"document {new_id} already indexed")
            if label not in self.index.vocab:
                self._append_audit({"op": "add_class", "label": label})
                self.index.vocab.add(label)
            self._append_audit(
                {"op": "add_document", "id": new_id, "label": label,
                 "text": text, "vector": vector.tolist()}
            )
            self.index.add(new_id, vector, self.index.vocab.id_of(label))
            self.texts[new_id] = text
            return new_id

    def relabel(self, doc_id: int, label: str) -> None:
        with self.lock:
            if doc_id not in self.index:
                raise NotFoundError(f"document {doc_id} not in index")
            if not isinstance(label, str) or not label:
                raise ConfigError("label must be a non-empty string")
            if label not in self.index.vocab:
                self._append_audit({"op": "add_class", "label": label})
                self.index.vocab.add(label)
            self._append_audit({"op": "relabel", "id": doc_id, "label": label})
            self.index.relabel(doc_id, self.index.vocab.id_of(label))

    def _next_id(self) -> int:
        return max(self.index.ids, default=-1) + 1

    # -- reads -------------------------------------------------------------

    def classify_text(self, text: str, k: Optional[int] = None):
        with self.lock:
            use_k = self.k if k is None else k
            if not isinstance(text, str):
                raise ConfigError("text must be a string")
            return explain(self.index, self.encoder, text, use_k, self.texts)

    def neighbors_of(self, doc_id: int, k: Optional[int] = None) -> list[dict]:
        """Leave-one-out neighbors of an indexed doc (the doc itself excluded)."""
        with self.lock:
            use_k = self.k if k is None else k
            if doc_id not in self.index:
                raise NotFoundError(f"document {doc_id} not in index")
            if not 1 <= use_k <= len(self.index) - 1:
                raise ConfigError(f"k must lie in [1, {len(self.index) - 1}], got {use_k}")
            found = self.index.knn(self.index.vector_of(doc_id), use_k + 1)
            out = [n for n in found if n.id != doc_id][:use_k]
            return [
                {
                    "id": n.id,
                    "text": self.texts.get(n.id, ""),
                    "label": self.index.vocab.name_of(n.label_id),
                    "distance": n.distance,
                }
                for n in out
            ]

    def projection(self) -> list[dict]:
        """2-D coordinates per indexed doc: external file if configured
        (docs missing from it are omitted), PCA otherwise."""
        with self.lock:
            if self.external_coords is not None:
                return [
                    {"id": i, "x": self.external_coords[i][0],
                     "y": self.external_coords[i][1],
                     "label": self.index.vocab.name_of(l)}
                    for i, l in zip(self.index.ids, self.index.labels)
                    if i in self.external_coords
                ]
            coords = project_2d(self.index)
            return [
                {"id": i, "x": float(x), "y": float(y),
                 "label": self.index.vocab.name_of(l)}
                for i, l, (x, y) in zip(self.index.ids, self.index.labels, coords)
            ]

    def anomalies(self, kind: str, k: Optional[int] = None,
                  min_disagreement: float = 0.5, epsilon: float = 1e-6):
        with self.lock:
            if kind == LABEL_INCONSISTENCY:
                use_k = min(self.k if k is None else k, len(self.index) - 1)
                return flag_inconsistencies(self.index, use_k, min_disagreement)
            if kind == DUPLICATE:
                return find_near_duplicates(self.index, epsilon)
            raise ConfigError(f"unknown anomaly kind {kind!r}")

    def report(self, split: str):
        with self.lock:
            if split != TEST:
                raise ConfigError(f"only split=test is reportable, got {split!r}")
            if self.test_corpus is None:
                raise ConfigError("service started without a test corpus")
            docs = self.test_corpus.split_docs(TEST)
            return evaluate(self.index, self.encoder, docs, self.test_corpus.vocab, self.k)

    def meta(self) -> dict:
        with self.lock:
            return {
                "index_size": len(self.index),
                "dim": self.index.dim,
                "k": self.k,
                "vocab": list(self.index.vocab.names),
                "n_texts": len(self.texts),
            }


def replay_audit(state: SessionState, path: Path) -> int:
    """Apply logged mutations to the in-memory state without re-logging."""
    applied = 0
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            op = entry["op"]
            if op == "add_class":
                state.index.vocab.add(entry["label"])
            elif op == "add_document":
                state.index.vocab.add(entry["label"])
                state.index.add(
                    int(entry["id"]),
                    np.asarray(entry["vector"], dtype=np.float64),
                    state.index.vocab.id_of(entry["label"]),
                )
                state.texts[int(entry["id"])] = entry["text"]
            elif op == "relabel":
                state.index.vocab.add(entry["label"])
                state.index.relabel(int(entry["id"]), state.index.vocab.id_of(entry["label"]))
            else:
                raise ConfigError(f"unknown audit op {op!r}")
            applied += 1
    return applied


def load_session(config: ServeConfig) -> SessionState:
    """Load checkpoint + index + corpus texts, then replay the audit log."""
    params = load_checkpoint(config.checkpoint)
    index = load_index(config.index)
    if params.out_dim != index.dim:
        raise DimensionMismatchError(params.out_dim, index.dim, "checkpoint vs index")
    corpus = load_corpus(config.corpus, format=config.corpus_format)
    test_corpus = None
    if config.test_corpus is not None:
        test_corpus = load_corpus(config.test_corpus, format=config.test_format, split=TEST)
    external = None
    if config.projection_file is not None:
        external = _load_coords(config.projection_file)
    k = config.k if config.k is not None else min(5, len(index))
    state = SessionState(
        TrainableEncoder(params), index, corpus.texts(), k,
        config.audit_path(), test_corpus, external,
    )
    if state.audit_path.exists():
        replay_audit(state, state.audit_path)
    return state


def _load_coords(path: Path) -> dict[int, tuple[float, float]]:
    """CSV rows id,x,y[,label], matching the export-projection format."""
    import csv

    coords: dict[int, tuple[float, float]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["id", "x", "y"]:
            raise ConfigError(f"projection file {path} must start with id,x,y columns")
        for row in reader:
            if not row:
                continue
            coords[int(row[0])] = (float(row[1]), float(row[2]))
    if not coords:
        raise ConfigError(f"projection file {path} has no coordinate rows")
    return coords


# -- HTTP layer -------------------------------------------------------------


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    state: SessionState
    static_dir: Optional[Path]


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    # helpers

    def _json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._json(status, {"error": message})

    def _body(self) -> dict:
        ctype = self.headers.get("Content-Type", "")
        if not ctype.startswith("application/json"):
            raise ConfigError(f"Content-Type must be application/json, got {ctype!r}")
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON body: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("JSON body must be an object")
        return payload

    def _query(self) -> dict[str, str]:
        from urllib.parse import parse_qsl, urlsplit

        return dict(parse_qsl(urlsplit(self.path).query))

    def _route(self) -> str:
        from urllib.parse import urlsplit

        return urlsplit(self.path).path

    @property
    def state(self) -> SessionState:
        return self.server.state  # type: ignore[attr-defined]

    def _int(self, params: dict, key: str, required: bool = False) -> Optional[int]:
        if key not in params:
            if required:
                raise ConfigError(f"missing query parameter {key!r}")
            return None
        try:
            return int(params[key])
        except ValueError:
            raise ConfigError(f"query parameter {key!r} must be an integer") from None

    # verbs

    def do_GET(self):
        try:
            self._get(self._route(), self._query())
        except EngineError as exc:
            self._error(_status_of(exc), str(exc))
        except Exception as exc:  # pragma: no cover - programming error
            self._error(500, f"internal error: {exc}")

    def do_POST(self):
        try:
            self._post(self._route())
        except EngineError as exc:
            self._error(_status_of(exc), str(exc))
        except Exception as exc:  # pragma: no cover - programming error
            self._error(500, f"internal error: {exc}")

    def _get(self, route: str, params: dict):
        state = self.state
        if route in ("/health", "/meta"):
            self._json(200, state.meta())
        elif route == "/neighbors":
            doc_id = self._int(params, "id", required=True)
            k = self._int(params, "k")
            self._json(200, {"id": doc_id, "neighbors": state.neighbors_of(doc_id, k)})
        elif route == "/projection":
            self._json(200, {"points": state.projection()})
        elif route == "/anomalies":
            kind = params.get("kind", LABEL_INCONSISTENCY)
            flags = state.anomalies(
                kind,
                self._int(params, "k"),
                float(params.get("min_disagreement", 0.5)),
                float(params.get("epsilon", 1e-6)),
            )
            self._json(200, {"kind": kind, "flags": [f.to_json_dict() for f in flags]})
        elif route == "/report":
            report = state.report(params.get("split", TEST))
            self._json(200, report.to_json_dict())
        elif route == "/" or route.startswith("/ui"):
            self._static(route)
        else:
            self._error(404, f"no such endpoint {route}")

    def _post(self, route: str):
        state = self.state
        if route == "/classify":
            payload = self._body()
            if "text" not in payload:
                raise ConfigError("missing field 'text'")
            k = payload.get("k")
            if k is not None and not isinstance(k, int):
                raise ConfigError("field 'k' must be an integer")
            prediction, record = state.classify_text(payload["text"], k)
            self._json(200, {
                "prediction": {
                    "label": record.predicted_label,
                    "k": record.k,
                    "votes": record.votes,
                },
                "explanation": record.to_json_dict(),
                "index_size": len(state.index),
            })
        elif route == "/documents":
            payload = self._body()
            for fld in ("text", "label"):
                if fld not in payload:
                    raise ConfigError(f"missing field {fld!r}")
            doc_id = payload.get("id")
            if doc_id is not None and not isinstance(doc_id, int):
                raise ConfigError("field 'id' must be an integer")
            new_id = state.add_document(payload["text"], payload["label"], doc_id)
            self._json(201, {"id": new_id, "index_size": len(state.index)})
        elif route == "/relabel":
            payload = self._body()
            if "id" not in payload or "label" not in payload:
                raise ConfigError("fields 'id' and 'label' are required")
            if not isinstance(payload["id"], int):
                raise ConfigError("field 'id' must be an integer")
            state.relabel(payload["id"], payload["label"])
            self._json(200, {
                "id": payload["id"],
                "label": payload["label"],
                "index_size": len(state.index),
            })
        else:
            self._error(404, f"no such endpoint {route}")

    def _static(self, route: str):
        static_dir: Optional[Path] = getattr(self.server, "static_dir", None)
        if static_dir is None:
            self._json(200, {"service": "textknn", "ui": "not bundled"})
            return
        rel = route[3:] if route.startswith("/ui") else route
        rel = rel.lstrip("/") or "index.html"
        target = (static_dir / rel).resolve()
        if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
            self._error(404, f"no such asset {rel}")
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def _status_of(exc: EngineError) -> int:
    if isinstance(exc, (NotFoundError, UnknownIdError)):
        return 404
    if isinstance(exc, DuplicateIdError):
        return 409
    return 400


class ClassifierService:
    """Running HTTP server plus its session state."""

    def __init__(self, config: ServeConfig):
        self.state = load_session(config)
        self._server = _Server((config.host, config.port), _Handler)
        self._server.state = self.state
        self._server.static_dir = (
            Path(config.static_dir) if config.static_dir else None
        )
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    def start(self) -> "ClassifierService":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self.state.close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve(config: ServeConfig) -> ClassifierService:
    """Load state and return a started service (background thread)."""
    return ClassifierService(config).start()
