"""HTTP facade over the engine's labeler interface.

The engine runs in a worker thread; on each intervention batch its labeler
publishes the selected samples as pending annotation requests and blocks
until a human posts all K labels or the timeout fires (then the configured
fallback kicks in). A small JSON protocol serves the console:

    GET  /api/session   {session_id, num_classes, class_names, batch_index, timeout_s}
    GET  /api/pending   [{sample_id, point, background, top3, batch_index}, ...]
    POST /api/labels    {sample_id, label} -> 202 (409 duplicate, 404 unknown, 422 range)
    GET  /api/progress  {labeled, pending, batch_index, overall_error_so_far, finished}

Static console assets are served at /.
"""

from __future__ import annotations

import json
import mimetypes
import threading
import time
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .core import Batch
from .engine import LabelQuery, LabelResult, run_stream
from .stream import class_means

FALLBACK_ORACLE = "oracle"
FALLBACK_SKIP = "skip_supervised"


def display_projection(spec) -> np.ndarray:
    """Fixed D x 2 projection: the plane spanned by the class means."""
    means = class_means(spec)
    _, _, vt = np.linalg.svd(means - means.mean(axis=0), full_matrices=False)
    proj = np.zeros((spec.input_dim, 2))
    proj[:, : min(2, vt.shape[0])] = vt[: min(2, vt.shape[0])].T[:, :2]
    return proj


class AnnotationSession:
    """Single-run annotation state; every access goes through the lock."""

    def __init__(self, num_classes: int, projection: np.ndarray, timeout_s: float, fallback: str):
        if fallback not in (FALLBACK_ORACLE, FALLBACK_SKIP):
            raise ValueError(f"unknown fallback policy '{fallback}'")
        self.session_id = uuid.uuid4().hex[:12]
        self.num_classes = num_classes
        self.class_names = [f"class_{c}" for c in range(num_classes)]
        self.projection = projection
        self.timeout_s = timeout_s
        self.fallback = fallback
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.pending: dict[int, dict] = {}
        self.received: dict[int, int] = {}
        self.k_current = 0
        self.batch_index = -1
        self.overall_error = 0.0
        self.finished = False
        self.opened_batches: list[int] = []

    # -- engine side ---------------------------------------------------

    def open_batch(self, batch: Batch, queries: list[LabelQuery]) -> None:
        background = np.round(batch.x @ self.projection, 4).tolist()
        with self.lock:
            self.opened_batches.append(batch.index)
            self.batch_index = batch.index
            self.k_current = len(queries)
            self.received = {}
            self.pending = {}
            for q in queries:
                order = np.argsort(-q.posterior)[:3]
                self.pending[q.sample_id] = {
                    "sample_id": q.sample_id,
                    "point": np.round(np.asarray(q.x) @ self.projection, 4).tolist(),
                    "background": background,
                    "top3": [
                        {"label": int(c), "name": self.class_names[int(c)], "prob": round(float(q.posterior[c]), 4)}
                        for c in order
                    ],
                    "batch_index": batch.index,
                }

    def wait_for_labels(self) -> dict[int, int]:
        deadline = time.monotonic() + self.timeout_s
        with self.lock:
            while self.pending and time.monotonic() < deadline:
                self.cond.wait(timeout=min(0.25, max(0.0, deadline - time.monotonic())))
            got = dict(self.received)
            self.pending = {}
            self.received = {}
            self.k_current = 0
            return got

    def observe(self, report, summary) -> None:
        with self.lock:
            self.batch_index = report.batch_index
            self.overall_error = summary.overall_error_pct

    def finish(self) -> None:
        with self.lock:
            self.finished = True
            self.cond.notify_all()

    # -- HTTP side -----------------------------------------------------

    def submit(self, sample_id, label) -> tuple[int, str]:
        if not isinstance(sample_id, int) or isinstance(sample_id, bool):
            return 400, "sample_id must be an integer"
        if not isinstance(label, int) or isinstance(label, bool):
            return 422, "label must be an integer class index"
        if not 0 <= label < self.num_classes:
            return 422, f"label {label} outside 0..{self.num_classes - 1}"
        with self.lock:
            if sample_id in self.received:
                return 409, "already labeled (first label kept)"
            if sample_id not in self.pending:
                return 404, f"sample {sample_id} is not awaiting annotation"
            self.received[sample_id] = label
            del self.pending[sample_id]
            self.cond.notify_all()
            return 202, "accepted"

    def snapshot_session(self) -> dict:
        with self.lock:
            return {
                "session_id": self.session_id,
                "num_classes": self.num_classes,
                "class_names": self.class_names,
                "batch_index": self.batch_index,
                "timeout_s": self.timeout_s,
            }

    def snapshot_pending(self) -> list[dict]:
        with self.lock:
            return list(self.pending.values())

    def snapshot_progress(self) -> dict:
        with self.lock:
            return {
                "labeled": len(self.received),
                "pending": len(self.pending),
                "batch_index": self.batch_index,
                "overall_error_so_far": round(self.overall_error, 4),
                "finished": self.finished,
            }


class RemoteLabeler:
    """Engine-facing labeler that blocks on the annotation session."""

    def __init__(self, session: AnnotationSession):
        self.session = session

    def label(self, batch: Batch, queries: list[LabelQuery]) -> LabelResult:
        self.session.open_batch(batch, queries)
        got = self.session.wait_for_labels()
        missing = [q.sample_id for q in queries if q.sample_id not in got]
        if not missing:
            return LabelResult(labels=got, fallback=False)
        if self.session.fallback == FALLBACK_ORACLE:
            pos = {int(sid): i for i, sid in enumerate(batch.ids)}
            for sid in missing:
                got[sid] = int(batch.true_labels[pos[sid]])
            return LabelResult(labels=got, fallback=True)
        return LabelResult(labels=got, fallback=True, allow_supervised=False)


def _make_handler(session: AnnotationSession, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass  # keep test output quiet

        def _json(self, code: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/api/session":
                return self._json(200, session.snapshot_session())
            if self.path == "/api/pending":
                return self._json(200, session.snapshot_pending())
            if self.path == "/api/progress":
                return self._json(200, session.snapshot_progress())
            if self.path.startswith("/api/"):
                return self._json(404, {"error": f"no such endpoint {self.path}"})
            return self._static()

        def do_POST(self):
            if self.path != "/api/labels":
                return self._json(404, {"error": f"no such endpoint {self.path}"})
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                sample_id = payload["sample_id"]
                label = payload["label"]
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                return self._json(400, {"error": f"malformed request: {exc}"})
            code, message = session.submit(sample_id, label)
            key = "error" if code >= 400 else "status"
            return self._json(code, {key: message})

        def _static(self):
            if static_dir is None:
                return self._json(200, {"status": "console assets not configured"})
            rel = self.path.lstrip("/") or "index.html"
            target = (static_dir / rel).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self.send_response(404)
                self.end_headers()
                return None
            body = target.read_bytes()
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return None

    return Handler


class ServiceRun:
    """A live engine + HTTP service pair, also used directly by the tests."""

    def __init__(self, engine_config, source, stream, spec, timeout_s, fallback, static_dir=None, port=0):
        self.session = AnnotationSession(
            num_classes=spec.num_classes,
            projection=display_projection(spec),
            timeout_s=timeout_s,
            fallback=fallback,
        )
        self.labeler = RemoteLabeler(self.session)
        static = Path(static_dir) if static_dir else None
        if static is not None and not static.is_dir():
            static = None
        self.server = ThreadingHTTPServer(("127.0.0.1", port), _make_handler(self.session, static))
        self.reports = []
        self.summary = None
        self.error: Exception | None = None
        self._engine_config = engine_config
        self._source = source
        self._stream = stream
        self._threads: list[threading.Thread] = []

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    def _run_engine(self):
        try:
            self.reports, self.summary = run_stream(
                self._engine_config,
                self._stream,
                self.labeler,
                self._source,
                on_report=self.session.observe,
            )
        except Exception as exc:  # surfaced by join()
            self.error = exc
        finally:
            self.session.finish()

    def start(self):
        server_thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        engine_thread = threading.Thread(target=self._run_engine, daemon=True)
        self._threads = [server_thread, engine_thread]
        server_thread.start()
        engine_thread.start()
        return self

    def join(self, timeout=None):
        self._threads[1].join(timeout)
        if self.error is not None:
            raise self.error
        return self.reports, self.summary

    def shutdown(self):
        self.server.shutdown()
        self.server.server_close()


def serve_run(cfg, source, stream) -> int:
    """CLI entry: block until the stream is fully processed, then report."""
    from .bench import summary_rows, write_results_csv

    run = ServiceRun(
        engine_config=cfg.engine_config(),
        source=source,
        stream=stream,
        spec=cfg.stream_spec(),
        timeout_s=cfg.timeout_s,
        fallback=cfg.fallback,
        static_dir=cfg.static_dir,
        port=cfg.port,
    )
    run.start()
    print(f"annotation console at http://127.0.0.1:{run.port}/ "
          f"(timeout {cfg.timeout_s:.0f}s per batch, fallback={cfg.fallback})")
    reports, summary = run.join()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(out / "results.csv", summary_rows(cfg.run_label, summary))
    print(f"wrote {out / 'results.csv'}")
    print(f"overall error {summary.overall_error_pct:.2f}% ({summary.labels_used} labels)")
    time.sleep(cfg.linger_s)
    run.shutdown()
    return 0
