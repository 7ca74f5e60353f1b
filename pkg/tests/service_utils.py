"""Helpers for driving a live annotation service the way the console does."""

import time

import requests

from hiltta.engine import EngineConfig
from hiltta.service import ServiceRun


def make_service(spec, source, stream, *, timeout_s=30.0, fallback="oracle", **engine_kw):
    engine_kw.setdefault("method", "tent")
    engine_kw.setdefault("seed", spec.seed)
    engine_kw.setdefault("record_timing", False)
    cfg = EngineConfig(**engine_kw)
    return ServiceRun(
        engine_config=cfg,
        source=source,
        stream=stream,
        spec=spec,
        timeout_s=timeout_s,
        fallback=fallback,
    )


def wait_pending(base, deadline_s=20.0):
    """Poll /api/pending until requests appear or the run finishes."""
    t0 = time.monotonic()
    while time.monotonic() - t0 < deadline_s:
        pending = requests.get(f"{base}/api/pending", timeout=5).json()
        if pending:
            return pending
        progress = requests.get(f"{base}/api/progress", timeout=5).json()
        if progress["finished"]:
            return []
        time.sleep(0.01)
    raise TimeoutError("no pending annotation requests appeared")


def answer_with_truth(base, pending, stream):
    """POST the ground-truth label for every pending request."""
    truth = {}
    for batch in stream:
        for i, sid in enumerate(batch.ids):
            truth[int(sid)] = int(batch.true_labels[i])
    codes = []
    for req in pending:
        sid = req["sample_id"]
        r = requests.post(f"{base}/api/labels", json={"sample_id": sid, "label": truth[sid]}, timeout=5)
        codes.append(r.status_code)
    return codes


def drive_to_completion(run, stream, deadline_s=60.0):
    """Answer every intervention batch with ground truth until the run ends."""
    base = f"http://127.0.0.1:{run.port}"
    t0 = time.monotonic()
    while time.monotonic() - t0 < deadline_s:
        progress = requests.get(f"{base}/api/progress", timeout=5).json()
        if progress["finished"]:
            return run.join(timeout=10)
        pending = requests.get(f"{base}/api/pending", timeout=5).json()
        if pending:
            answer_with_truth(base, pending, stream)
        else:
            time.sleep(0.01)
    raise TimeoutError("run did not finish in time")
