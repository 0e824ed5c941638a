"""Eval HTTP API serving human-annotation tasks and the annotator UI.

Single-site research tool: a threading stdlib HTTP server with three JSON
endpoints and optional static-file serving for the browser UI. Scores go
to an append-only JSONL log; the effective score for a (task, label,
annotator) key is the last one written.

  GET  /tasks/next?annotator=ID  -> next task payload for ID, or 204
  POST /scores                   -> {task_id, label, score, annotator}, 201
  GET  /progress                 -> task/score counts

When a shared token is configured, API requests must carry it in the
X-Eval-Token header. Static files stay open so the login page can load.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping, Optional, Sequence
from urllib.parse import parse_qs, urlparse

TOKEN_HEADER = "X-Eval-Token"
LABELS = ("A", "B")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class EvalState:
    """Task queue plus append-only score log, shared across handler threads."""

    def __init__(
        self,
        tasks: Sequence[Mapping],
        score_log: str | Path,
        *,
        token: Optional[str] = None,
        static_dir: str | Path | None = None,
    ) -> None:
        self.tasks = [dict(t) for t in tasks]
        seen: set[str] = set()
        for task in self.tasks:
            task_id = task.get("task_id")
            if not task_id or task_id in seen:
                raise ValueError(f"task payloads must carry unique task_ids, bad: {task_id!r}")
            seen.add(task_id)
        self.score_log = Path(score_log)
        self.token = token
        self.static_dir = Path(static_dir) if static_dir else None
        self._lock = threading.Lock()
        # (task_id, label, annotator) -> score; replayed from an existing log
        # so a restarted server keeps its progress.
        self._effective: dict[tuple[str, str, str], int] = {}
        if self.score_log.exists():
            for line in self.score_log.read_text(encoding="utf-8").split("\n"):
                if not line.strip():
                    continue
                row = json.loads(line)
                self._effective[(row["task_id"], row["label"], row["annotator"])] = int(
                    row["score"]
                )

    def next_task(self, annotator: str) -> Optional[dict]:
        with self._lock:
            for task in self.tasks:
                scored = {
                    label
                    for (task_id, label, who) in self._effective
                    if task_id == task["task_id"] and who == annotator
                }
                if not all(label in scored for label in LABELS):
                    return task
        return None

    def record_score(self, task_id: str, label: str, score: int, annotator: str) -> bool:
        """Append one score; returns True when it replaced an earlier one."""
        with self._lock:
            key = (task_id, label, annotator)
            replaced = key in self._effective
            self._effective[key] = score
            line = json.dumps(
                {
                    "task_id": task_id,
                    "label": label,
                    "score": score,
                    "annotator": annotator,
                    "timestamp": _utc_now(),
                },
                ensure_ascii=False,
            )
            with self.score_log.open("a", encoding="utf-8") as log:
                log.write(line + "\n")
        return replaced

    def progress(self) -> dict:
        with self._lock:
            per_task: dict[str, set[str]] = {t["task_id"]: set() for t in self.tasks}
            per_annotator: dict[str, int] = {}
            for task_id, label, annotator in self._effective:
                if task_id in per_task:
                    per_task[task_id].add(label)
                per_annotator[annotator] = per_annotator.get(annotator, 0) + 1
            completed = sum(
                1 for labels in per_task.values() if all(l in labels for l in LABELS)
            )
            return {
                "total_tasks": len(self.tasks),
                "completed_tasks": completed,
                "scores_recorded": len(self._effective),
                "annotators": per_annotator,
            }

    def effective_rows(self) -> list[dict]:
        """Final score per (task, label, annotator), for import."""
        with self._lock:
            return [
                {"task_id": t, "label": l, "score": s, "annotator": a}
                for (t, l, a), s in self._effective.items()
            ]


def effective_score_rows(score_log: str | Path) -> list[dict]:
    """Replay a score log into last-write-wins rows, first-seen order."""
    effective: dict[tuple[str, str, str], int] = {}
    path = Path(score_log)
    if not path.exists():
        return []
    for line in path.read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        row = json.loads(line)
        effective[(row["task_id"], row["label"], row["annotator"])] = int(row["score"])
    return [
        {"task_id": t, "label": l, "score": s, "annotator": a}
        for (t, l, a), s in effective.items()
    ]


class _EvalHandler(BaseHTTPRequestHandler):
    state: EvalState  # assigned by make_server

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        if self.state.token is None:
            return True
        return self.headers.get(TOKEN_HEADER) == self.state.token

    def _serve_static(self, path: str) -> None:
        root = self.state.static_dir
        if root is None:
            self._send_json(404, {"error": "not found"})
            return
        relative = path.lstrip("/") or "index.html"
        target = (root / relative).resolve()
        if root.resolve() not in target.parents and target != root.resolve():
            self._send_json(404, {"error": "not found"})
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 - stdlib naming
        url = urlparse(self.path)
        if url.path == "/tasks/next":
            if not self._authorized():
                self._send_json(401, {"error": "missing or wrong token"})
                return
            annotator = (parse_qs(url.query).get("annotator") or [""])[0].strip()
            if not annotator:
                self._send_json(400, {"error": "annotator query parameter required"})
                return
            task = self.state.next_task(annotator)
            if task is None:
                self.send_response(204)
                self.end_headers()
                return
            self._send_json(200, task)
        elif url.path == "/progress":
            if not self._authorized():
                self._send_json(401, {"error": "missing or wrong token"})
                return
            self._send_json(200, self.state.progress())
        else:
            self._serve_static(url.path)

    def do_POST(self) -> None:  # noqa: N802 - stdlib naming
        url = urlparse(self.path)
        if url.path != "/scores":
            self._send_json(404, {"error": "not found"})
            return
        if not self._authorized():
            self._send_json(401, {"error": "missing or wrong token"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            self._send_json(400, {"error": "body must be JSON"})
            return
        task_id = str(body.get("task_id", "")).strip()
        label = str(body.get("label", "")).strip()
        annotator = str(body.get("annotator", "")).strip()
        score = body.get("score")
        known_ids = {t["task_id"] for t in self.state.tasks}
        if task_id not in known_ids:
            self._send_json(400, {"error": f"unknown task_id {task_id!r}"})
            return
        if label not in LABELS:
            self._send_json(400, {"error": f"label must be one of {LABELS}"})
            return
        if not isinstance(score, int) or score not in (1, 2, 3):
            self._send_json(400, {"error": "score must be the integer 1, 2, or 3"})
            return
        if not annotator:
            self._send_json(400, {"error": "annotator required"})
            return
        replaced = self.state.record_score(task_id, label, score, annotator)
        payload = {"status": "recorded", "task_id": task_id, "label": label}
        if replaced:
            payload["warning"] = "replaced an earlier score for this task/label/annotator"
        self._send_json(201, payload)


def make_server(state: EvalState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build the server; port 0 picks a free port (see server_address)."""
    handler = type("BoundEvalHandler", (_EvalHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(state: EvalState, host: str, port: int) -> None:
    server = make_server(state, host, port)
    actual_port = server.server_address[1]
    print(f"eval server listening on http://{host}:{actual_port} "
          f"({len(state.tasks)} tasks, log: {state.score_log})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
