"""HTTP annotation service: the human-in-the-loop realization of the loop.

The loop is batch-synchronous: a selected batch is cut into leasable tasks,
annotators label or skip them, and the request that resolves the last open
task advances the loop inline (apply labels, grow the slot head, retrain,
select the next batch) under the session lock. Skipped spans stay in the
unlabeled pool and are eligible for reselection. Completed labels are
checkpointed so a restart never loses them and never leaves a task assigned.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import loop as al
from . import persistence
from .classifier import predict

SCHEMA = "v1"
DEFAULT_LEASE_SECONDS = 600.0

PHASE_COLLECTING = "collecting"
PHASE_FINISHED = "finished"


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class Task:
    task_id: str
    span_id: str
    suggestions: list[dict]
    status: str = "pending"  # pending -> assigned -> completed | skipped
    assigned_to: str | None = None
    lease_expiry: float | None = None
    label: str | None = None


@dataclass
class ProgressSnapshot:
    labeled_fraction: float
    iteration: int
    known_slot_count: int
    batch_completion: float
    latest_span_f1: float
    phase: str


class AnnotationSession:
    """Single-writer owner of the run state behind the HTTP API."""

    def __init__(
        self,
        state: al.ALState,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock: Callable[[], float] = time.time,
        checkpoint_path: str | None = None,
    ):
        self.state = state
        self.lease_seconds = lease_seconds
        self.clock = clock
        self.checkpoint_path = checkpoint_path
        self.lock = threading.RLock()
        self.tasks: dict[str, Task] = {}
        self.batch_order: list[str] = []
        self.declared: dict[str, str] = {}
        self.phase = PHASE_COLLECTING
        self.stop_cause: str | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        with self.lock:
            if not self.tasks:
                self._start_batch()
            self._checkpoint()

    def _start_batch(self) -> None:
        cause = al.stop_reason(self.state)
        if cause is not None:
            self.phase = PHASE_FINISHED
            self.stop_cause = cause
            self.tasks = {}
            self.batch_order = []
            return
        state = self.state
        k = min(state.batch_size(), len(state.pools.unlabeled))
        result = al.select_batch_for(state)
        mask = state.catalog.mask()
        self.tasks = {}
        self.batch_order = []
        for i, sid in enumerate(result.selected[:k]):
            span = state.dataset.spans[sid]
            utt = state.dataset.utterances[span.utterance_id]
            pred = predict(state.model, span, utt, mask)
            order = np.argsort(-pred.slot_dist, kind="stable")[:3]
            suggestions = [
                {"slot": state.model.slot_labels[int(j)], "probability": float(pred.slot_dist[int(j)])}
                for j in order
                if mask[int(j)] == 1.0
            ]
            task = Task(task_id=f"t{state.iteration + 1:04d}_{i:03d}", span_id=sid, suggestions=suggestions)
            self.tasks[task.task_id] = task
            self.batch_order.append(task.task_id)
        self.phase = PHASE_COLLECTING

    def _checkpoint(self) -> None:
        if not self.checkpoint_path:
            return
        extra = {
            "declared": dict(self.declared),
            "batch": [
                {
                    "task_id": t.task_id,
                    "span_id": t.span_id,
                    "status": t.status if t.status in ("completed", "skipped") else "pending",
                    "label": t.label,
                    "suggestions": t.suggestions,
                }
                for t in (self.tasks[tid] for tid in self.batch_order)
            ],
        }
        persistence.save_state(self.state, self.checkpoint_path, service=extra)

    @classmethod
    def from_checkpoint(
        cls,
        path: str,
        dataset=None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock: Callable[[], float] = time.time,
    ) -> "AnnotationSession":
        """Restore a session; unfinished leases come back as pending."""
        state = persistence.resume(path, dataset=dataset)
        extra = persistence.load_service_meta(path) or {}
        session = cls(state, lease_seconds=lease_seconds, clock=clock, checkpoint_path=path)
        session.declared = dict(extra.get("declared", {}))
        batch = extra.get("batch", [])
        for raw in batch:
            task = Task(
                task_id=raw["task_id"],
                span_id=raw["span_id"],
                suggestions=list(raw.get("suggestions", [])),
                status=raw["status"],
                label=raw.get("label"),
            )
            session.tasks[task.task_id] = task
            session.batch_order.append(task.task_id)
        if not batch:
            session._start_batch()
        elif session._batch_resolved():
            session._advance()
        return session

    # -- internals ---------------------------------------------------------

    def _sweep_leases(self) -> None:
        now = self.clock()
        for task in self.tasks.values():
            if task.status == "assigned" and task.lease_expiry is not None and task.lease_expiry <= now:
                task.status = "pending"
                task.assigned_to = None
                task.lease_expiry = None

    def _batch_resolved(self) -> bool:
        return bool(self.tasks) and all(t.status in ("completed", "skipped") for t in self.tasks.values())

    def _advance(self) -> None:
        annotations = [
            (t.span_id, t.label)
            for tid in self.batch_order
            for t in (self.tasks[tid],)
            if t.status == "completed" and t.label
        ]
        if annotations:
            al.apply_annotations(self.state, annotations)
            self.declared = {n: d for n, d in self.declared.items() if n not in self.state.catalog.labels}
        self._start_batch()

    def _task_view(self, task: Task) -> dict:
        span = self.state.dataset.spans[task.span_id]
        utt = self.state.dataset.utterances[span.utterance_id]
        return {
            "schema": SCHEMA,
            "task_id": task.task_id,
            "span_id": task.span_id,
            "tokens": list(utt.tokens),
            "span": {"start": span.start, "len": span.length},
            "weak_label": span.weak_label,
            "suggestions": task.suggestions,
            "status": task.status,
            "lease_expiry": task.lease_expiry,
        }

    def _resolve(self, task_id: str, annotator: str) -> Task:
        self._sweep_leases()
        task = self.tasks.get(task_id)
        if task is None:
            raise ServiceError(404, f"unknown task {task_id!r}")
        if task.status in ("completed", "skipped"):
            raise ServiceError(409, f"task {task_id!r} already {task.status}")
        if task.status != "assigned" or task.assigned_to != annotator:
            raise ServiceError(409, f"task {task_id!r} is not leased to {annotator!r} (lease expired or not assigned)")
        return task

    # -- API operations ----------------------------------------------------

    def get_batch(self, annotator: str, max_items: int) -> dict:
        if not annotator:
            raise ServiceError(422, "annotator id must not be empty")
        if max_items < 1:
            raise ServiceError(422, "max must be >= 1")
        with self.lock:
            self._sweep_leases()
            leased = []
            if self.phase != PHASE_FINISHED:
                now = self.clock()
                for tid in self.batch_order:
                    if len(leased) >= max_items:
                        break
                    task = self.tasks[tid]
                    if task.status == "pending":
                        task.status = "assigned"
                        task.assigned_to = annotator
                        task.lease_expiry = now + self.lease_seconds
                        leased.append(self._task_view(task))
                if leased:
                    self._checkpoint()
            return {
                "schema": SCHEMA,
                "phase": self.phase,
                "iteration": self.state.iteration,
                "tasks": leased,
            }

    def submit_label(
        self,
        task_id: str,
        annotator: str,
        slot: str | None = None,
        new_slot: dict | None = None,
    ) -> dict:
        with self.lock:
            task = self._resolve(task_id, annotator)
            if (slot is None) == (new_slot is None):
                raise ServiceError(422, "provide exactly one of 'slot' or 'new_slot'")
            if new_slot is not None:
                name = (new_slot.get("name") or "").strip()
                if not name:
                    raise ServiceError(422, "new slot name must not be empty")
                if name not in self.state.catalog.labels:
                    self.declared.setdefault(name, new_slot.get("description", ""))
                label = name
            else:
                label = slot.strip()
                if not label:
                    raise ServiceError(422, "slot name must not be empty")
                if label not in self.state.catalog.labels and label not in self.declared:
                    raise ServiceError(422, f"unknown slot {label!r}; declare it first via POST /api/slots")
            task.status = "completed"
            task.label = label
            task.lease_expiry = None
            if self._batch_resolved():
                self._advance()
            self._checkpoint()
            return {"schema": SCHEMA, "task_id": task_id, "status": "completed", "phase": self.phase}

    def skip_task(self, task_id: str, annotator: str) -> dict:
        with self.lock:
            task = self._resolve(task_id, annotator)
            task.status = "skipped"
            task.lease_expiry = None
            if self._batch_resolved():
                self._advance()
            self._checkpoint()
            return {"schema": SCHEMA, "task_id": task_id, "status": "skipped", "phase": self.phase}

    def declare_slot(self, name: str, description: str = "") -> dict:
        name = (name or "").strip()
        if not name:
            raise ServiceError(422, "slot name must not be empty")
        with self.lock:
            if name in self.state.catalog.labels:
                return {"schema": SCHEMA, "name": name, "created": False, "status": "existing"}
            created = name not in self.declared
            self.declared.setdefault(name, description)
            self._checkpoint()
            return {"schema": SCHEMA, "name": name, "created": created, "status": "declared"}

    def progress(self) -> ProgressSnapshot:
        with self.lock:
            total = len(self.batch_order)
            resolved = sum(1 for t in self.tasks.values() if t.status in ("completed", "skipped"))
            latest = self.state.history[-1].test_f1 if self.state.history else self.state.warmup.test_f1
            return ProgressSnapshot(
                labeled_fraction=self.state.labeled_fraction,
                iteration=self.state.iteration,
                known_slot_count=len(self.state.catalog.known),
                batch_completion=resolved / total if total else 1.0,
                latest_span_f1=latest,
                phase=self.phase,
            )

    def curve(self) -> list[dict]:
        with self.lock:
            return [
                {
                    "iteration": row.iteration,
                    "labeled_fraction": row.labeled_fraction,
                    "span_f1": row.span_f1,
                    "known_slots": row.known_slots,
                    "new_slots_discovered": row.new_slots_discovered,
                }
                for row in al.learning_curve(self.state)
            ]

    def slots(self) -> dict:
        with self.lock:
            discovered_at: dict[str, int] = {}
            for label in self.state.catalog.known:
                discovered_at[label] = 0  # warm-up unless a record says otherwise
            for record in self.state.history:
                for label in record.newly_discovered:
                    discovered_at[label] = record.iteration
            return {
                "schema": SCHEMA,
                "slots": [
                    {
                        "name": label,
                        "known": label in self.state.catalog.known,
                        "discovered_iteration": discovered_at.get(label),
                    }
                    for label in self.state.catalog.labels
                ],
                "pending": [{"name": n, "description": d} for n, d in sorted(self.declared.items())],
            }


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise ServiceError(422, "request body must be JSON") from None
    if not isinstance(payload, dict):
        raise ServiceError(422, "request body must be a JSON object")
    return payload


def create_app(session: AnnotationSession, static_dir: str | None = None) -> FastAPI:
    """FastAPI app over a session; mount the frontend bundle when given."""
    app = FastAPI(title="slotdiscovery annotation service", version=SCHEMA)
    app.state.session = session

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"schema": SCHEMA, "error": exc.message})

    @app.get("/api/batch")
    def get_batch(annotator: str = Query(...), max_items: int = Query(10, alias="max")):
        return session.get_batch(annotator, max_items)

    @app.post("/api/tasks/{task_id}/label")
    async def submit_label(task_id: str, request: Request):
        payload = await _json_body(request)
        return session.submit_label(
            task_id,
            annotator=str(payload.get("annotator", "")),
            slot=payload.get("slot"),
            new_slot=payload.get("new_slot"),
        )

    @app.post("/api/tasks/{task_id}/skip")
    async def skip_task(task_id: str, request: Request):
        payload = await _json_body(request)
        return session.skip_task(task_id, annotator=str(payload.get("annotator", "")))

    @app.post("/api/slots")
    async def declare_slot(request: Request):
        payload = await _json_body(request)
        return session.declare_slot(str(payload.get("name", "")), str(payload.get("description", "")))

    @app.get("/api/progress")
    def progress():
        snap = session.progress()
        return {
            "schema": SCHEMA,
            "labeled_fraction": snap.labeled_fraction,
            "iteration": snap.iteration,
            "known_slot_count": snap.known_slot_count,
            "batch_completion": snap.batch_completion,
            "latest_span_f1": snap.latest_span_f1,
            "phase": snap.phase,
        }

    @app.get("/api/curve")
    def curve():
        return {"schema": SCHEMA, "curve": session.curve()}

    @app.get("/api/slots")
    def slots():
        return session.slots()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="frontend")
    return app
