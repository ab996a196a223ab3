"""Run log - ordered audit trail of every orchestrated run."""

from __future__ import annotations
import threading
from typing import Any

from src.models.manifest import RunEvent, RunEventKind


class RunLog:
    """Collects RunEvents. Each worker keeps its own log; the orchestrator merges them in run order."""

    def __init__(self) -> None:
        self._events: list[RunEvent] = []
        self._lock = threading.Lock()

    def add(self, kind: RunEventKind, run_id: str, message: str = "", **data: Any) -> RunEvent:
        """Append an event."""
        with self._lock:
            event = RunEvent(seq=len(self._events), kind=kind, run_id=run_id, message=message, data=data)
            self._events.append(event)
        return event

    def extend(self, events: list[RunEvent]) -> None:
        """Append another log's events in order, renumbering them."""
        with self._lock:
            for event in events:
                self._events.append(event.model_copy(update={"seq": len(self._events)}))

    def get_all(self) -> list[RunEvent]:
        return list(self._events)

    def get_by_kind(self, kind: RunEventKind) -> list[RunEvent]:
        return [e for e in self._events if e.kind == kind]

    def failures(self) -> list[RunEvent]:
        return self.get_by_kind(RunEventKind.FAILED)

