"""In-memory session store with an optional file-backed journal.

Sessions are isolated: each holds its own scenario, current intervention,
and an append-only history. Mutations on one session are serialized by a
per-session lock; the model weights are shared read-only.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..graphcore import InterventionVector, Scenario


class UnknownSessionError(KeyError):
    pass


@dataclass(slots=True)
class Session:
    session_id: str
    scenario: Scenario
    current_w: InterventionVector
    history: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def record(self, kind: str, request: dict, result: dict) -> dict:
        entry = {"step": len(self.history) + 1, "kind": kind, "request": request, "result": result}
        self.history.append(entry)
        return entry


class SessionStore:
    def __init__(self, journal_dir: str | Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.journal_dir = Path(journal_dir) if journal_dir else None
        if self.journal_dir:
            self.journal_dir.mkdir(parents=True, exist_ok=True)

    def create(self, scenario: Scenario) -> Session:
        session = Session(
            session_id=uuid.uuid4().hex[:16],
            scenario=scenario,
            current_w=scenario.intervention,
        )
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def journal(self, session: Session, entry: dict) -> None:
        if self.journal_dir is None:
            return
        path = self.journal_dir / f"{session.session_id}.jsonl"
        line = json.dumps({"session": session.session_id, **entry}, sort_keys=True)
        with path.open("a") as fh:
            fh.write(line + "\n")


def replay_journal(path: str | Path) -> list[dict]:
    """Recover the history timeline from a session journal file."""
    entries = []
    for raw in Path(path).read_text().splitlines():
        if raw.strip():
            entries.append(json.loads(raw))
    entries.sort(key=lambda e: e["step"])
    return entries
