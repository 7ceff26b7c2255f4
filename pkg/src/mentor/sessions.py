"""File-backed session persistence: one JSON document per session id."""
from __future__ import annotations

import json
import threading
from pathlib import Path

from .errors import MentorError
from .model import Session, new_session


class SessionNotFound(MentorError):
    pass


class SessionBusy(MentorError):
    pass


class SessionStore:
    """Sessions as `<id>.json` files plus per-id in-process locks.

    The lock gives each session a single writer: a second concurrent run on
    the same session is refused instead of interleaving turns.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def create(self, language_hint: str | None = None) -> Session:
        session = new_session(language_hint)
        self.save(session)
        return session

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def get(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFound(f"no session {session_id}")
        return Session.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def save(self, session: Session) -> None:
        path = self._path(session.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(session.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        tmp.replace(path)

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def acquire(self, session_id: str) -> None:
        """Take the session's writer lock or refuse if a run is in flight."""
        if not self._lock_for(session_id).acquire(blocking=False):
            raise SessionBusy(f"session {session_id} already has a run in flight")

    def release(self, session_id: str) -> None:
        lock = self._lock_for(session_id)
        if lock.locked():
            lock.release()
