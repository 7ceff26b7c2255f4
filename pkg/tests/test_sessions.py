"""File-backed session store semantics."""
import pytest

from mentor.model import Message, Role, append_message
from mentor.sessions import SessionBusy, SessionNotFound, SessionStore


@pytest.fixture()
def store(tmp_path):
    return SessionStore(tmp_path / "sessions")


def test_create_then_get_round_trip(store):
    session = store.create("en")
    append_message(session, Message(role=Role.STUDENT, content="hello"))
    store.save(session)
    loaded = store.get(session.id)
    assert loaded == session
    assert loaded.language_hint == "en"


def test_missing_session_raises(store):
    assert not store.exists("nope")
    with pytest.raises(SessionNotFound):
        store.get("nope")


def test_save_is_atomic_no_tmp_left_behind(store):
    session = store.create()
    store.save(session)
    leftovers = list(store.root.glob("*.tmp"))
    assert leftovers == []
    assert store.exists(session.id)


def test_second_acquire_is_refused(store):
    session = store.create()
    store.acquire(session.id)
    with pytest.raises(SessionBusy):
        store.acquire(session.id)
    store.release(session.id)
    store.acquire(session.id)  # usable again after release
    store.release(session.id)


def test_release_without_acquire_is_harmless(store):
    store.release("never-acquired")


def test_locks_are_per_session(store):
    a, b = store.create(), store.create()
    store.acquire(a.id)
    store.acquire(b.id)  # independent lock, must not raise
    store.release(a.id)
    store.release(b.id)


def test_store_survives_reopen(store, tmp_path):
    session = store.create()
    again = SessionStore(store.root)
    assert again.get(session.id).id == session.id
