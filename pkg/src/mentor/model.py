"""Conversation and trace data model shared across the package."""
from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import InvalidArgument, MentorError


class Role(str, Enum):
    SYSTEM = "system"
    STUDENT = "student"
    ASSISTANT = "assistant"
    TOOL = "tool"


class DocumentCategory(str, Enum):
    """Taxonomy of the knowledge base corpora."""

    KNOWLEDGE_UNITS = "knowledge_units"
    CAREER_PATHWAYS = "career_pathways"
    PROGRAM_CATALOGS = "program_catalogs"


# Sentinel action name marking the terminal step of an agent run.
FINAL = "FINAL"

_LANGUAGE_TAG = re.compile(r"^[A-Za-z]{2,8}(-[A-Za-z0-9]{1,8})*$")


class InvalidMessage(MentorError):
    pass


class StaleTimestamp(MentorError):
    pass


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _as_utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


@dataclass
class Message:
    """One conversation turn.

    Content is stored trimmed and must be non-empty; `tool_name` is set
    exactly when the role is `tool`.
    """

    role: Role
    content: str
    timestamp: datetime = field(default_factory=utcnow)
    tool_name: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.role, Role):
            self.role = Role(self.role)
        if not isinstance(self.content, str) or not self.content.strip():
            raise InvalidMessage("message content must be non-empty text")
        self.content = self.content.strip()
        self.timestamp = _as_utc(self.timestamp)
        if (self.role is Role.TOOL) != (self.tool_name is not None):
            raise InvalidMessage("tool_name is required for tool messages and forbidden otherwise")

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "content": self.content,
            "timestamp": self.timestamp.isoformat(),
            "tool_name": self.tool_name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Message":
        return cls(
            role=Role(data["role"]),
            content=data["content"],
            timestamp=datetime.fromisoformat(data["timestamp"]),
            tool_name=data.get("tool_name"),
        )


@dataclass
class Session:
    """A student's conversation with the mentor."""

    id: str
    messages: list[Message] = field(default_factory=list)
    created_at: datetime = field(default_factory=utcnow)
    language_hint: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidArgument("session id must be non-empty")
        self.created_at = _as_utc(self.created_at)
        if self.language_hint is not None and not _LANGUAGE_TAG.match(self.language_hint):
            raise InvalidArgument(f"language_hint {self.language_hint!r} is not a language tag")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "messages": [m.to_dict() for m in self.messages],
            "created_at": self.created_at.isoformat(),
            "language_hint": self.language_hint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        return cls(
            id=data["id"],
            messages=[Message.from_dict(m) for m in data["messages"]],
            created_at=datetime.fromisoformat(data["created_at"]),
            language_hint=data.get("language_hint"),
        )


def new_session(language_hint: str | None = None) -> Session:
    return Session(id=uuid.uuid4().hex, language_hint=language_hint)


def append_message(session: Session, message: Message) -> Session:
    """Append one turn; timestamps must not move backwards."""
    if session.messages and message.timestamp < session.messages[-1].timestamp:
        raise StaleTimestamp(
            f"message at {message.timestamp.isoformat()} predates the last turn"
        )
    session.messages.append(message)
    return session


def render_history(session: Session, max_turns: int = 12) -> str:
    """Render the last student/assistant turns as `ROLE: content` lines, oldest first."""
    if max_turns < 1:
        raise InvalidArgument("max_turns must be at least 1")
    turns = [m for m in session.messages if m.role in (Role.STUDENT, Role.ASSISTANT)]
    window = turns[-max_turns:]
    return "\n".join(f"{m.role.value.upper()}: {m.content}" for m in window)


@dataclass
class AgentStep:
    """One reasoning step: a tool invocation, or the final answer when action is FINAL."""

    thought: str
    action: str
    action_input: str
    observation: str | None = None

    @property
    def is_final(self) -> bool:
        return self.action == FINAL


@dataclass(frozen=True)
class SourceRef:
    """Citation pointing back into the indexed corpus."""

    title: str
    url: str
    category: DocumentCategory
    chunk_id: str

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "url": self.url,
            "category": self.category.value,
            "chunk_id": self.chunk_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SourceRef":
        return cls(
            title=data["title"],
            url=data["url"],
            category=DocumentCategory(data["category"]),
            chunk_id=data["chunk_id"],
        )
