"""Agentic retrieval-augmented mentor for cybersecurity study.

Heavy front-door modules (service, cli, report) are imported on demand so that
``import mentor`` stays cheap; pull them in explicitly when needed.
"""
from .errors import InvalidArgument, MentorError
from .model import (
    AgentStep,
    DocumentCategory,
    Message,
    Role,
    Session,
    SourceRef,
    append_message,
    new_session,
)

__version__ = "0.1.0"

__all__ = [
    "AgentStep",
    "DocumentCategory",
    "InvalidArgument",
    "MentorError",
    "Message",
    "Role",
    "Session",
    "SourceRef",
    "append_message",
    "new_session",
    "__version__",
]
