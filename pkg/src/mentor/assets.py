"""Prompt asset loading.

Personas and guideline texts live as plain files under prompts/ so they can
be edited without touching code. A deployment may point at its own prompt
directory; names missing there fall back to the packaged set.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import MentorError


class MissingPrompt(MentorError):
    pass


def load_prompt(name: str, prompts_dir: str | Path | None = None) -> str:
    if prompts_dir is not None:
        candidate = Path(prompts_dir) / f"{name}.txt"
        if candidate.exists():
            return candidate.read_text(encoding="utf-8").strip()
    packaged = resources.files("mentor").joinpath("prompts", f"{name}.txt")
    try:
        return packaged.read_text(encoding="utf-8").strip()
    except FileNotFoundError:
        raise MissingPrompt(f"no prompt asset named {name!r}") from None
