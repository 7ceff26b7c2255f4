"""Application configuration: TOML file, then MENTOR_* environment overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .agent import AgentConfig
from .errors import MentorError
from .gateway import ProviderConfig


class ConfigError(MentorError):
    pass


@dataclass
class AppConfig:
    listen_addr: str = "127.0.0.1:8000"
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    index_path: str = "index.jsonl"
    sessions_dir: str = "sessions"
    prompts_dir: str | None = None
    embedder: str = "hash"  # hash | gateway
    retrieval_k: int = 4
    chunk_size: int = 1000
    chunk_overlap: int = 200
    history_window: int = 12
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    static_dir: str | None = None

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_addr.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"listen_addr must look like host:port, got {self.listen_addr!r}")
        return host, int(port)


_PROVIDER_KEYS = {"base_url", "api_key", "model", "embed_model", "timeout", "transport", "fixtures_dir"}
_AGENT_KEYS = {"max_steps", "verify", "parse_retries"}
_APP_KEYS = {
    "listen_addr",
    "index_path",
    "sessions_dir",
    "prompts_dir",
    "embedder",
    "retrieval_k",
    "chunk_size",
    "chunk_overlap",
    "history_window",
    "cors_origins",
    "static_dir",
}

_ENV_PROVIDER = {
    "MENTOR_API_KEY": "api_key",
    "MENTOR_BASE_URL": "base_url",
    "MENTOR_MODEL": "model",
    "MENTOR_EMBED_MODEL": "embed_model",
    "MENTOR_TRANSPORT": "transport",
    "MENTOR_FIXTURES_DIR": "fixtures_dir",
}
_ENV_APP = {
    "MENTOR_LISTEN_ADDR": "listen_addr",
    "MENTOR_INDEX_PATH": "index_path",
    "MENTOR_SESSIONS_DIR": "sessions_dir",
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> AppConfig:
    """Build the config from an optional TOML file and the environment.

    Environment variables win over the file so a deployment can retarget the
    provider without editing anything on disk.
    """
    env = os.environ if env is None else env
    file_values: dict = {}
    if path is not None:
        try:
            file_values = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}") from err
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"config file is not valid TOML: {err}") from err

    unknown = set(file_values) - _PROVIDER_KEYS - _AGENT_KEYS - _APP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    provider_kwargs = {k: v for k, v in file_values.items() if k in _PROVIDER_KEYS}
    agent_kwargs = {k: v for k, v in file_values.items() if k in _AGENT_KEYS}
    app_kwargs = {k: v for k, v in file_values.items() if k in _APP_KEYS}

    for var, key in _ENV_PROVIDER.items():
        if env.get(var):
            provider_kwargs[key] = env[var]
    for var, key in _ENV_APP.items():
        if env.get(var):
            app_kwargs[key] = env[var]

    try:
        provider = ProviderConfig(**provider_kwargs)
        agent = AgentConfig(**agent_kwargs)
        config = AppConfig(provider=provider, agent=agent, **app_kwargs)
        config.host_port()
    except (TypeError, MentorError) as err:
        raise ConfigError(str(err)) from err
    if config.embedder not in ("hash", "gateway"):
        raise ConfigError(f"embedder must be 'hash' or 'gateway', got {config.embedder!r}")
    return config
