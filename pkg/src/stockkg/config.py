"""Application configuration: a key=value file with STOCKKG_* environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import UserError
from .translate import BackendConfig

KEYS = ("data_dir", "snapshot_path", "backend_url", "backend_timeout_s", "output", "log_level")
ENV_PREFIX = "STOCKKG_"
OUTPUTS = ("table", "json")
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ConfigError(UserError):
    pass


@dataclass(frozen=True)
class AppConfig:
    data_dir: str = "data"
    snapshot_path: str = "graph.snap"
    backend: BackendConfig | None = None
    output: str = "table"
    log_level: str = "WARNING"

    def __post_init__(self):
        if not self.data_dir or not self.snapshot_path:
            raise ConfigError("data_dir and snapshot_path must be non-empty")
        if self.output not in OUTPUTS:
            raise ConfigError(f"output must be one of {', '.join(OUTPUTS)}")
        if self.log_level not in LEVELS:
            raise ConfigError(f"log_level must be one of {', '.join(LEVELS)}")

    def with_overrides(self, **kw) -> AppConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _build(values: dict) -> AppConfig:
    backend = None
    url = values.get("backend_url", "")
    if url:
        try:
            timeout = int(values.get("backend_timeout_s", "30"))
        except ValueError as exc:
            raise ConfigError("backend_timeout_s must be an integer") from exc
        if timeout < 1:
            raise ConfigError("backend_timeout_s must be >= 1")
        backend = BackendConfig(url, timeout)
    kw = {k: values[k] for k in ("data_dir", "snapshot_path", "output", "log_level") if k in values}
    if "log_level" in kw:
        kw["log_level"] = kw["log_level"].upper()
    return AppConfig(backend=backend, **kw)


def load_config(path: str | os.PathLike | None = None, env=None) -> AppConfig:
    """File values first, then environment variables on top."""
    env = os.environ if env is None else env
    values: dict = {}
    path = path or env.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_config_text(text, str(path)))
    for key in KEYS:
        if ENV_PREFIX + key.upper() in env:
            values[key] = env[ENV_PREFIX + key.upper()]
    return _build(values)
