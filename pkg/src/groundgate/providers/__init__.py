"""Model access behind three narrow interfaces: embeddings, pairwise judging, chat."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from ..errors import ConfigurationError
from .base import (
    ChatModel,
    ChatRequest,
    Embedder,
    EmbeddingVector,
    Judge,
    PairwiseJudgment,
    TextCache,
    Throttled,
    set_caching,
)
from .mock import HashingEmbedder, OverlapJudge, ScriptedChat, fnv1a_64

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_FIXTURES = DATA_DIR / "chat_fixtures.json"

__all__ = [
    "ChatModel",
    "ChatRequest",
    "Embedder",
    "EmbeddingVector",
    "HashingEmbedder",
    "Judge",
    "OverlapJudge",
    "PairwiseJudgment",
    "Providers",
    "ScriptedChat",
    "TextCache",
    "Throttled",
    "fnv1a_64",
    "load_providers",
    "set_caching",
]


@dataclass
class Providers:
    embed: Embedder
    judge: Judge
    chat: ChatModel
    # second annotator; None means "reuse chat with a perturbed template"
    chat_b: Optional[ChatModel] = None

    def set_caching(self, enabled: bool) -> None:
        for p in (self.embed, self.judge, self.chat, self.chat_b):
            if p is not None:
                set_caching(p, enabled)

    def throttled(self, parallelism: int) -> "Providers":
        sem = threading.BoundedSemaphore(max(1, parallelism))
        wrap = lambda p: None if p is None else Throttled(p, sem)  # noqa: E731
        return Providers(wrap(self.embed), wrap(self.judge), wrap(self.chat), wrap(self.chat_b))


def _http_kwargs(cfg: Mapping[str, Any]) -> dict[str, Any]:
    return {
        "base_url": cfg.get("base_url"),
        "model": cfg.get("model", ""),
        "timeout": float(cfg.get("timeout", 60.0)),
    }


def _build(kind_of: str, cfg: Mapping[str, Any], base_dir: Path):
    from .http import HttpChat, HttpEmbedder, HttpJudge

    kind = cfg.get("kind", "mock")
    if kind_of == "embed":
        if kind == "mock":
            return HashingEmbedder(int(cfg.get("dimension", 256)), cache=cfg.get("cache", True))
        if kind == "http":
            if "dimension" not in cfg:
                raise ConfigurationError("http embed provider needs 'dimension'")
            return HttpEmbedder(int(cfg["dimension"]), cache=cfg.get("cache", True), **_http_kwargs(cfg))
    elif kind_of == "judge":
        if kind == "mock":
            return OverlapJudge(cache=cfg.get("cache", True))
        if kind == "http":
            return HttpJudge(cache=cfg.get("cache", True), **_http_kwargs(cfg))
    else:
        if kind in ("mock", "scripted"):
            path = Path(cfg.get("fixtures", DEFAULT_FIXTURES))
            if not path.is_absolute():
                path = base_dir / path
            return ScriptedChat.from_file(path)
        if kind == "http":
            return HttpChat(**_http_kwargs(cfg))
    raise ConfigurationError(f"unknown provider kind {kind!r} for {kind_of}")


def load_providers(config: str | Path | Mapping[str, Any] | None = None) -> Providers:
    """Build providers from a prov.json path or dict; missing entries default to mocks."""
    base_dir = Path.cwd()
    if config is None:
        config = {}
    elif not isinstance(config, Mapping):
        path = Path(config)
        base_dir = path.resolve().parent
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    unknown = set(config) - {"embed", "judge", "chat", "chat_b"}
    if unknown:
        raise ConfigurationError(f"unknown provider slots: {sorted(unknown)}")
    chat_b = config.get("chat_b")
    return Providers(
        embed=_build("embed", config.get("embed", {}), base_dir),
        judge=_build("judge", config.get("judge", {}), base_dir),
        chat=_build("chat", config.get("chat", {}), base_dir),
        chat_b=None if chat_b is None else _build("chat", chat_b, base_dir),
    )
