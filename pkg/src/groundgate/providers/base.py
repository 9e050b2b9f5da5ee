"""Provider interfaces and their value types."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Protocol, Sequence, TypeVar, runtime_checkable

V = TypeVar("V")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("embedding must have at least one component")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PairwiseJudgment:
    entail: float
    neutral: float
    contradict: float
    consistency: float

    def __post_init__(self):
        for name in ("entail", "neutral", "contradict", "consistency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {value}")

    @property
    def is_probabilistic(self) -> bool:
        return abs(self.entail + self.neutral + self.contradict - 1.0) <= 1e-6


@dataclass(frozen=True)
class ChatRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: Optional[int] = None

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@runtime_checkable
class Embedder(Protocol):
    dimension: int
    # True when every vector component is >= 0 (cosine then already lies in [0, 1])
    nonnegative: bool

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


@runtime_checkable
class Judge(Protocol):
    def judge_pair(self, premise: str, hypothesis: str) -> PairwiseJudgment: ...


@runtime_checkable
class ChatModel(Protocol):
    def chat(self, request: ChatRequest) -> str: ...


class TextCache:
    """Thread-safe memo keyed by exact input; can be switched off for timing runs."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._data: dict[Hashable, object] = {}
        self._lock = threading.Lock()

    def get_or_compute(self, key: Hashable, compute: Callable[[], V]) -> V:
        if not self.enabled:
            return compute()
        with self._lock:
            if key in self._data:
                return self._data[key]  # type: ignore[return-value]
        value = compute()
        with self._lock:
            self._data.setdefault(key, value)
        return value

    def clear(self) -> None:
        with self._lock:
            self._data.clear()

    def __contains__(self, key: Hashable) -> bool:
        with self._lock:
            return key in self._data

    def __len__(self) -> int:
        return len(self._data)


def set_caching(provider: object, enabled: bool) -> None:
    """Enable/disable the cache of any provider that has one (no-op otherwise)."""
    cache = getattr(provider, "cache", None)
    if isinstance(cache, TextCache):
        cache.enabled = enabled
        if not enabled:
            cache.clear()
    inner = getattr(provider, "inner", None)
    if inner is not None:
        set_caching(inner, enabled)


class Throttled:
    """Wraps a provider so at most ``limit`` calls are in flight at once."""

    def __init__(self, inner: object, semaphore: threading.Semaphore):
        self.inner = inner
        self._sem = semaphore

    def __getattr__(self, name):
        attr = getattr(self.inner, name)
        if name not in ("embed", "judge_pair", "chat"):
            return attr

        def call(*args, **kwargs):
            with self._sem:
                return attr(*args, **kwargs)

        return call
