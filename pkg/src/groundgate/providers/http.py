"""HTTP providers speaking an OpenAI-compatible wire format.

Endpoints (relative to the configured base URL):

    POST /v1/chat/completions   {model, messages, temperature, max_tokens, seed?}
    POST /v1/embeddings         {model, input: [texts]}
    POST /v1/judge              {premise, hypothesis}

The bearer token comes from ``GROUNDGATE_API_KEY``; the base URL defaults
to ``GROUNDGATE_API_BASE``.
"""

from __future__ import annotations

import logging
import os
import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import httpx

from ..errors import ConfigurationError, MalformedResponseError, ProviderError, RateLimitError, TransportError
from .base import ChatRequest, EmbeddingVector, PairwiseJudgment, TextCache

logger = logging.getLogger(__name__)

API_KEY_ENV = "GROUNDGATE_API_KEY"
API_BASE_ENV = "GROUNDGATE_API_BASE"


@dataclass
class RetryPolicy:
    max_attempts: int = 5
    initial_delay: float = 1.0
    factor: float = 2.0
    jitter: float = 0.25  # fraction of the delay added at random
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)
    rng: random.Random = field(default_factory=random.Random, repr=False)

    def delay(self, attempt: int) -> float:
        base = self.initial_delay * self.factor**attempt
        return base * (1.0 + self.rng.uniform(0.0, self.jitter))


class _HttpBase:
    def __init__(
        self,
        base_url: Optional[str] = None,
        model: str = "",
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        retry: Optional[RetryPolicy] = None,
        client: Optional[httpx.Client] = None,
    ):
        base_url = base_url or os.environ.get(API_BASE_ENV)
        if not base_url:
            raise ConfigurationError(f"no base URL configured and {API_BASE_ENV} is unset")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.retry = retry or RetryPolicy()
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post_once(self, path: str, body: dict[str, Any]) -> Any:
        url = self.base_url + path
        try:
            resp = self._client.post(url, json=body, headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransportError(f"POST {url} failed: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimitError(f"POST {url} rate limited (429)")
        if resp.status_code >= 500:
            raise TransportError(f"POST {url} returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"POST {url} returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError:
            raise MalformedResponseError(f"POST {url} returned non-JSON body") from None

    def post(self, path: str, body: dict[str, Any]) -> Any:
        """POST with bounded exponential backoff on transport errors and 429s."""
        for attempt in range(self.retry.max_attempts):
            try:
                return self._post_once(path, body)
            except TransportError as exc:
                if attempt == self.retry.max_attempts - 1:
                    raise
                wait = self.retry.delay(attempt)
                logger.warning("%s; retry %d/%d in %.2fs", exc, attempt + 1, self.retry.max_attempts - 1, wait)
                self.retry.sleep(wait)
        raise AssertionError("unreachable")

    def close(self) -> None:
        self._client.close()


class HttpChat(_HttpBase):
    def chat(self, request: ChatRequest) -> str:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        payload = self.post("/v1/chat/completions", body)
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponseError("chat response lacks choices[0].message.content") from None
        if not isinstance(content, str):
            raise MalformedResponseError("chat message content is not a string")
        return content


class HttpEmbedder(_HttpBase):
    nonnegative = False

    def __init__(self, dimension: int, *args, batch_size: int = 64, cache: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.dimension = dimension
        self.batch_size = batch_size
        self.cache = TextCache(cache)

    def _fetch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        payload = self.post("/v1/embeddings", {"model": self.model, "input": list(texts)})
        try:
            rows = [item["embedding"] for item in payload["data"]]
        except (KeyError, TypeError):
            raise MalformedResponseError("embedding response lacks data[i].embedding") from None
        if len(rows) != len(texts):
            raise MalformedResponseError(f"asked for {len(texts)} embeddings, got {len(rows)}")
        vectors = [EmbeddingVector(tuple(r)) for r in rows]
        for v in vectors:
            if v.dimension != self.dimension:
                raise ConfigurationError(
                    f"remote embedding dimension {v.dimension} != configured {self.dimension}"
                )
        return vectors

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        if not self.cache.enabled:
            out: list[EmbeddingVector] = []
            for i in range(0, len(texts), self.batch_size):
                out.extend(self._fetch(texts[i : i + self.batch_size]))
            return out
        missing = [t for t in dict.fromkeys(texts) if t not in self.cache]
        for i in range(0, len(missing), self.batch_size):
            batch = missing[i : i + self.batch_size]
            for text, vec in zip(batch, self._fetch(batch)):
                self.cache.get_or_compute(text, lambda vec=vec: vec)
        return [self.cache.get_or_compute(t, lambda t=t: self._fetch([t])[0]) for t in texts]


class HttpJudge(_HttpBase):
    def __init__(self, *args, cache: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.cache = TextCache(cache)

    def _fetch(self, premise: str, hypothesis: str) -> PairwiseJudgment:
        payload = self.post("/v1/judge", {"premise": premise, "hypothesis": hypothesis})
        try:
            return PairwiseJudgment(
                entail=float(payload["entail"]),
                neutral=float(payload["neutral"]),
                contradict=float(payload["contradict"]),
                consistency=float(payload["consistency"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"bad judge payload: {exc}") from None

    def judge_pair(self, premise: str, hypothesis: str) -> PairwiseJudgment:
        return self.cache.get_or_compute(
            (premise, hypothesis), lambda: self._fetch(premise, hypothesis)
        )
