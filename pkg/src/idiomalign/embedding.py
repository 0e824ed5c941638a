"""Embedding providers and vector operations.

Two providers are shipped: a deterministic hashed-trigram embedder used by
tests and offline runs, and a remote HTTP provider for real sentence
embedding models. Both produce fixed-dimension, non-zero vectors; cosine
similarity is the only comparison used downstream.
"""

from __future__ import annotations

import hashlib
import math
import os
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests

from .errors import TransportError

# Prepended to every trigram before hashing. Changing it changes every
# bucket assignment, so it is part of the provider name.
TRIGRAM_HASH_SEED = b"idiomalign-trigram-v1:"


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


class EmbeddingProvider(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> EmbeddingVector: ...


def embed_text(provider: EmbeddingProvider, text: str) -> EmbeddingVector:
    """Embed one text, enforcing the provider contract.

    The text must be non-empty after trimming; the result must have the
    provider's dimension and at least one non-zero component.
    """
    if not text.strip():
        raise ValueError("cannot embed empty text")
    vector = provider.embed(text)
    if vector.dim != provider.dim:
        raise ValueError(
            f"provider {provider.name!r} returned dim {vector.dim}, expected {provider.dim}"
        )
    if not any(v != 0.0 for v in vector.values):
        raise ValueError(f"provider {provider.name!r} returned a zero vector")
    return vector


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine of the angle between u and v, clamped to [-1, 1]."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} != {v.dim}")
    dot = 0.0
    norm_u = 0.0
    norm_v = 0.0
    for a, b in zip(u.values, v.values):
        dot += a * b
        norm_u += a * a
        norm_v += b * b
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    if u.values == v.values:
        # Exactly 1 by definition; sqrt rounding would land an ulp short.
        return 1.0
    return max(-1.0, min(1.0, dot / (math.sqrt(norm_u) * math.sqrt(norm_v))))


class HashedTrigramEmbedder:
    """Deterministic offline embedder.

    Character trigrams of the lowercased text (the whole text when shorter
    than three characters) are hashed into `dim` buckets with SHA-256 under
    a fixed seed; the bucket-count vector is L2-normalized. No tokenizer,
    no model weights, identical output on every platform.
    """

    def __init__(self, dim: int = 64) -> None:
        if dim < 8:
            raise ValueError("dim must be at least 8")
        self.dim = dim
        self.name = f"hashed-trigram-v1-d{dim}"

    def _bucket(self, gram: str) -> int:
        digest = hashlib.sha256(TRIGRAM_HASH_SEED + gram.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, text: str) -> EmbeddingVector:
        lowered = text.lower()
        if len(lowered) < 3:
            grams = [lowered]
        else:
            grams = [lowered[i : i + 3] for i in range(len(lowered) - 2)]
        counts = [0.0] * self.dim
        for gram in grams:
            counts[self._bucket(gram)] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        return EmbeddingVector(values=tuple(c / norm for c in counts))


def test_embed(text: str, dim: int) -> EmbeddingVector:
    """One-shot hashed-trigram embedding; see HashedTrigramEmbedder."""
    return embed_text(HashedTrigramEmbedder(dim), text)


class RemoteEmbeddingProvider:
    """HTTP embedding provider.

    Sends {"model": ..., "input": [text]} and expects {"vectors": [[...]]}.
    The API key is read from the named environment variable at call time and
    sent as a bearer token. Transport failures are retried with exponential
    backoff; the final error carries the attempt count.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        dim: int,
        *,
        api_key_env: str = "IDIOMALIGN_EMBED_API_KEY",
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
    ) -> None:
        if dim < 1:
            raise ValueError("dim must be positive")
        self.base_url = base_url
        self.model = model
        self.dim = dim
        self.name = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def embed(self, text: str) -> EmbeddingVector:
        vectors = self.embed_batch([text])
        return vectors[0]

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        payload = {"model": self.model, "input": list(texts)}
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.max_retries:
            attempts += 1
            try:
                response = requests.post(
                    self.base_url, json=payload, headers=self._headers(), timeout=self.timeout
                )
                response.raise_for_status()
                body = response.json()
                vectors = body["vectors"]
                if len(vectors) != len(texts):
                    raise ValueError(
                        f"expected {len(texts)} vectors, got {len(vectors)}"
                    )
                return [EmbeddingVector(values=tuple(float(x) for x in v)) for v in vectors]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempts > self.max_retries:
                    break
                time.sleep(self.backoff_base * (2 ** (attempts - 1)))
        raise TransportError(
            f"embedding request failed after {attempts} attempts: {last_error}",
            attempts=attempts,
        )
