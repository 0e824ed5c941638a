"""Meaning index and thresholded top-K cosine retrieval.

The index holds one embedded meaning per target-language knowledge-base
entry. Retrieval is an exact linear scan: corpus sizes stay in the low
thousands, so there is no approximate structure to drift away from the
brute-force definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .embedding import EmbeddingProvider, EmbeddingVector, cosine_similarity, embed_text
from .kb import KnowledgeBase, normalize_meaning_key

INDEX_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class IndexItem:
    entry_ref: str
    idiom: str
    meaning_en: str
    key_text: str
    vector: EmbeddingVector


@dataclass(frozen=True)
class MeaningIndex:
    target_language: str
    items: tuple[IndexItem, ...]
    provider_name: str
    dim: int
    excluded_empty_meaning: int = 0


@dataclass(frozen=True)
class AlignmentCandidate:
    entry_ref: str
    idiom: str
    meaning_en: str
    score: float


@dataclass(frozen=True)
class RetrievalConfig:
    threshold: float = 0.7
    k: int = 4

    def __post_init__(self) -> None:
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [-1, 1], got {self.threshold}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def build_meaning_index(
    kb: KnowledgeBase, target_language: str, provider: EmbeddingProvider
) -> MeaningIndex:
    """Embed every target-language meaning in the KB.

    Meanings are normalized with normalize_meaning_key before embedding.
    Entries whose normalized meaning is empty cannot be embedded; they are
    excluded and counted. Items are ordered by entry id so rebuilding with
    the same inputs yields an identical index.
    """
    entries = [e for e in kb.entries if e.language == target_language]
    if not entries:
        raise ValueError(f"knowledge base has no entries for language {target_language!r}")
    items: list[IndexItem] = []
    excluded = 0
    for entry in sorted(entries, key=lambda e: e.id):
        key_text = normalize_meaning_key(entry.meaning_en)
        if not key_text:
            excluded += 1
            continue
        try:
            vector = embed_text(provider, key_text)
        except Exception as exc:
            raise RuntimeError(
                f"embedding failed for entry {entry.id!r} text {key_text!r}: {exc}"
            ) from exc
        items.append(
            IndexItem(
                entry_ref=entry.id,
                idiom=entry.idiom,
                meaning_en=entry.meaning_en,
                key_text=key_text,
                vector=vector,
            )
        )
    if not items:
        raise ValueError(
            f"all {len(entries)} entries for language {target_language!r} "
            "have empty normalized meanings"
        )
    return MeaningIndex(
        target_language=target_language,
        items=tuple(items),
        provider_name=provider.name,
        dim=provider.dim,
        excluded_empty_meaning=excluded,
    )


def retrieve_candidates(
    index: MeaningIndex, query: EmbeddingVector, config: RetrievalConfig
) -> list[AlignmentCandidate]:
    """All items scoring >= config.threshold, best first, truncated to k.

    The threshold is inclusive. Ties are broken by ascending idiom surface
    in codepoint order so results are reproducible.
    """
    if query.dim != index.dim:
        raise ValueError(f"query dim {query.dim} does not match index dim {index.dim}")
    qualifying = []
    for item in index.items:
        score = cosine_similarity(query, item.vector)
        if score >= config.threshold:
            qualifying.append(
                AlignmentCandidate(
                    entry_ref=item.entry_ref,
                    idiom=item.idiom,
                    meaning_en=item.meaning_en,
                    score=score,
                )
            )
    qualifying.sort(key=lambda c: (-c.score, c.idiom))
    return qualifying[: config.k]


def match_statistics(results: Sequence) -> dict[str, int]:
    """Matched/unmatched counts over SIA results.

    Matched means the run confirmed a retrieved idiom (path idiom_match);
    everything else fell back to translating with the English meaning.
    """
    matched = sum(1 for r in results if r.path == "idiom_match")
    return {"matched": matched, "unmatched": len(results) - matched}


def save_index(index: MeaningIndex, path: str | Path) -> None:
    payload = {
        "schema_version": INDEX_SCHEMA_VERSION,
        "kind": "meaning_index",
        "target_language": index.target_language,
        "provider_name": index.provider_name,
        "dim": index.dim,
        "excluded_empty_meaning": index.excluded_empty_meaning,
        "items": [
            {
                "entry_ref": item.entry_ref,
                "idiom": item.idiom,
                "meaning_en": item.meaning_en,
                "key_text": item.key_text,
                "vector": list(item.vector.values),
            }
            for item in index.items
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=0), encoding="utf-8")


def load_index(path: str | Path, *, expected_provider: str | None = None) -> MeaningIndex:
    """Load a persisted index, verifying schema and provider name."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("schema_version")
    if version != INDEX_SCHEMA_VERSION:
        raise ValueError(f"unsupported index schema version {version!r}")
    provider_name = payload["provider_name"]
    if expected_provider is not None and provider_name != expected_provider:
        raise ValueError(
            f"index was built with provider {provider_name!r}, "
            f"configuration expects {expected_provider!r}"
        )
    items = tuple(
        IndexItem(
            entry_ref=str(raw["entry_ref"]),
            idiom=raw["idiom"],
            meaning_en=raw["meaning_en"],
            key_text=raw["key_text"],
            vector=EmbeddingVector(values=tuple(float(x) for x in raw["vector"])),
        )
        for raw in payload["items"]
    )
    return MeaningIndex(
        target_language=payload["target_language"],
        items=items,
        provider_name=provider_name,
        dim=int(payload["dim"]),
        excluded_empty_meaning=int(payload.get("excluded_empty_meaning", 0)),
    )
