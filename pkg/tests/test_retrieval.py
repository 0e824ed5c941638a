from __future__ import annotations

import json
import math
import random
from types import SimpleNamespace

import pytest

from idiomalign.embedding import EmbeddingVector, HashedTrigramEmbedder, cosine_similarity
from idiomalign.kb import IdiomEntry, build_knowledge_base
from idiomalign.retrieval import (
    AlignmentCandidate,
    IndexItem,
    MeaningIndex,
    RetrievalConfig,
    build_meaning_index,
    load_index,
    match_statistics,
    retrieve_candidates,
    save_index,
)


def brute_force(index: MeaningIndex, query: EmbeddingVector, threshold: float, k: int):
    """Independent reference: score all, filter inclusively, sort, truncate."""
    scored = [
        AlignmentCandidate(
            entry_ref=item.entry_ref,
            idiom=item.idiom,
            meaning_en=item.meaning_en,
            score=cosine_similarity(query, item.vector),
        )
        for item in index.items
    ]
    kept = [c for c in scored if c.score >= threshold]
    kept.sort(key=lambda c: (-c.score, c.idiom))
    return kept[:k]


def make_index(vectors: list[tuple[float, ...]], idioms: list[str] | None = None) -> MeaningIndex:
    idioms = idioms or [f"idiom-{i:03d}" for i in range(len(vectors))]
    items = tuple(
        IndexItem(
            entry_ref=f"e{i}",
            idiom=idiom,
            meaning_en=f"meaning {i}",
            key_text=f"meaning {i}",
            vector=EmbeddingVector(v),
        )
        for i, (v, idiom) in enumerate(zip(vectors, idioms))
    )
    return MeaningIndex(
        target_language="zh", items=items, provider_name="fixture", dim=len(vectors[0])
    )


class TestRetrieveCandidates:
    def test_filters_sorts_and_truncates(self):
        index = make_index(
            [(1.0, 0.0), (0.9, 0.1), (0.0, 1.0), (0.8, 0.6)],
            ["甲", "乙", "丙", "丁"],
        )
        query = EmbeddingVector((1.0, 0.0))
        out = retrieve_candidates(index, query, RetrievalConfig(threshold=0.7, k=4))
        assert [c.idiom for c in out] == ["甲", "乙", "丁"]
        assert out[0].score == 1.0
        assert all(a.score >= b.score for a, b in zip(out, out[1:]))

    def test_k_truncation(self):
        index = make_index([(1.0, float(i) / 100) for i in range(10)])
        query = EmbeddingVector((1.0, 0.0))
        out = retrieve_candidates(index, query, RetrievalConfig(threshold=0.0, k=3))
        assert len(out) == 3

    def test_tie_broken_by_idiom_codepoint(self):
        same = (0.6, 0.8)
        index = make_index([same, same, same], ["丙三", "甲一", "乙二"])
        out = retrieve_candidates(
            index, EmbeddingVector((0.6, 0.8)), RetrievalConfig(threshold=0.7, k=3)
        )
        assert [c.idiom for c in out] == sorted(["丙三", "甲一", "乙二"])
        assert all(c.score == 1.0 for c in out)

    def test_exact_threshold_candidate_included(self):
        # Construct x = (0.7, s) with 0.7^2 + s^2 == 1.0 exactly, so the
        # cosine against (1, 0) computes to exactly 0.7.
        s = math.sqrt(1.0 - 0.7 * 0.7)
        for _ in range(10):
            if 0.7 * 0.7 + s * s == 1.0:
                break
            s = math.nextafter(s, 2.0)
        assert 0.7 * 0.7 + s * s == 1.0, "no exact-norm neighbor found"
        index = make_index([(0.7, s)], ["边界"])
        query = EmbeddingVector((1.0, 0.0))
        out = retrieve_candidates(index, query, RetrievalConfig(threshold=0.7, k=4))
        assert len(out) == 1
        assert out[0].score == 0.7

    def test_just_below_threshold_excluded(self):
        below = (0.69, math.sqrt(1 - 0.69 * 0.69))
        index = make_index([below], ["不够"])
        out = retrieve_candidates(
            index, EmbeddingVector((1.0, 0.0)), RetrievalConfig(threshold=0.7, k=4)
        )
        assert out == []

    def test_empty_when_nothing_clears_threshold(self):
        index = make_index([(0.0, 1.0), (-1.0, 0.0)])
        out = retrieve_candidates(
            index, EmbeddingVector((1.0, 0.0)), RetrievalConfig(threshold=0.7, k=4)
        )
        assert out == []

    def test_query_dim_checked(self):
        index = make_index([(1.0, 0.0)])
        with pytest.raises(ValueError, match="dim"):
            retrieve_candidates(
                index, EmbeddingVector((1.0, 0.0, 0.0)), RetrievalConfig()
            )

    def test_matches_brute_force_oracle(self):
        rng = random.Random(20240814)
        for trial in range(200):
            n = rng.randint(1, 60)
            dim = rng.choice([2, 3, 8])
            vectors = []
            while len(vectors) < n:
                v = tuple(rng.uniform(-1, 1) for _ in range(dim))
                if any(x != 0 for x in v):
                    vectors.append(v)
            # Force some exact ties via duplicated vectors.
            if n >= 4 and rng.random() < 0.5:
                vectors[1] = vectors[0]
                vectors[2] = vectors[0]
            index = make_index(vectors)
            query = EmbeddingVector(tuple(rng.uniform(-1, 1) for _ in range(dim)))
            if not any(x != 0 for x in query.values):
                continue
            threshold = rng.choice([0.0, 0.7, 0.95])
            k = rng.choice([1, 4, 10])
            got = retrieve_candidates(index, query, RetrievalConfig(threshold=threshold, k=k))
            assert got == brute_force(index, query, threshold, k), f"trial {trial}"

    def test_raising_threshold_never_adds_candidates(self):
        rng = random.Random(99)
        vectors = [tuple(rng.uniform(-1, 1) for _ in range(3)) for _ in range(40)]
        index = make_index(vectors)
        query = EmbeddingVector((0.5, -0.2, 0.8))
        previous = None
        for threshold in [0.0, 0.2, 0.5, 0.7, 0.9, 0.99]:
            got = {
                c.entry_ref
                for c in retrieve_candidates(
                    index, query, RetrievalConfig(threshold=threshold, k=40)
                )
            }
            if previous is not None:
                assert got <= previous
            previous = got


class TestRetrievalConfig:
    def test_bounds(self):
        with pytest.raises(ValueError):
            RetrievalConfig(threshold=1.5)
        with pytest.raises(ValueError):
            RetrievalConfig(threshold=-1.5)
        with pytest.raises(ValueError):
            RetrievalConfig(k=0)
        assert RetrievalConfig().threshold == 0.7
        assert RetrievalConfig().k == 4


class TestBuildMeaningIndex:
    def test_only_target_language_embedded_in_id_order(self, small_kb, provider):
        index = build_meaning_index(small_kb, "zh", provider)
        assert [i.entry_ref for i in index.items] == ["zh1", "zh2", "zh3", "zh4"]
        assert index.provider_name == provider.name
        assert index.dim == provider.dim
        assert all(i.key_text == i.key_text.lower().strip() for i in index.items)

    def test_empty_meanings_excluded_and_counted(self, provider):
        entries = [
            IdiomEntry(id="a", language="zh", idiom="一", meaning_en="..."),
            IdiomEntry(id="b", language="zh", idiom="二", meaning_en="a real meaning"),
        ]
        index = build_meaning_index(build_knowledge_base(entries), "zh", provider)
        assert len(index.items) == 1
        assert index.excluded_empty_meaning == 1

    def test_no_target_entries_rejected(self, small_kb, provider):
        with pytest.raises(ValueError, match="no entries"):
            build_meaning_index(small_kb, "ur", provider)

    def test_all_empty_meanings_rejected(self, provider):
        entries = [IdiomEntry(id="a", language="zh", idiom="一", meaning_en="!!!")]
        with pytest.raises(ValueError, match="empty"):
            build_meaning_index(build_knowledge_base(entries), "zh", provider)

    def test_identical_meaning_retrieves_at_exactly_one(self, small_kb, provider):
        from idiomalign.embedding import embed_text
        from idiomalign.kb import normalize_meaning_key

        index = build_meaning_index(small_kb, "zh", provider)
        query = embed_text(provider, normalize_meaning_key("to remain silent or keep a secret"))
        out = retrieve_candidates(index, query, RetrievalConfig())
        assert out[0].idiom == "缄口不言"
        assert out[0].score == 1.0


class TestIndexPersistence:
    def test_round_trip_preserves_retrieval(self, zh_index, provider, tmp_path):
        path = tmp_path / "index.json"
        save_index(zh_index, path)
        loaded = load_index(path, expected_provider=provider.name)
        assert loaded == zh_index
        query = provider.embed("to remain silent or keep a secret")
        assert retrieve_candidates(loaded, query, RetrievalConfig()) == retrieve_candidates(
            zh_index, query, RetrievalConfig()
        )

    def test_provider_mismatch_rejected(self, zh_index, tmp_path):
        path = tmp_path / "index.json"
        save_index(zh_index, path)
        with pytest.raises(ValueError, match="provider"):
            load_index(path, expected_provider="some-other-model")

    def test_schema_version_checked(self, zh_index, tmp_path):
        path = tmp_path / "index.json"
        save_index(zh_index, path)
        blob = json.loads(path.read_text())
        blob["schema_version"] = 999
        path.write_text(json.dumps(blob))
        with pytest.raises(ValueError, match="schema"):
            load_index(path)


class TestMatchStatistics:
    def test_counts_by_path(self):
        results = [SimpleNamespace(path="idiom_match")] * 262 + [
            SimpleNamespace(path="meaning_fallback")
        ] * 238
        stats = match_statistics(results)
        assert stats == {"matched": 262, "unmatched": 238}
        assert stats["matched"] + stats["unmatched"] == 500

    def test_empty(self):
        assert match_statistics([]) == {"matched": 0, "unmatched": 0}
