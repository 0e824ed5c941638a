from __future__ import annotations

import hashlib
import math

import pytest
from hypothesis import given, settings, strategies as st

from idiomalign.embedding import (
    EmbeddingVector,
    HashedTrigramEmbedder,
    cosine_similarity,
    embed_text,
    test_embed as reference_embed,
)

# Independent re-implementation of the hashed-trigram scheme. Any change to
# the seed, hashing, bucketing, or normalization shows up as a mismatch here.
def oracle_embed(text: str, dim: int) -> tuple[float, ...]:
    lowered = text.lower()
    if len(lowered) < 3:
        grams = [lowered]
    else:
        grams = [lowered[i : i + 3] for i in range(len(lowered) - 2)]
    counts = [0] * dim
    for gram in grams:
        digest = hashlib.sha256(b"idiomalign-trigram-v1:" + gram.encode("utf-8")).digest()
        counts[int.from_bytes(digest[:8], "big") % dim] += 1
    norm = math.sqrt(sum(c * c for c in counts))
    return tuple(c / norm for c in counts)


# embed("to remain silent", dim=16), frozen. Recomputing must reproduce these
# floats bit for bit on any platform.
GOLDEN_SILENT_16 = (
    0.21320071635561041,
    0.0,
    0.0,
    0.21320071635561041,
    0.42640143271122083,
    0.21320071635561041,
    0.42640143271122083,
    0.42640143271122083,
    0.0,
    0.42640143271122083,
    0.21320071635561041,
    0.0,
    0.0,
    0.21320071635561041,
    0.21320071635561041,
    0.0,
)


class TestHashedTrigramEmbedder:
    def test_golden_vector_bit_for_bit(self):
        vector = HashedTrigramEmbedder(16).embed("to remain silent")
        assert vector.values == GOLDEN_SILENT_16

    def test_matches_oracle_on_sample_texts(self):
        embedder = HashedTrigramEmbedder(32)
        for text in ["to remain silent", "缄口不言", "a", "ab", "  spaced  out  ", "ZIP one's LIPS"]:
            assert embedder.embed(text).values == oracle_embed(text, 32)

    @given(st.text(min_size=1, max_size=80), st.sampled_from([8, 16, 64, 384]))
    @settings(max_examples=150)
    def test_matches_oracle_everywhere(self, text, dim):
        assert HashedTrigramEmbedder(dim).embed(text).values == oracle_embed(text, dim)

    def test_deterministic_across_instances(self):
        a = HashedTrigramEmbedder(64).embed("miss the boat")
        b = HashedTrigramEmbedder(64).embed("miss the boat")
        assert a == b

    def test_case_insensitive(self):
        e = HashedTrigramEmbedder(64)
        assert e.embed("Miss The Boat") == e.embed("miss the boat")

    def test_short_text_uses_whole_text_gram(self):
        e = HashedTrigramEmbedder(8)
        vector = e.embed("ok")
        assert sorted(vector.values) == [0.0] * 7 + [1.0]

    def test_unit_norm(self):
        vector = HashedTrigramEmbedder(64).embed("where there is a will there is a way")
        assert sum(v * v for v in vector.values) == pytest.approx(1.0, abs=1e-12)

    def test_dim_and_name(self):
        e = HashedTrigramEmbedder(128)
        assert e.dim == 128
        assert e.name == "hashed-trigram-v1-d128"
        assert e.embed("text").dim == 128

    def test_rejects_tiny_dim(self):
        with pytest.raises(ValueError):
            HashedTrigramEmbedder(4)


class TestEmbedText:
    def test_rejects_empty_or_blank(self, provider):
        for bad in ("", "   ", "\n\t"):
            with pytest.raises(ValueError, match="empty"):
                embed_text(provider, bad)

    def test_enforces_provider_dim(self):
        class LyingProvider:
            name = "liar"
            dim = 8

            def embed(self, text):
                return EmbeddingVector((1.0,) * 4)

        with pytest.raises(ValueError, match="dim"):
            embed_text(LyingProvider(), "text")

    def test_rejects_zero_vector(self):
        class ZeroProvider:
            name = "zero"
            dim = 4

            def embed(self, text):
                return EmbeddingVector((0.0,) * 4)

        with pytest.raises(ValueError, match="zero"):
            embed_text(ZeroProvider(), "text")

    def test_reference_embedder_shortcut(self):
        assert reference_embed("to remain silent", dim=16).values == GOLDEN_SILENT_16


def vec(*values: float) -> EmbeddingVector:
    return EmbeddingVector(tuple(float(v) for v in values))


components = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestCosineSimilarity:
    def test_identity_orthogonal_antipodal(self):
        v = vec(0.3, -1.2, 4.0)
        assert cosine_similarity(v, v) == 1.0
        assert cosine_similarity(vec(1, 0), vec(0, 1)) == 0.0
        assert cosine_similarity(vec(2, 1), vec(-2, -1)) == pytest.approx(-1.0, abs=1e-9)

    def test_hand_computed_angle(self):
        # cos 45 degrees
        assert cosine_similarity(vec(1, 0), vec(1, 1)) == pytest.approx(
            math.sqrt(0.5), abs=1e-12
        )
        # 3-4-5 style: cos = (3*5 + 4*0) / (5 * 5)
        assert cosine_similarity(vec(3, 4), vec(5, 0)) == pytest.approx(0.6, abs=1e-12)

    def test_scale_invariance(self):
        a, b = vec(0.2, 0.9, -0.1), vec(1.0, -0.5, 2.0)
        assert cosine_similarity(a, b) == pytest.approx(
            cosine_similarity(vec(*(x * 37.5 for x in a.values)), b), abs=1e-9
        )

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_similarity(vec(1, 2), vec(1, 2, 3))

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(vec(0, 0), vec(1, 0))
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(vec(1, 0), vec(0, 0))

    @given(
        st.integers(min_value=2, max_value=16).flatmap(
            lambda d: st.tuples(
                st.lists(components, min_size=d, max_size=d),
                st.lists(components, min_size=d, max_size=d),
            )
        )
    )
    @settings(max_examples=300)
    def test_symmetry_and_bounds(self, pair):
        a_values, b_values = pair
        if (
            max(abs(v) for v in a_values) < 1e-100
            or max(abs(v) for v in b_values) < 1e-100
        ):
            return
        a, b = vec(*a_values), vec(*b_values)
        ab = cosine_similarity(a, b)
        ba = cosine_similarity(b, a)
        assert ab == pytest.approx(ba, abs=1e-9)
        assert -1.0 <= ab <= 1.0

    @given(
        st.lists(components, min_size=3, max_size=8),
        st.floats(min_value=1e-3, max_value=1e3, allow_nan=False),
    )
    @settings(max_examples=300)
    def test_positive_scale_invariance(self, values, scale):
        # Squaring denormals underflows to a zero norm, which is rejected.
        if max(abs(v) for v in values) < 1e-100:
            return
        a = vec(*values)
        b = vec(1.0, *([0.5] * (len(values) - 1)))
        assert cosine_similarity(a, b) == pytest.approx(
            cosine_similarity(vec(*(v * scale for v in values)), b), abs=1e-9
        )
