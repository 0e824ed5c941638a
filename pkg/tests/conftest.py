from __future__ import annotations

import pytest

from idiomalign.embedding import HashedTrigramEmbedder
from idiomalign.kb import IdiomEntry, build_knowledge_base
from idiomalign.pipeline import PipelineConfig, TranslationTask
from idiomalign.retrieval import build_meaning_index


@pytest.fixture()
def small_entries() -> list[IdiomEntry]:
    return [
        IdiomEntry(
            id="zh1",
            language="zh",
            idiom="缄口不言",
            meaning_en="to remain silent or keep a secret",
        ),
        IdiomEntry(
            id="zh2",
            language="zh",
            idiom="守口如瓶",
            meaning_en="to guard a secret closely",
        ),
        IdiomEntry(
            id="zh3",
            language="zh",
            idiom="雪中送炭",
            meaning_en="to offer help in someone's hour of need",
        ),
        IdiomEntry(
            id="zh4",
            language="zh",
            idiom="画蛇添足",
            meaning_en="to spoil something by adding what is superfluous",
        ),
        IdiomEntry(
            id="en1",
            language="en",
            idiom="zip one's lips",
            meaning_en="to remain silent or keep a secret",
        ),
    ]


@pytest.fixture()
def small_kb(small_entries):
    return build_knowledge_base(small_entries)


@pytest.fixture()
def provider():
    return HashedTrigramEmbedder(64)


@pytest.fixture()
def zh_index(small_kb, provider):
    return build_meaning_index(small_kb, "zh", provider)


@pytest.fixture()
def config() -> PipelineConfig:
    return PipelineConfig()


@pytest.fixture()
def silent_task() -> TranslationTask:
    return TranslationTask(
        source_sentence="After the briefing he decided to zip one's lips about the merger.",
        source_language="en",
        target_language="zh",
        idiom_surface="zip one's lips",
        idiom_meaning_en="to remain silent or keep a secret",
    )
