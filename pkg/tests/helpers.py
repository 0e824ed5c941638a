"""Shared builders for scripted-mock fixtures.

The scripted LLM client answers by (template id, binding digest), so these
helpers mirror the binding maps the pipeline constructs at each step. A
missing entry fails loudly inside the run, which is exactly what we want:
a drifted binding map is a real regression.
"""

from __future__ import annotations

import json
from pathlib import Path

from idiomalign.embedding import HashedTrigramEmbedder, embed_text
from idiomalign.kb import (
    LANGUAGE_NAMES,
    IdiomEntry,
    build_knowledge_base,
    normalize_meaning_key,
)
from idiomalign.pipeline import PipelineConfig, TranslationTask
from idiomalign.pipeline.prompts import format_numbered_options, format_scored_options
from idiomalign.pipeline.clients import script_key
from idiomalign.retrieval import build_meaning_index, retrieve_candidates

Exchange = tuple[str, dict, str]


def paired_entries(n: int, source_language: str = "en", target_language: str = "zh"):
    """n idiom pairs whose English meanings are string-identical across languages."""
    entries = []
    for i in range(n):
        meaning = f"to deal with problem number {i:02d} calmly and without delay"
        entries.append(
            IdiomEntry(
                id=f"{source_language}{i:03d}",
                language=source_language,
                idiom=f"turn the tide {i:02d}",
                meaning_en=meaning,
            )
        )
        entries.append(
            IdiomEntry(
                id=f"{target_language}{i:03d}",
                language=target_language,
                idiom=f"力挽狂澜{i:02d}",
                meaning_en=meaning,
            )
        )
    return entries


def make_task(i: int, source_language: str = "en", target_language: str = "zh") -> TranslationTask:
    meaning = f"to deal with problem number {i:02d} calmly and without delay"
    return TranslationTask(
        source_sentence=f"She managed to turn the tide {i:02d} before the deadline.",
        source_language=source_language,
        target_language=target_language,
        idiom_surface=f"turn the tide {i:02d}",
        idiom_meaning_en=meaning,
    )


def sia_exchanges(
    task: TranslationTask,
    index,
    provider,
    config: PipelineConfig,
    *,
    selection_response: str | None = None,
    translation: str = "翻译结果。",
) -> list[Exchange]:
    """Script for a full SIA run over `task` against `index`.

    By default the confirmation response names the rank-1 candidate. With no
    candidate above threshold, scripts the meaning-fallback call instead.
    """
    source_name = LANGUAGE_NAMES[task.source_language]
    target_name = LANGUAGE_NAMES[task.target_language]
    meaning = task.idiom_meaning_en
    query = embed_text(provider, normalize_meaning_key(meaning))
    candidates = retrieve_candidates(index, query, config.retrieval)
    if not candidates:
        bindings = {
            "idiom": task.idiom_surface,
            "match": meaning,
            "sentence": task.source_sentence,
            "target_language": target_name,
        }
        return [("sia_translate", bindings, translation)]
    if selection_response is None:
        selection_response = f"The best match is '{candidates[0].idiom}'."
    picked = next(
        (c.idiom for c in candidates if c.idiom in selection_response), candidates[0].idiom
    )
    mentioned = {c.idiom for c in candidates if c.idiom in selection_response}
    if len(mentioned) != 1:
        picked = candidates[0].idiom
    return [
        (
            "sia_confirm_1",
            {
                "target_language": target_name,
                "source_language": source_name,
                "idiom": task.idiom_surface,
                "meaning": meaning,
                "options": ", ".join(c.idiom for c in candidates),
            },
            "Considering the options now.",
        ),
        (
            "sia_confirm_2",
            {
                "target_language": target_name,
                "scored_options": format_scored_options(
                    [(c.idiom, c.score) for c in candidates]
                ),
            },
            selection_response,
        ),
        (
            "sia_translate",
            {
                "idiom": task.idiom_surface,
                "match": picked,
                "sentence": task.source_sentence,
                "target_language": target_name,
            },
            translation,
        ),
    ]


def lia_exchanges(
    task: TranslationTask,
    config: PipelineConfig,
    *,
    generation_response: str,
    candidates: list[str] | None = None,
    selection_response: str | None = None,
    definition: str | None = None,
    translation: str = "翻译结果。",
) -> list[Exchange]:
    """Script for a full LIA run.

    `candidates` is what the pipeline should parse out of the generation
    response (after its own truncation); `definition` drives the
    no-candidate fallback instead.
    """
    source_name = LANGUAGE_NAMES[task.source_language]
    target_name = LANGUAGE_NAMES[task.target_language]
    generate = {
        "target_language": target_name,
        "source_language": source_name,
        "idiom": task.idiom_surface,
    }
    exchanges: list[Exchange] = [("lia_generate", generate, generation_response)]
    if candidates:
        truncated = candidates[: config.max_lia_candidates]
        if selection_response is None:
            selection_response = f"I select '{truncated[0]}'."
        mentioned = [c for c in truncated if c in selection_response]
        selected = mentioned[0] if len(set(mentioned)) == 1 else truncated[0]
        exchanges.append(
            (
                "lia_select",
                {
                    "target_language": target_name,
                    "source_language": source_name,
                    "idiom": task.idiom_surface,
                    "meaning": task.idiom_meaning_en,
                    "options": format_numbered_options(target_name, truncated),
                },
                selection_response,
            )
        )
        match = selected
    else:
        match = definition if definition is not None else task.idiom_meaning_en
    exchanges.append(
        (
            "lia_translate",
            {
                "target_language": target_name,
                "source_language": source_name,
                "idiom": task.idiom_surface,
                "match": match,
                "sentence": task.source_sentence,
            },
            translation,
        )
    )
    return exchanges


def direct_exchange(task: TranslationTask, translation: str = "直接翻译。") -> Exchange:
    return (
        "direct_translate",
        {
            "target_language": LANGUAGE_NAMES[task.target_language],
            "sentence": task.source_sentence,
        },
        translation,
    )


def judge_exchange(result, response: str) -> Exchange:
    """Script one judge call for an existing TranslationResult."""
    task = result.task
    template_id = "judge_with_idiom" if result.path == "idiom_match" else "judge_no_idiom"
    bindings = {
        "source_language": LANGUAGE_NAMES[task.source_language],
        "target_language": LANGUAGE_NAMES[task.target_language],
        "sentence": task.source_sentence,
        "idiom": task.idiom_surface,
        "translation": result.translation,
    }
    return (template_id, bindings, response)


def exchanges_to_script(exchanges: list[Exchange]) -> dict[str, str]:
    return {script_key(tid, bindings): response for tid, bindings, response in exchanges}


def write_script(path: Path, exchanges: list[Exchange]) -> Path:
    path.write_text(
        json.dumps(exchanges_to_script(exchanges), ensure_ascii=False, indent=2),
        encoding="utf-8",
    )
    return path


def build_index_for(entries, target_language: str = "zh", dim: int = 64):
    kb = build_knowledge_base(entries)
    provider = HashedTrigramEmbedder(dim)
    index = build_meaning_index(kb, target_language, provider)
    return kb, provider, index
