"""Translation pipeline: prompt templates, LLM clients, and the three methods."""

from __future__ import annotations

from .prompts import PromptTemplate, TEMPLATES, get_template, render_prompt
from .clients import (
    HttpLlmClient,
    LlmClient,
    ScriptedLlmClient,
    binding_digest,
    script_key,
)
from .run import (
    LiaCandidate,
    PipelineConfig,
    TranslationResult,
    TranslationTask,
    config_digest,
    load_results_jsonl,
    load_tasks_jsonl,
    parse_lia_candidates,
    result_to_record,
    results_to_jsonl,
    run_batch,
    run_direct,
    run_lia,
    run_sia,
)

__all__ = [
    "PromptTemplate",
    "TEMPLATES",
    "get_template",
    "render_prompt",
    "LlmClient",
    "ScriptedLlmClient",
    "HttpLlmClient",
    "binding_digest",
    "script_key",
    "LiaCandidate",
    "PipelineConfig",
    "TranslationResult",
    "TranslationTask",
    "config_digest",
    "load_results_jsonl",
    "load_tasks_jsonl",
    "parse_lia_candidates",
    "result_to_record",
    "results_to_jsonl",
    "run_batch",
    "run_direct",
    "run_lia",
    "run_sia",
]
