"""The three translation methods and their batch driver.

Every run produces a TranslationResult carrying the full prompt/response
trace, so a result file is a complete record of what the model was asked
and what it answered. Under the scripted mock client the whole pipeline is
a pure function of (task, config, script).
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from ..embedding import EmbeddingProvider, embed_text
from ..errors import LlmError, PipelineError
from ..kb import LANGUAGE_NAMES, KnowledgeBase, lookup_meaning, normalize_meaning_key
from ..retrieval import AlignmentCandidate, MeaningIndex, RetrievalConfig, retrieve_candidates
from .clients import LlmClient
from .prompts import (
    format_numbered_options,
    format_scored_options,
    get_template,
    render_prompt,
)

RESULTS_SCHEMA_VERSION = 1

METHOD_SIA = "sia"
METHOD_LIA = "lia"
METHOD_DIRECT = "direct"
METHODS = (METHOD_SIA, METHOD_LIA, METHOD_DIRECT)

PATH_IDIOM_MATCH = "idiom_match"
PATH_MEANING_FALLBACK = "meaning_fallback"
PATH_LLM_NO_CANDIDATE = "llm_no_candidate"
PATH_DIRECT = "direct"

FLAG_CONFIRMATION_MISMATCH = "confirmation_mismatch"
FLAG_PARSE_WARNING = "parse_warning"
FLAG_SURFACE_MISMATCH = "surface_not_in_sentence"

# Appended once when a generation response could not be parsed at all.
LIA_FORMAT_REMINDER = (
    "Respond with a numbered list of idioms (1., 2., 3.), or define the idiom "
    "if there is no match."
)


def _language_name(code: str) -> str:
    try:
        return LANGUAGE_NAMES[code]
    except KeyError:
        raise ValueError(f"unknown language code {code!r}") from None


@dataclass(frozen=True)
class TranslationTask:
    source_sentence: str
    source_language: str
    target_language: str
    idiom_surface: str
    idiom_meaning_en: str = ""

    def validation_errors(self) -> list[str]:
        errors: list[str] = []
        if not self.source_sentence.strip():
            errors.append("source_sentence is empty")
        if not self.idiom_surface.strip():
            errors.append("idiom_surface is empty")
        if self.source_language not in LANGUAGE_NAMES:
            errors.append(f"unknown source_language {self.source_language!r}")
        if self.target_language not in LANGUAGE_NAMES:
            errors.append(f"unknown target_language {self.target_language!r}")
        return errors

    def warnings(self) -> list[str]:
        # Morphology may alter the surface form, so this is advisory only.
        if self.idiom_surface and self.idiom_surface not in self.source_sentence:
            return [FLAG_SURFACE_MISMATCH]
        return []

    def to_record(self) -> dict:
        return {
            "source_sentence": self.source_sentence,
            "source_language": self.source_language,
            "target_language": self.target_language,
            "idiom_surface": self.idiom_surface,
            "idiom_meaning_en": self.idiom_meaning_en,
        }


@dataclass(frozen=True)
class LiaCandidate:
    """One LLM-generated idiom with its selection mark."""

    idiom: str
    selected: bool


Candidate = Union[AlignmentCandidate, LiaCandidate]


@dataclass(frozen=True)
class TranslationResult:
    task: TranslationTask
    method: str
    path: str
    matched_idiom: Optional[str]
    candidates: tuple[Candidate, ...]
    prompts: tuple[tuple[str, str, str], ...]
    translation: str
    translator_model: str
    temperature: float
    flags: tuple[str, ...] = ()

    @property
    def result_id(self) -> str:
        canonical = json.dumps(
            {
                "method": self.method,
                "translator_model": self.translator_model,
                "task": self.task.to_record(),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return "r" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class PipelineConfig:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    translation_temperature: float = 0.7
    judge_temperature: float = 0.1
    max_llm_retries: int = 3
    max_lia_candidates: int = 3

    def __post_init__(self) -> None:
        if not 0.0 <= self.translation_temperature <= 2.0:
            raise ValueError("translation_temperature must be in [0, 2]")
        if not 0.0 <= self.judge_temperature <= 2.0:
            raise ValueError("judge_temperature must be in [0, 2]")
        if self.max_llm_retries < 0:
            raise ValueError("max_llm_retries must be >= 0")
        if not 1 <= self.max_lia_candidates <= 3:
            raise ValueError("max_lia_candidates must be in [1, 3]")

    def to_dict(self) -> dict:
        return {
            "retrieval": {"threshold": self.retrieval.threshold, "k": self.retrieval.k},
            "translation_temperature": self.translation_temperature,
            "judge_temperature": self.judge_temperature,
            "max_llm_retries": self.max_llm_retries,
            "max_lia_candidates": self.max_lia_candidates,
        }


def config_digest(config: PipelineConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _require_valid(task: TranslationTask) -> None:
    errors = task.validation_errors()
    if errors:
        raise ValueError(f"invalid task: {'; '.join(errors)}")


def _send(
    llm: LlmClient,
    template_id: str,
    bindings: Mapping[str, str],
    temperature: float,
    trace: list[tuple[str, str, str]],
) -> str:
    prompt = render_prompt(get_template(template_id), bindings)
    try:
        response = llm.complete(
            prompt, temperature, template_id=template_id, bindings=bindings
        )
    except LlmError as exc:
        raise PipelineError(
            f"LLM call failed on template {template_id!r}: {exc}", trace=trace
        ) from exc
    trace.append((template_id, prompt, response))
    return response


def _pick_by_substring(
    surfaces: Sequence[str], response: str
) -> tuple[int, bool]:
    """Index of the single surface mentioned in the response.

    Zero or multiple distinct mentions fall back to rank 1 with a mismatch
    mark (second element False means the response did not pin one option).
    """
    mentioned = [i for i, s in enumerate(surfaces) if s and s in response]
    distinct = {surfaces[i] for i in mentioned}
    if len(distinct) == 1:
        return mentioned[0], True
    return 0, False


_NUMBERED_ITEM = re.compile(r"^\s*\d+[.)]\s*(.+?)\s*$")
_NO_MATCH = re.compile(r"\bno\b[^.!?\n]{0,120}?\bidioms?\b", re.IGNORECASE)
_DEFINITION = re.compile(r"\bdefinitions?\b", re.IGNORECASE)
_QUOTE_CHARS = "\"'‘’“”「」"


def _strip_item(text: str) -> str:
    return text.strip().strip(_QUOTE_CHARS).strip()


def _classify_generation(response: str) -> tuple[list[str], str]:
    """(candidates, kind) where kind is items, no_match, or unparsed."""
    items: list[str] = []
    for line in response.splitlines():
        match = _NUMBERED_ITEM.match(line)
        if match:
            cleaned = _strip_item(match.group(1))
            if cleaned:
                items.append(cleaned)
    if items:
        return items[:3], "items"
    if _NO_MATCH.search(response) or _DEFINITION.search(response):
        return [], "no_match"
    lines = [_strip_item(line) for line in response.splitlines()]
    lines = [line for line in lines if line]
    if lines:
        return lines[:3], "items"
    return [], "unparsed"


def parse_lia_candidates(response: str) -> list[str]:
    """Candidate idioms from a generation response, at most three.

    Numbered list items win; otherwise a no-match/definition-only response
    yields an empty list; otherwise non-empty lines are taken as one
    candidate each.
    """
    candidates, _ = _classify_generation(response)
    return candidates


_DEFINITION_MARKER = re.compile(r"\bdefinitions?\b\s*(?:of[^:]{0,80})?[:\-]?\s*", re.IGNORECASE)


def _extract_definition(response: str) -> str:
    """Definition text from a no-match generation response.

    Takes what follows a "Definition:" marker (or the whole response when
    there is none) and drops any trailing no-match sentence.
    """
    marker = _DEFINITION_MARKER.search(response)
    text = response[marker.end() :] if marker else response
    sentences = re.split(r"(?<=[.!?])\s+", text.strip())
    kept = [s for s in sentences if s and not _NO_MATCH.search(s)]
    return " ".join(kept).strip().rstrip(".").strip()


def run_sia(
    task: TranslationTask,
    kb: KnowledgeBase,
    index: MeaningIndex,
    llm: LlmClient,
    config: PipelineConfig,
    *,
    provider: EmbeddingProvider,
) -> TranslationResult:
    """Semantic idiom alignment: embed the meaning, retrieve, confirm, translate.

    The query must be embedded by the same provider that built the index;
    provider.name is checked against index.provider_name.
    """
    _require_valid(task)
    if index.target_language != task.target_language:
        raise ValueError(
            f"index is for {index.target_language!r}, task targets {task.target_language!r}"
        )
    if provider.name != index.provider_name:
        raise ValueError(
            f"index was built with provider {index.provider_name!r}, got {provider.name!r}"
        )
    meaning = task.idiom_meaning_en.strip() or (
        lookup_meaning(kb, task.source_language, task.idiom_surface) or ""
    )
    if not meaning.strip():
        raise ValueError(
            f"no English meaning for idiom {task.idiom_surface!r}: "
            "not on the task and not in the knowledge base"
        )
    flags = list(task.warnings())
    trace: list[tuple[str, str, str]] = []
    source_name = _language_name(task.source_language)
    target_name = _language_name(task.target_language)

    query = embed_text(provider, normalize_meaning_key(meaning))
    candidates = retrieve_candidates(index, query, config.retrieval)

    if not candidates:
        bindings = {
            "idiom": task.idiom_surface,
            "match": meaning,
            "sentence": task.source_sentence,
            "target_language": target_name,
        }
        translation = _send(
            llm, "sia_translate", bindings, config.translation_temperature, trace
        )
        return TranslationResult(
            task=task,
            method=METHOD_SIA,
            path=PATH_MEANING_FALLBACK,
            matched_idiom=None,
            candidates=(),
            prompts=tuple(trace),
            translation=translation,
            translator_model=llm.model_name,
            temperature=config.translation_temperature,
            flags=tuple(flags),
        )

    confirm_1 = {
        "target_language": target_name,
        "source_language": source_name,
        "idiom": task.idiom_surface,
        "meaning": meaning,
        "options": ", ".join(c.idiom for c in candidates),
    }
    _send(llm, "sia_confirm_1", confirm_1, config.translation_temperature, trace)

    confirm_2 = {
        "target_language": target_name,
        "scored_options": format_scored_options([(c.idiom, c.score) for c in candidates]),
    }
    selection_response = _send(
        llm, "sia_confirm_2", confirm_2, config.translation_temperature, trace
    )

    picked, pinned = _pick_by_substring([c.idiom for c in candidates], selection_response)
    if not pinned:
        flags.append(FLAG_CONFIRMATION_MISMATCH)
    confirmed = candidates[picked]

    translate = {
        "idiom": task.idiom_surface,
        "match": confirmed.idiom,
        "sentence": task.source_sentence,
        "target_language": target_name,
    }
    translation = _send(llm, "sia_translate", translate, config.translation_temperature, trace)

    return TranslationResult(
        task=task,
        method=METHOD_SIA,
        path=PATH_IDIOM_MATCH,
        matched_idiom=confirmed.idiom,
        candidates=tuple(candidates),
        prompts=tuple(trace),
        translation=translation,
        translator_model=llm.model_name,
        temperature=config.translation_temperature,
        flags=tuple(flags),
    )


def run_lia(task: TranslationTask, llm: LlmClient, config: PipelineConfig) -> TranslationResult:
    """LLM-based idiom alignment: generate candidates, select, translate."""
    _require_valid(task)
    if not task.idiom_meaning_en.strip():
        raise ValueError("task has no idiom_meaning_en")
    flags = list(task.warnings())
    trace: list[tuple[str, str, str]] = []
    source_name = _language_name(task.source_language)
    target_name = _language_name(task.target_language)

    generate = {
        "target_language": target_name,
        "source_language": source_name,
        "idiom": task.idiom_surface,
    }
    generation_response = _send(
        llm, "lia_generate", generate, config.translation_temperature, trace
    )
    candidates, kind = _classify_generation(generation_response)

    if kind == "unparsed":
        # One re-ask with an explicit format reminder, then give up.
        flags.append(FLAG_PARSE_WARNING)
        retry = dict(generate)
        retry["reminder"] = LIA_FORMAT_REMINDER
        prompt = render_prompt(get_template("lia_generate"), generate) + "\n" + LIA_FORMAT_REMINDER
        try:
            generation_response = llm.complete(
                prompt,
                config.translation_temperature,
                template_id="lia_generate",
                bindings=retry,
            )
        except LlmError as exc:
            raise PipelineError(f"LLM call failed on re-ask: {exc}", trace=trace) from exc
        trace.append(("lia_generate", prompt, generation_response))
        candidates, kind = _classify_generation(generation_response)
        if kind == "unparsed":
            raise PipelineError(
                "generation response unparseable after a format-reminder re-ask",
                trace=trace,
            )

    if candidates:
        candidates = candidates[: config.max_lia_candidates]
        select = {
            "target_language": target_name,
            "source_language": source_name,
            "idiom": task.idiom_surface,
            "meaning": task.idiom_meaning_en,
            "options": format_numbered_options(target_name, candidates),
        }
        selection_response = _send(
            llm, "lia_select", select, config.translation_temperature, trace
        )
        picked, pinned = _pick_by_substring(candidates, selection_response)
        if not pinned:
            flags.append(FLAG_CONFIRMATION_MISMATCH)
        selected = candidates[picked]

        translate = {
            "target_language": target_name,
            "source_language": source_name,
            "idiom": task.idiom_surface,
            "match": selected,
            "sentence": task.source_sentence,
        }
        translation = _send(
            llm, "lia_translate", translate, config.translation_temperature, trace
        )
        return TranslationResult(
            task=task,
            method=METHOD_LIA,
            path=PATH_IDIOM_MATCH,
            matched_idiom=selected,
            candidates=tuple(
                LiaCandidate(idiom=c, selected=(i == picked)) for i, c in enumerate(candidates)
            ),
            prompts=tuple(trace),
            translation=translation,
            translator_model=llm.model_name,
            temperature=config.translation_temperature,
            flags=tuple(flags),
        )

    definition = _extract_definition(generation_response)
    if not definition:
        flags.append(FLAG_PARSE_WARNING)
        definition = task.idiom_meaning_en
    translate = {
        "target_language": target_name,
        "source_language": source_name,
        "idiom": task.idiom_surface,
        "match": definition,
        "sentence": task.source_sentence,
    }
    translation = _send(llm, "lia_translate", translate, config.translation_temperature, trace)
    return TranslationResult(
        task=task,
        method=METHOD_LIA,
        path=PATH_LLM_NO_CANDIDATE,
        matched_idiom=None,
        candidates=(),
        prompts=tuple(trace),
        translation=translation,
        translator_model=llm.model_name,
        temperature=config.translation_temperature,
        flags=tuple(flags),
    )


def run_direct(task: TranslationTask, llm: LlmClient, config: PipelineConfig) -> TranslationResult:
    """Plain translation baseline; no idiom hint of any kind."""
    _require_valid(task)
    flags = list(task.warnings())
    trace: list[tuple[str, str, str]] = []
    bindings = {
        "target_language": _language_name(task.target_language),
        "sentence": task.source_sentence,
    }
    translation = _send(llm, "direct_translate", bindings, config.translation_temperature, trace)
    return TranslationResult(
        task=task,
        method=METHOD_DIRECT,
        path=PATH_DIRECT,
        matched_idiom=None,
        candidates=(),
        prompts=tuple(trace),
        translation=translation,
        translator_model=llm.model_name,
        temperature=config.translation_temperature,
        flags=tuple(flags),
    )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_batch(
    tasks: Sequence[TranslationTask],
    method: str,
    *,
    llm: LlmClient,
    config: PipelineConfig,
    kb: KnowledgeBase | None = None,
    index: MeaningIndex | None = None,
    provider: EmbeddingProvider | None = None,
    max_workers: int = 1,
) -> tuple[list[TranslationResult], dict]:
    """Run one method over a batch. Failures are recorded, not fatal.

    Results come back in input order. Only if every task fails does the
    batch itself error.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    directions = {(t.source_language, t.target_language) for t in tasks}
    if len(directions) > 1:
        raise ValueError(f"tasks span multiple language directions: {sorted(directions)}")
    if method == METHOD_SIA and (kb is None or index is None or provider is None):
        raise ValueError("sia requires kb, index, and provider")

    def run_one(task: TranslationTask) -> TranslationResult:
        if method == METHOD_SIA:
            return run_sia(task, kb, index, llm, config, provider=provider)
        if method == METHOD_LIA:
            return run_lia(task, llm, config)
        return run_direct(task, llm, config)

    started = _utc_now()
    outcomes: list[tuple[int, TranslationResult | None, str | None]] = []
    if max_workers <= 1:
        for i, task in enumerate(tasks):
            try:
                outcomes.append((i, run_one(task), None))
            except Exception as exc:
                outcomes.append((i, None, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [(i, pool.submit(run_one, task)) for i, task in enumerate(tasks)]
            for i, future in futures:
                try:
                    outcomes.append((i, future.result(), None))
                except Exception as exc:
                    outcomes.append((i, None, str(exc)))
    outcomes.sort(key=lambda o: o[0])

    results = [r for _, r, _ in outcomes if r is not None]
    failures = [
        {"task_index": i, "source_sentence": tasks[i].source_sentence, "error": err}
        for i, r, err in outcomes
        if r is None
    ]
    if tasks and not results:
        raise PipelineError(f"all {len(tasks)} tasks failed; first error: {failures[0]['error']}")

    direction = (
        f"{tasks[0].source_language}-{tasks[0].target_language}" if tasks else ""
    )
    manifest = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "kind": "run_manifest",
        "method": method,
        "direction": direction,
        "translator_model": llm.model_name,
        "config_digest": config_digest(config),
        "task_count": len(tasks),
        "result_count": len(results),
        "failure_count": len(failures),
        "failures": failures,
        "started_at": started,
        "finished_at": _utc_now(),
    }
    return results, manifest


def result_to_record(result: TranslationResult) -> dict:
    candidates: list[dict] = []
    for candidate in result.candidates:
        if isinstance(candidate, AlignmentCandidate):
            candidates.append(
                {
                    "entry_ref": candidate.entry_ref,
                    "idiom": candidate.idiom,
                    "meaning_en": candidate.meaning_en,
                    "score": candidate.score,
                }
            )
        else:
            candidates.append({"idiom": candidate.idiom, "selected": candidate.selected})
    return {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "result_id": result.result_id,
        "method": result.method,
        "path": result.path,
        "matched_idiom": result.matched_idiom,
        "translation": result.translation,
        "translator_model": result.translator_model,
        "temperature": result.temperature,
        "flags": list(result.flags),
        "task": result.task.to_record(),
        "candidates": candidates,
        "prompts": [list(entry) for entry in result.prompts],
    }


def record_to_result(record: Mapping) -> TranslationResult:
    version = record.get("schema_version")
    if version != RESULTS_SCHEMA_VERSION:
        raise ValueError(f"unsupported results schema version {version!r}")
    task_record = record["task"]
    task = TranslationTask(
        source_sentence=task_record["source_sentence"],
        source_language=task_record["source_language"],
        target_language=task_record["target_language"],
        idiom_surface=task_record["idiom_surface"],
        idiom_meaning_en=task_record.get("idiom_meaning_en", ""),
    )
    candidates: list[Candidate] = []
    for raw in record.get("candidates", []):
        if "score" in raw:
            candidates.append(
                AlignmentCandidate(
                    entry_ref=str(raw["entry_ref"]),
                    idiom=raw["idiom"],
                    meaning_en=raw["meaning_en"],
                    score=float(raw["score"]),
                )
            )
        else:
            candidates.append(LiaCandidate(idiom=raw["idiom"], selected=bool(raw["selected"])))
    return TranslationResult(
        task=task,
        method=record["method"],
        path=record["path"],
        matched_idiom=record.get("matched_idiom"),
        candidates=tuple(candidates),
        prompts=tuple((p[0], p[1], p[2]) for p in record.get("prompts", [])),
        translation=record["translation"],
        translator_model=record["translator_model"],
        temperature=float(record["temperature"]),
        flags=tuple(record.get("flags", [])),
    )


def load_tasks_jsonl(path: str | Path) -> list[TranslationTask]:
    """Tasks from a JSONL file; unknown fields are ignored."""
    tasks: list[TranslationTask] = []
    # JSONL: records never contain a raw \n, so split on it alone (splitlines
    # would also cut on U+0085/U+2028, which json.dumps leaves unescaped).
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        raw = json.loads(line)
        try:
            tasks.append(
                TranslationTask(
                    source_sentence=raw["source_sentence"],
                    source_language=raw["source_language"],
                    target_language=raw["target_language"],
                    idiom_surface=raw["idiom_surface"],
                    idiom_meaning_en=raw.get("idiom_meaning_en", ""),
                )
            )
        except KeyError as exc:
            raise ValueError(f"task line {line_no} is missing field {exc}") from None
    return tasks


def results_to_jsonl(results: Iterable[TranslationResult]) -> bytes:
    lines = [json.dumps(result_to_record(r), ensure_ascii=False) for r in results]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def load_results_jsonl(path: str | Path) -> list[TranslationResult]:
    results: list[TranslationResult] = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if line.strip():
            results.append(record_to_result(json.loads(line)))
    return results
