"""LLM-as-judge scoring and score aggregation.

Judges see a three-part prompt: a focus line that depends on whether the
translation was produced with a specific idiom, the three-tier rubric, and
the translation under test, ending with the scaffold "Evaluation (score
only):". Scores are parsed with a first-standalone-digit rule because
models routinely wrap the score in prose.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import JudgeParseError, LlmError, PipelineError
from ..kb import LANGUAGE_NAMES
from ..pipeline.clients import LlmClient
from ..pipeline.prompts import get_template, render_prompt
from ..pipeline.run import PATH_IDIOM_MATCH, PipelineConfig, TranslationResult

SCORES_SCHEMA_VERSION = 1

# Appended when the first judge response holds no parseable score.
SCORE_FORMAT_REMINDER = "Respond with the score only: 1, 2, or 3."

_STANDALONE_SCORE = re.compile(r"(?<!\d)[123](?!\d)")


@dataclass(frozen=True)
class ScoreRecord:
    result_ref: str
    judge: str
    score: int
    raw_response: Optional[str] = None
    timestamp: Optional[str] = None

    def __post_init__(self) -> None:
        if self.score not in (1, 2, 3):
            raise ValueError(f"score must be 1, 2, or 3, got {self.score!r}")

    def to_record(self) -> dict:
        return {
            "schema_version": SCORES_SCHEMA_VERSION,
            "result_ref": self.result_ref,
            "judge": self.judge,
            "score": self.score,
            "raw_response": self.raw_response,
            "timestamp": self.timestamp,
        }


def parse_rubric_score(text: str) -> int:
    """First standalone 1, 2, or 3 in the text.

    Standalone means not adjacent to another digit, so "10/10" never reads
    as a 1.
    """
    match = _STANDALONE_SCORE.search(text)
    if match is None:
        raise JudgeParseError(f"no rubric score found in {text!r}", responses=[text])
    return int(match.group(0))


def _judge_bindings(result: TranslationResult) -> dict[str, str]:
    task = result.task
    return {
        "source_language": LANGUAGE_NAMES[task.source_language],
        "target_language": LANGUAGE_NAMES[task.target_language],
        "sentence": task.source_sentence,
        "idiom": task.idiom_surface,
        "translation": result.translation,
    }


def judge_template_id(result: TranslationResult) -> str:
    return "judge_with_idiom" if result.path == PATH_IDIOM_MATCH else "judge_no_idiom"


def build_judge_prompt(result: TranslationResult) -> str:
    """Rendered rubric prompt for one result.

    Results produced with a confirmed idiom are judged on the idiom's
    counterpart; everything else on the figurative meaning.
    """
    if not result.translation.strip():
        raise ValueError("result has no translation to judge")
    return render_prompt(get_template(judge_template_id(result)), _judge_bindings(result))


def judge_translation(
    result: TranslationResult, judge: LlmClient, config: PipelineConfig
) -> ScoreRecord:
    """Score one result with an LLM judge at the judge temperature.

    An unparseable response is re-asked once with a format reminder; a
    second failure raises JudgeParseError carrying both raw responses.
    """
    template_id = judge_template_id(result)
    bindings = _judge_bindings(result)
    prompt = build_judge_prompt(result)
    try:
        response = judge.complete(
            prompt, config.judge_temperature, template_id=template_id, bindings=bindings
        )
    except LlmError as exc:
        raise PipelineError(f"judge call failed: {exc}") from exc
    try:
        score = parse_rubric_score(response)
    except JudgeParseError:
        retry_bindings = dict(bindings)
        retry_bindings["reminder"] = SCORE_FORMAT_REMINDER
        retry_prompt = prompt + "\n" + SCORE_FORMAT_REMINDER
        try:
            retry_response = judge.complete(
                retry_prompt,
                config.judge_temperature,
                template_id=template_id,
                bindings=retry_bindings,
            )
        except LlmError as exc:
            raise PipelineError(f"judge re-ask failed: {exc}") from exc
        try:
            score = parse_rubric_score(retry_response)
        except JudgeParseError:
            raise JudgeParseError(
                f"no rubric score after re-ask for result {result.result_id}",
                responses=[response, retry_response],
            ) from None
        response = retry_response
    return ScoreRecord(
        result_ref=result.result_id,
        judge=judge.model_name,
        score=score,
        raw_response=response,
    )


def judge_batch(
    results: Sequence[TranslationResult],
    judge: LlmClient,
    config: PipelineConfig,
    *,
    skip_refs: frozenset[str] | set[str] = frozenset(),
) -> tuple[list[ScoreRecord], list[dict]]:
    """Judge a batch; per-result failures become error records.

    Results whose ids appear in skip_refs are not re-judged, so an
    interrupted run can resume against its partial output.
    """
    records: list[ScoreRecord] = []
    errors: list[dict] = []
    for result in results:
        if result.result_id in skip_refs:
            continue
        try:
            records.append(judge_translation(result, judge, config))
        except (JudgeParseError, PipelineError, ValueError) as exc:
            errors.append({"result_ref": result.result_id, "error": str(exc)})
    return records, errors


@dataclass(frozen=True)
class GroupStat:
    key: Mapping[str, str]
    mean: float
    count: int


@dataclass(frozen=True)
class AggregateReport:
    group_by: tuple[str, ...]
    groups: tuple[GroupStat, ...]
    total_count: int


_GROUP_KEYS = ("direction", "translator_model", "judge", "method", "path")


def aggregate_scores(
    records: Sequence[ScoreRecord],
    results: Sequence[TranslationResult],
    group_by: Sequence[str],
) -> AggregateReport:
    """Per-group mean scores. Means stay at full precision internally;
    rounding to 3 decimals happens only at display time."""
    for key in group_by:
        if key not in _GROUP_KEYS:
            raise ValueError(f"unknown group key {key!r}; choose from {_GROUP_KEYS}")
    by_id = {r.result_id: r for r in results}
    buckets: dict[tuple[str, ...], list[int]] = {}
    order: list[tuple[str, ...]] = []
    for record in records:
        result = by_id.get(record.result_ref)
        if result is None:
            raise ValueError(f"score references unknown result {record.result_ref!r}")
        attrs = {
            "direction": f"{result.task.source_language}-{result.task.target_language}",
            "translator_model": result.translator_model,
            "judge": record.judge,
            "method": result.method,
            "path": result.path,
        }
        key = tuple(attrs[k] for k in group_by)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(record.score)
    groups = tuple(
        GroupStat(
            key=dict(zip(group_by, key)),
            mean=sum(buckets[key]) / len(buckets[key]),
            count=len(buckets[key]),
        )
        for key in sorted(order)
    )
    return AggregateReport(group_by=tuple(group_by), groups=groups, total_count=len(records))


@dataclass(frozen=True)
class AgreementStats:
    rate: float
    compared: int
    judge_only: int
    human_only: int


def match_agreement(
    judge_scores: Sequence[ScoreRecord], human_scores: Sequence[ScoreRecord]
) -> AgreementStats:
    """Exact-match agreement over results scored by both sides.

    Each side is keyed by result_ref; the first record per ref wins if a
    side carries duplicates. Results scored by only one side are excluded
    from the rate but counted.
    """
    judge_by_ref: dict[str, int] = {}
    for record in judge_scores:
        judge_by_ref.setdefault(record.result_ref, record.score)
    human_by_ref: dict[str, int] = {}
    for record in human_scores:
        human_by_ref.setdefault(record.result_ref, record.score)
    shared = [ref for ref in judge_by_ref if ref in human_by_ref]
    if not shared:
        raise ValueError("no results scored by both sides")
    equal = sum(1 for ref in shared if judge_by_ref[ref] == human_by_ref[ref])
    return AgreementStats(
        rate=equal / len(shared),
        compared=len(shared),
        judge_only=len(judge_by_ref) - len(shared),
        human_only=len(human_by_ref) - len(shared),
    )


def exact_match_rate(
    judge_scores: Sequence[ScoreRecord], human_scores: Sequence[ScoreRecord]
) -> float:
    """Fraction of co-scored results where the two scores are equal."""
    return match_agreement(judge_scores, human_scores).rate


def score_records_to_jsonl(records: Iterable[ScoreRecord]) -> bytes:
    lines = [json.dumps(r.to_record(), ensure_ascii=False) for r in records]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def load_score_records(path: str | Path) -> list[ScoreRecord]:
    records: list[ScoreRecord] = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        raw = json.loads(line)
        version = raw.get("schema_version")
        if version != SCORES_SCHEMA_VERSION:
            raise ValueError(f"unsupported scores schema version {version!r}")
        records.append(
            ScoreRecord(
                result_ref=raw["result_ref"],
                judge=raw["judge"],
                score=int(raw["score"]),
                raw_response=raw.get("raw_response"),
                timestamp=raw.get("timestamp"),
            )
        )
    return records
