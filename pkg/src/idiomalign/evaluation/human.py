"""Anonymized human-evaluation workflow.

Two result sets produced by different models over the same sentences are
paired, shuffled into anonymous A/B order with a seeded generator, and
exported as task payloads that carry no model identifiers. The label→model
mapping is sealed in a separate blind-map file that annotators never see;
imports resolve labels back through it.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..kb import LANGUAGE_NAMES
from ..pipeline.prompts import (
    JUDGE_FOCUS_NO_IDIOM,
    JUDGE_FOCUS_WITH_IDIOM,
    RUBRIC_CRITERIA,
    RUBRIC_TIERS,
)
from ..pipeline.run import PATH_IDIOM_MATCH, TranslationResult
from .scoring import ScoreRecord

LABELS = ("A", "B")


@dataclass(frozen=True)
class LabeledTranslation:
    label: str
    text: str
    task_prompt: str


@dataclass(frozen=True)
class HumanTask:
    task_id: str
    source_sentence: str
    idiom_meaning: str
    translations: tuple[LabeledTranslation, LabeledTranslation]

    def to_payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "source_sentence": self.source_sentence,
            "idiom_meaning": self.idiom_meaning,
            "translations": [
                {"label": t.label, "text": t.text, "task_prompt": t.task_prompt}
                for t in self.translations
            ],
            "rubric": RUBRIC_CRITERIA,
            "rubric_tiers": list(RUBRIC_TIERS),
        }


def _focus_line(result: TranslationResult) -> str:
    template = (
        JUDGE_FOCUS_WITH_IDIOM if result.path == PATH_IDIOM_MATCH else JUDGE_FOCUS_NO_IDIOM
    )
    return template.format(
        source_language=LANGUAGE_NAMES[result.task.source_language],
        target_language=LANGUAGE_NAMES[result.task.target_language],
    )


def export_human_tasks(
    results_a: Sequence[TranslationResult],
    results_b: Sequence[TranslationResult],
    seed: int,
) -> tuple[list[HumanTask], dict]:
    """Pair two result sets by source sentence and anonymize them.

    Per pair, A/B order is decided by a generator seeded once for the whole
    export, so the same inputs and seed reproduce the same blinding. The
    returned blind map is the only place the producing models appear.
    """
    by_sentence_b = {}
    for result in results_b:
        by_sentence_b.setdefault(result.task.source_sentence, result)
    matched_sentences = set()
    pairs: list[tuple[TranslationResult, TranslationResult]] = []
    orphans_a: list[str] = []
    for result in results_a:
        partner = by_sentence_b.get(result.task.source_sentence)
        if partner is None:
            orphans_a.append(result.task.source_sentence)
            continue
        matched_sentences.add(result.task.source_sentence)
        pairs.append((result, partner))
    orphans_b = [s for s in by_sentence_b if s not in matched_sentences]
    if orphans_a or orphans_b:
        raise ValueError(
            f"unpairable results; first set orphans: {orphans_a[:5]!r}, "
            f"second set orphans: {orphans_b[:5]!r}"
        )
    for first, second in pairs:
        if first.translator_model == second.translator_model:
            raise ValueError(
                "paired results share translator model "
                f"{first.translator_model!r}; blinding requires two models"
            )

    rng = random.Random(seed)
    tasks: list[HumanTask] = []
    blind_map: dict[str, dict] = {}
    for i, (first, second) in enumerate(pairs, start=1):
        task_id = f"task_{i:04d}"
        ordered = [first, second]
        if rng.random() < 0.5:
            ordered.reverse()
        translations = tuple(
            LabeledTranslation(label=label, text=r.translation, task_prompt=_focus_line(r))
            for label, r in zip(LABELS, ordered)
        )
        tasks.append(
            HumanTask(
                task_id=task_id,
                source_sentence=first.task.source_sentence,
                idiom_meaning=first.task.idiom_meaning_en,
                translations=translations,  # type: ignore[arg-type]
            )
        )
        blind_map[task_id] = {
            label: {"result_ref": r.result_id, "translator_model": r.translator_model}
            for label, r in zip(LABELS, ordered)
        }
    return tasks, blind_map


def tasks_to_json(tasks: Sequence[HumanTask]) -> bytes:
    payload = [task.to_payload() for task in tasks]
    return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def load_task_payloads(path: str | Path) -> list[dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, list):
        raise ValueError("task file must contain a JSON array of task payloads")
    return payload


_IMPORT_HEADER = ["task_id", "label", "score", "annotator"]


def import_human_scores(
    data: bytes, blind_map: Mapping[str, Mapping[str, Mapping[str, str]]]
) -> tuple[list[ScoreRecord], list[tuple[int, str]]]:
    """Resolve an annotator CSV back to ScoreRecords through the blind map.

    Rows are `task_id,label,score,annotator` (a header row is skipped when
    present). Annotator names are replaced with anonymous ids in order of
    first appearance; bad rows land in the error list, good rows never
    depend on them.
    """
    text = data.decode("utf-8")
    records: list[ScoreRecord] = []
    errors: list[tuple[int, str]] = []
    anon_ids: dict[str, str] = {}

    reader = csv.reader(io.StringIO(text))
    for row_no, row in enumerate(reader, start=1):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        if row_no == 1 and [cell.strip().lower() for cell in row] == _IMPORT_HEADER:
            continue
        if len(row) != 4:
            errors.append((row_no, f"expected 4 columns, got {len(row)}"))
            continue
        task_id, label, raw_score, annotator = (cell.strip() for cell in row)
        entry = blind_map.get(task_id)
        if entry is None:
            errors.append((row_no, f"unknown task_id {task_id!r}"))
            continue
        if label not in entry:
            errors.append((row_no, f"task {task_id!r} has no label {label!r}"))
            continue
        try:
            score = int(raw_score)
        except ValueError:
            errors.append((row_no, f"score {raw_score!r} is not an integer"))
            continue
        if score not in (1, 2, 3):
            errors.append((row_no, f"score {score} outside 1..3"))
            continue
        if not annotator:
            errors.append((row_no, "annotator is empty"))
            continue
        if annotator not in anon_ids:
            anon_ids[annotator] = f"human:anon{len(anon_ids) + 1:02d}"
        records.append(
            ScoreRecord(
                result_ref=entry[label]["result_ref"],
                judge=anon_ids[annotator],
                score=score,
            )
        )
    return records, errors
