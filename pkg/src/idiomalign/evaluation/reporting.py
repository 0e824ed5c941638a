"""Markdown report generation over score records and translation results.

One report collects: flat average-score tables per direction and method,
the SIA matched/fallback split, the LIA idiom:no-idiom ratio table with a
count-weighted total, raw SIA match statistics, and judge-human agreement
when both kinds of scores are present. Means are displayed at 3 decimals;
aggregation keeps full precision.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from ..pipeline.run import (
    METHOD_LIA,
    METHOD_SIA,
    PATH_IDIOM_MATCH,
    PATH_LLM_NO_CANDIDATE,
    PATH_MEANING_FALLBACK,
    TranslationResult,
)
from ..retrieval import match_statistics
from .scoring import ScoreRecord, aggregate_scores, match_agreement

HUMAN_JUDGE_GROUP = "human"


def _judge_group(judge: str) -> str:
    return HUMAN_JUDGE_GROUP if judge.startswith("human:") else judge


def _fmt(mean: float | None) -> str:
    return f"{mean:.3f}" if mean is not None else "-"


def _md_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(headers) + " |",
        "| " + " | ".join("---" for _ in headers) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def _collapse_judges(records: Sequence[ScoreRecord]) -> list[ScoreRecord]:
    collapsed = []
    for record in records:
        group = _judge_group(record.judge)
        if group == record.judge:
            collapsed.append(record)
        else:
            collapsed.append(
                ScoreRecord(
                    result_ref=record.result_ref,
                    judge=group,
                    score=record.score,
                    raw_response=record.raw_response,
                    timestamp=record.timestamp,
                )
            )
    return collapsed


def markdown_report(
    records: Sequence[ScoreRecord], results: Sequence[TranslationResult]
) -> str:
    """Assemble the full Markdown report.

    Human judges (judge "human:<anon>") are collapsed into one "human"
    evaluation column; agreement is computed per model judge against the
    pooled human scores.
    """
    collapsed = _collapse_judges(records)
    sections: list[str] = ["# Translation evaluation report", ""]
    judges = sorted({r.judge for r in collapsed})
    sections.append(
        f"{len(results)} translation results, {len(records)} scores, "
        f"judges: {', '.join(judges) if judges else 'none'}."
    )
    sections.append("")

    flat = aggregate_scores(
        collapsed, results, group_by=("direction", "method", "translator_model", "judge")
    )
    by_path = aggregate_scores(
        collapsed,
        results,
        group_by=("direction", "method", "translator_model", "judge", "path"),
    )

    sections.append("## Average scores")
    sections.append("")
    tables = sorted({(g.key["direction"], g.key["method"]) for g in flat.groups})
    for direction, method in tables:
        rows = [
            [g.key["translator_model"], g.key["judge"], _fmt(g.mean)]
            for g in flat.groups
            if g.key["direction"] == direction and g.key["method"] == method
        ]
        sections.append(f"### {direction} / {method}")
        sections.append("")
        sections.append(
            _md_table(["Translation Model", "Evaluation Model", "Average Score"], rows)
        )
        sections.append("")

    path_means: dict[tuple[str, str, str, str], dict[str, tuple[float, int]]] = {}
    for g in by_path.groups:
        key = (
            g.key["direction"],
            g.key["method"],
            g.key["translator_model"],
            g.key["judge"],
        )
        path_means.setdefault(key, {})[g.key["path"]] = (g.mean, g.count)

    sia_keys = sorted(k for k in path_means if k[1] == METHOD_SIA)
    if sia_keys:
        sections.append("## Alignment split (sia)")
        sections.append("")
        rows = []
        for direction, _, translator, judge in sia_keys:
            paths = path_means[(direction, METHOD_SIA, translator, judge)]
            matched = paths.get(PATH_IDIOM_MATCH)
            fallback = paths.get(PATH_MEANING_FALLBACK)
            rows.append(
                [
                    direction,
                    translator,
                    judge,
                    _fmt(matched[0] if matched else None),
                    _fmt(fallback[0] if fallback else None),
                ]
            )
        sections.append(
            _md_table(
                [
                    "Direction",
                    "Translation Model",
                    "Evaluation Model",
                    "Idiom-match avg",
                    "Meaning-fallback avg",
                ],
                rows,
            )
        )
        sections.append("")

    lia_keys = sorted(k for k in path_means if k[1] == METHOD_LIA)
    if lia_keys:
        sections.append("## Generation split (lia)")
        sections.append("")
        rows = []
        for direction, _, translator, judge in lia_keys:
            paths = path_means[(direction, METHOD_LIA, translator, judge)]
            idiom = paths.get(PATH_IDIOM_MATCH)
            no_idiom = paths.get(PATH_LLM_NO_CANDIDATE)
            idiom_count = idiom[1] if idiom else 0
            no_idiom_count = no_idiom[1] if no_idiom else 0
            total = weighted_total_mean(
                idiom[0] if idiom else None,
                idiom_count,
                no_idiom[0] if no_idiom else None,
                no_idiom_count,
            )
            rows.append(
                [
                    direction,
                    translator,
                    judge,
                    f"{idiom_count}:{no_idiom_count}",
                    _fmt(no_idiom[0] if no_idiom else None),
                    _fmt(idiom[0] if idiom else None),
                    _fmt(total),
                ]
            )
        sections.append(
            _md_table(
                [
                    "Direction",
                    "Translation Model",
                    "Evaluation Model",
                    "Idiom:No-idiom ratio",
                    "No-idiom avg",
                    "Idiom avg",
                    "Total avg",
                ],
                rows,
            )
        )
        sections.append("")

    sia_results = [r for r in results if r.method == METHOD_SIA]
    if sia_results:
        sections.append("## Match statistics (sia)")
        sections.append("")
        groups: dict[tuple[str, str], list[TranslationResult]] = {}
        for result in sia_results:
            key = (
                f"{result.task.source_language}-{result.task.target_language}",
                result.translator_model,
            )
            groups.setdefault(key, []).append(result)
        rows = []
        for (direction, translator), group in sorted(groups.items()):
            stats = match_statistics(group)
            rows.append(
                [
                    direction,
                    translator,
                    str(stats["matched"]),
                    str(stats["unmatched"]),
                    str(len(group)),
                ]
            )
        sections.append(
            _md_table(
                ["Direction", "Translation Model", "Matched", "Unmatched", "Total"], rows
            )
        )
        sections.append("")

    human_records = [r for r in records if r.judge.startswith("human:")]
    model_records: dict[str, list[ScoreRecord]] = {}
    for record in records:
        if not record.judge.startswith("human:"):
            model_records.setdefault(record.judge, []).append(record)
    if human_records and model_records:
        sections.append("## Judge-human agreement")
        sections.append("")
        rows = []
        for judge in sorted(model_records):
            try:
                stats = match_agreement(model_records[judge], human_records)
            except ValueError:
                rows.append([judge, "0", "-"])
                continue
            rows.append([judge, str(stats.compared), _fmt(stats.rate)])
        sections.append(_md_table(["Judge", "Compared", "Exact-match rate"], rows))
        sections.append("")

    return "\n".join(sections).rstrip() + "\n"


def weighted_total_mean(
    mean_a: float | None, count_a: int, mean_b: float | None, count_b: int
) -> float | None:
    """Count-weighted combination of two per-path means.

    Defined so that a reported total is exactly the ratio-weighted
    combination of the per-path averages shown next to it.
    """
    total = count_a + count_b
    if total == 0:
        return None
    acc = 0.0
    if mean_a is not None:
        acc += mean_a * count_a
    if mean_b is not None:
        acc += mean_b * count_b
    return acc / total
