"""Translation scoring: LLM judges, human annotation workflow, aggregation."""

from __future__ import annotations

from .scoring import (
    AgreementStats,
    AggregateReport,
    GroupStat,
    ScoreRecord,
    aggregate_scores,
    build_judge_prompt,
    exact_match_rate,
    judge_batch,
    judge_translation,
    load_score_records,
    match_agreement,
    parse_rubric_score,
    score_records_to_jsonl,
)
from .human import (
    HumanTask,
    LabeledTranslation,
    export_human_tasks,
    import_human_scores,
    load_task_payloads,
    tasks_to_json,
)
from .reporting import markdown_report, weighted_total_mean

__all__ = [
    "AgreementStats",
    "AggregateReport",
    "GroupStat",
    "ScoreRecord",
    "aggregate_scores",
    "build_judge_prompt",
    "exact_match_rate",
    "judge_batch",
    "judge_translation",
    "load_score_records",
    "match_agreement",
    "parse_rubric_score",
    "score_records_to_jsonl",
    "HumanTask",
    "LabeledTranslation",
    "export_human_tasks",
    "import_human_scores",
    "load_task_payloads",
    "tasks_to_json",
    "markdown_report",
    "weighted_total_mean",
]
