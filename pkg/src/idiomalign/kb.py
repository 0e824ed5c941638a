"""Meaning-keyed idiom knowledge base.

Datasets arrive either as the legacy 4-column CSV layout (id, idiom,
meaning_en, meaning_native) or as the canonical JSONL layout with one
record per line. Both are normalized into IdiomEntry records and indexed
two ways: by normalized English meaning (the alignment key) and by
(language, idiom surface).
"""

from __future__ import annotations

import csv
import io
import json
import string
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ParseError

# Language codes the toolkit is configured for, with the English names used
# inside prompts.
LANGUAGE_NAMES: Mapping[str, str] = {
    "en": "English",
    "zh": "Chinese",
    "ur": "Urdu",
    "hi": "Hindi",
}

PROVENANCE_ORIGINAL = "original"
PROVENANCE_LLM = "llm_generated"
_PROVENANCE_TAGS = frozenset({PROVENANCE_ORIGINAL, PROVENANCE_LLM})

_WHITESPACE = " \t\n\r\v\f"


@dataclass(frozen=True)
class IdiomEntry:
    """One idiom in one language, keyed by its English meaning."""

    id: str
    language: str
    idiom: str
    meaning_en: str
    meaning_native: Optional[str] = None
    sentences: tuple[str, ...] = ()
    sentence_provenance: tuple[str, ...] = ()

    def validation_errors(self) -> list[str]:
        errors: list[str] = []
        if not self.idiom.strip():
            errors.append("idiom is empty")
        if not self.meaning_en.strip():
            errors.append("meaning_en is empty")
        if self.language not in LANGUAGE_NAMES:
            errors.append(f"unknown language code {self.language!r}")
        if len(self.sentences) != len(self.sentence_provenance):
            errors.append("sentence_provenance length differs from sentences")
        for tag in self.sentence_provenance:
            if tag not in _PROVENANCE_TAGS:
                errors.append(f"unknown provenance tag {tag!r}")
        return errors

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "idiom": self.idiom,
            "meaning_en": self.meaning_en,
            "meaning_native": self.meaning_native,
            "sentences": list(self.sentences),
            "sentence_provenance": list(self.sentence_provenance),
        }


@dataclass(frozen=True)
class ParseReport:
    """Per-row outcomes of one parse_idiom_records call."""

    total_rows: int = 0
    row_errors: tuple[tuple[int, str], ...] = ()

    @property
    def valid_rows(self) -> int:
        return self.total_rows - len(self.row_errors)


def normalize_meaning_key(text: str) -> str:
    """Normalize an English meaning into its lookup key.

    Lowercase, whitespace runs collapsed to single spaces, and leading or
    trailing whitespace and ASCII punctuation removed. Idempotent.
    """
    collapsed = " ".join(text.lower().split())
    return collapsed.strip(string.punctuation + _WHITESPACE)


def _entry_from_json_line(line: str, line_no: int, default_language: str) -> IdiomEntry:
    record = json.loads(line)
    if not isinstance(record, dict):
        raise ValueError("line is not a JSON object")
    idiom = record.get("idiom")
    meaning_en = record.get("meaning_en")
    if not isinstance(idiom, str) or not isinstance(meaning_en, str):
        raise ValueError("idiom and meaning_en must be strings")
    sentences = record.get("sentences") or []
    provenance = record.get("sentence_provenance") or []
    if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
        raise ValueError("sentences must be a list of strings")
    if not isinstance(provenance, list) or not all(isinstance(p, str) for p in provenance):
        raise ValueError("sentence_provenance must be a list of strings")
    # Records without provenance tags are assumed to carry original sentences.
    if not provenance:
        provenance = [PROVENANCE_ORIGINAL] * len(sentences)
    entry_id = record.get("id")
    if entry_id is None:
        entry_id = str(line_no)
    language = record.get("language") or default_language
    meaning_native = record.get("meaning_native")
    if meaning_native is not None and not isinstance(meaning_native, str):
        raise ValueError("meaning_native must be a string or null")
    entry = IdiomEntry(
        id=str(entry_id),
        language=str(language),
        idiom=idiom,
        meaning_en=meaning_en,
        meaning_native=meaning_native,
        sentences=tuple(sentences),
        sentence_provenance=tuple(provenance),
    )
    errors = entry.validation_errors()
    if errors:
        raise ValueError("; ".join(errors))
    return entry


def _entry_from_csv_row(row: Sequence[str], line_no: int, language: str) -> IdiomEntry:
    # Legacy layout: id, idiom, meaning_en, meaning_native. The native
    # meaning column may be absent or empty.
    if len(row) not in (3, 4):
        raise ValueError(f"expected 3 or 4 columns, got {len(row)}")
    entry_id, idiom, meaning_en = row[0], row[1], row[2]
    meaning_native = row[3] if len(row) == 4 and row[3] != "" else None
    entry = IdiomEntry(
        id=entry_id.strip() or str(line_no),
        language=language,
        idiom=idiom,
        meaning_en=meaning_en,
        meaning_native=meaning_native,
    )
    errors = entry.validation_errors()
    if errors:
        raise ValueError("; ".join(errors))
    return entry


def parse_idiom_records(
    data: bytes,
    format: str,
    language: str,
    *,
    header: bool = False,
) -> tuple[list[IdiomEntry], ParseReport]:
    """Parse one dataset file into entries plus a per-row error report.

    `language` applies to every CSV row and to JSONL records that do not
    carry their own language field. Files where more than half the rows are
    malformed are rejected outright.
    """
    if format not in ("idiomkb_csv", "idiom_jsonl"):
        raise ValueError(f"unknown format {format!r}")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc

    entries: list[IdiomEntry] = []
    errors: list[tuple[int, str]] = []
    total = 0

    if format == "idiom_jsonl":
        # Split on \n only: json.dumps never emits a raw \n inside a string,
        # but it does leave U+0085/U+2028-style line breaks unescaped, and
        # splitlines() would cut records apart on those.
        for line_no, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            total += 1
            try:
                entries.append(_entry_from_json_line(line, line_no, language))
            except (ValueError, json.JSONDecodeError) as exc:
                errors.append((line_no, str(exc)))
    else:
        reader = csv.reader(io.StringIO(text))
        for line_no, row in enumerate(reader, start=1):
            if header and line_no == 1:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            total += 1
            try:
                entries.append(_entry_from_csv_row(row, line_no, language))
            except ValueError as exc:
                errors.append((line_no, str(exc)))

    if total > 0 and len(errors) * 2 > total:
        raise ParseError(
            f"rejected: {len(errors)} of {total} rows malformed "
            f"(first: line {errors[0][0]}: {errors[0][1]})"
        )
    return entries, ParseReport(total_rows=total, row_errors=tuple(errors))


def entries_to_jsonl(entries: Iterable[IdiomEntry]) -> bytes:
    """Serialize entries to the canonical JSONL layout."""
    lines = [json.dumps(e.to_record(), ensure_ascii=False) for e in entries]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def load_entries_jsonl(path: str | Path) -> list[IdiomEntry]:
    """Load a canonical JSONL file; any malformed row is an error here."""
    data = Path(path).read_bytes()
    entries, report = parse_idiom_records(data, "idiom_jsonl", "en")
    if report.row_errors:
        line_no, message = report.row_errors[0]
        raise ParseError(
            f"{path}: {len(report.row_errors)} bad rows (first: line {line_no}: {message})"
        )
    return entries


@dataclass(frozen=True)
class KnowledgeBase:
    """Deduplicated idiom store. Treat as immutable after construction."""

    entries: tuple[IdiomEntry, ...]
    by_meaning_key: Mapping[str, tuple[IdiomEntry, ...]]
    by_surface: Mapping[tuple[str, str], IdiomEntry]
    dedup_report: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.entries)


def build_knowledge_base(entries: Sequence[IdiomEntry]) -> KnowledgeBase:
    """Collapse duplicates and build both lookup indexes.

    Duplicates are exact matches on (language, trimmed idiom); the first
    occurrence wins and example sentences are merged without repeats.
    Entries violating the IdiomEntry invariants are dropped and counted
    under "invalid".
    """
    kept: dict[tuple[str, str], IdiomEntry] = {}
    order: list[tuple[str, str]] = []
    dedup: dict[str, int] = {}

    for entry in entries:
        if entry.validation_errors():
            dedup["invalid"] = dedup.get("invalid", 0) + 1
            continue
        surface = (entry.language, entry.idiom.strip())
        if surface in kept:
            first = kept[surface]
            merged_sentences = list(first.sentences)
            merged_provenance = list(first.sentence_provenance)
            for sentence, tag in zip(entry.sentences, entry.sentence_provenance):
                if sentence not in merged_sentences:
                    merged_sentences.append(sentence)
                    merged_provenance.append(tag)
            kept[surface] = replace(
                first,
                sentences=tuple(merged_sentences),
                sentence_provenance=tuple(merged_provenance),
            )
            dedup[entry.language] = dedup.get(entry.language, 0) + 1
            continue
        kept[surface] = entry
        order.append(surface)

    final = tuple(kept[s] for s in order)
    by_meaning: dict[str, list[IdiomEntry]] = {}
    for entry in final:
        by_meaning.setdefault(normalize_meaning_key(entry.meaning_en), []).append(entry)
    return KnowledgeBase(
        entries=final,
        by_meaning_key={k: tuple(v) for k, v in by_meaning.items()},
        by_surface=dict(kept),
        dedup_report=dedup,
    )


def lookup_meaning(kb: KnowledgeBase, language: str, idiom: str) -> Optional[str]:
    """English meaning of the (language, idiom) entry, or None."""
    entry = kb.by_surface.get((language, idiom.strip()))
    return entry.meaning_en if entry is not None else None
