"""Prompt templates for alignment, translation, and judging.

Template bodies are fixed strings with {name} placeholders. Rendering is
exact substitution and nothing else, so rendered prompts are stable
byte-for-byte. Language names are substituted from kb.LANGUAGE_NAMES, e.g.
target_language="Chinese" for zh targets.

The two-step confirmation templates (sia_confirm_1/2, lia_generate/select)
deliberately keep their slightly uneven phrasing; they are load-bearing
strings and downstream golden tests pin them byte-for-byte. Note the U+2019
apostrophes in lia_generate and both judge templates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from ..errors import PromptError

RUBRIC_TIERS: tuple[str, str, str] = (
    "1 point: Ignores, mistranslates, or only translates the literal meaning of the idiom.",
    "2 points: Conveys basic figurative meaning but may lack refinement or have minor imperfections.",
    "3 points: Exceptional translation, accurately conveying figurative meaning, context, and cultural nuances.",
)

RUBRIC_CRITERIA = " ".join(RUBRIC_TIERS)

JUDGE_FOCUS_NO_IDIOM = (
    "Evaluate the idiom translation in the given {target_language} translation of an "
    "{source_language} sentence. Focus on the idiom’s figurative meaning."
)

JUDGE_FOCUS_WITH_IDIOM = (
    "Evaluate the idiom translation in the given {target_language} translation of an "
    "{source_language} sentence. Focus on the idiom’s counterpart in the translated language."
)

JUDGE_TEST_DATA = (
    "Evaluate the following translation: {source_language} sentence: {sentence} "
    "Idiom in the {source_language} sentence: {idiom} "
    "{target_language} translation: {translation} Evaluation (score only):"
)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str

    def placeholders(self) -> tuple[str, ...]:
        seen: list[str] = []
        for name in _PLACEHOLDER.findall(self.body):
            if name not in seen:
                seen.append(name)
        return tuple(seen)


_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")

TEMPLATES: Mapping[str, PromptTemplate] = {
    t.id: t
    for t in (
        PromptTemplate(
            id="sia_confirm_1",
            body=(
                "You are a linguistic researcher on idioms and are good at {target_language} "
                "and {source_language}. Choose the best {target_language} idiom that matches "
                "the following {source_language} idiom and its definition. {source_language} "
                "idiom: '{idiom}' {source_language} definition: '{meaning}' Here are some "
                "options: '{options}'"
            ),
        ),
        PromptTemplate(
            id="sia_confirm_2",
            body=(
                "{scored_options}. Please select the most relevant {target_language} idiom "
                "and provide a brief explanation."
            ),
        ),
        PromptTemplate(
            id="sia_translate",
            body=(
                "'{idiom}' means '{match}'. Given the above knowledge, translate this "
                "sentence to {target_language}: '{sentence}'."
            ),
        ),
        PromptTemplate(
            id="lia_generate",
            body=(
                "You are a linguistic researcher on idioms and good at {target_language} and "
                "{source_language}. You’ll be provided an {source_language} idiom and "
                "your task is to: 1. First provide the definition of the idiom: '{idiom}'. "
                "2. Then find the three most similar {target_language} idioms to the "
                "{source_language} idiom: '{idiom}', and make sure to maintain context and "
                "cultural nuances. Follow these instructions: 1. If you cannot find three "
                "similar {target_language} idioms, return as many as you can find. 2. If no "
                "{target_language} idiom has the same meaning, only define the "
                "{source_language} idiom. 3. For good matches, respond with the "
                "{target_language} idiom without pinyin and ensure it is an actual idiom, "
                "not a literal translation."
            ),
        ),
        PromptTemplate(
            id="lia_select",
            body=(
                "You are a linguistic researcher on idioms and good at {target_language} and "
                "{source_language}. Choose the best {target_language} idiom matching the "
                "{source_language} idiom and its definition. {source_language} idiom: "
                "'{idiom}' {source_language} definition: '{meaning}' Options: {options}. "
                "Select the most relevant {target_language} idiom and provide a brief "
                "explanation."
            ),
        ),
        PromptTemplate(
            id="lia_translate",
            body=(
                "You are a linguistic researcher on idioms and are good at {target_language} "
                "and {source_language}. '{idiom}' means '{match}'. Given the above "
                "knowledge, translate the following sentence to {target_language}: "
                "'{sentence}'."
            ),
        ),
        PromptTemplate(
            id="direct_translate",
            body="Translate the following sentence to {target_language}: '{sentence}'",
        ),
        PromptTemplate(
            id="judge_no_idiom",
            body=JUDGE_FOCUS_NO_IDIOM + "\n" + RUBRIC_CRITERIA + "\n" + JUDGE_TEST_DATA,
        ),
        PromptTemplate(
            id="judge_with_idiom",
            body=JUDGE_FOCUS_WITH_IDIOM + "\n" + RUBRIC_CRITERIA + "\n" + JUDGE_TEST_DATA,
        ),
    )
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise PromptError(f"unknown template id {template_id!r}", template_id=template_id) from None


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute every placeholder; extra bindings are ignored."""

    def substitute(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in bindings:
            raise PromptError(
                f"template {template.id!r} is missing a binding for {name!r}",
                template_id=template.id,
                placeholder=name,
            )
        return str(bindings[name])

    return _PLACEHOLDER.sub(substitute, template.body)


def format_scored_options(pairs: list[tuple[str, float]]) -> str:
    """Candidate list for sia_confirm_2: `'idiom' (0.78), 'idiom' (0.72)`."""
    return ", ".join(f"'{idiom}' ({score:.2f})" for idiom, score in pairs)


def format_numbered_options(target_language: str, idioms: list[str]) -> str:
    """Candidate list for lia_select: `Chinese idiom 1: 'x' Chinese idiom 2: 'y'`."""
    return " ".join(
        f"{target_language} idiom {i}: '{idiom}'" for i, idiom in enumerate(idioms, start=1)
    )
