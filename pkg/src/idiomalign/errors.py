"""Exception types shared across the package."""

from __future__ import annotations


class IdiomAlignError(Exception):
    """Base class for all package-specific errors."""


class ParseError(IdiomAlignError):
    """A whole input file was rejected (undecodable or mostly malformed)."""


class PromptError(IdiomAlignError):
    """A prompt template could not be rendered."""

    def __init__(self, message: str, *, template_id: str = "", placeholder: str = "") -> None:
        super().__init__(message)
        self.template_id = template_id
        self.placeholder = placeholder


class LlmError(IdiomAlignError):
    """An LLM client failed to produce a response."""


class TransportError(LlmError):
    """A remote call failed after retries.

    attempts counts every request made, including the first one.
    """

    def __init__(self, message: str, *, attempts: int) -> None:
        super().__init__(message)
        self.attempts = attempts


class ScriptError(LlmError):
    """A scripted client received a prompt it has no response for."""


class PipelineError(IdiomAlignError):
    """A translation run failed; carries the prompt/response trace so far."""

    def __init__(self, message: str, *, trace: list[tuple[str, str, str]] | None = None) -> None:
        super().__init__(message)
        self.trace = list(trace or [])


class JudgeParseError(IdiomAlignError):
    """No rubric score could be parsed from a judge response, even after a re-ask."""

    def __init__(self, message: str, *, responses: list[str] | None = None) -> None:
        super().__init__(message)
        self.responses = list(responses or [])
