"""LLM clients: a scripted deterministic mock and an HTTP chat client.

The scripted client is the backbone of every offline test. It answers only
prompts whose (template id, binding digest) key appears in its script and
raises on anything else, so a drifting prompt can never silently pass.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import requests

from ..errors import ScriptError, TransportError


class LlmClient(Protocol):
    model_name: str

    def complete(
        self,
        prompt: str,
        temperature: float,
        *,
        template_id: str = "",
        bindings: Mapping[str, str] | None = None,
    ) -> str: ...


def binding_digest(bindings: Mapping[str, str]) -> str:
    """Stable digest of a binding map, independent of insertion order."""
    canonical = json.dumps(dict(bindings), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def script_key(template_id: str, bindings: Mapping[str, str]) -> str:
    return f"{template_id}:{binding_digest(bindings)}"


class ScriptedLlmClient:
    """Deterministic mock keyed by (template id, binding digest)."""

    def __init__(self, script: Mapping[str, str], model_name: str = "scripted-mock") -> None:
        self._script = dict(script)
        self.model_name = model_name
        self._lock = threading.Lock()
        self._calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path, model_name: str = "scripted-mock") -> "ScriptedLlmClient":
        script = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(script, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in script.items()
        ):
            raise ValueError(f"script file {path} must be a JSON object of string → string")
        return cls(script, model_name=model_name)

    @classmethod
    def from_exchanges(
        cls,
        exchanges: Iterable[tuple[str, Mapping[str, str], str]],
        model_name: str = "scripted-mock",
    ) -> "ScriptedLlmClient":
        script = {script_key(tid, bindings): response for tid, bindings, response in exchanges}
        return cls(script, model_name=model_name)

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self._calls)

    @property
    def calls(self) -> list[str]:
        with self._lock:
            return list(self._calls)

    def complete(
        self,
        prompt: str,
        temperature: float,
        *,
        template_id: str = "",
        bindings: Mapping[str, str] | None = None,
    ) -> str:
        key = script_key(template_id, bindings or {})
        with self._lock:
            self._calls.append(key)
        if key not in self._script:
            raise ScriptError(
                f"no scripted response for key {key!r} "
                f"(template {template_id!r}, prompt starts {prompt[:80]!r})"
            )
        return self._script[key]


class HttpLlmClient:
    """Chat-completion-style HTTP client.

    Request body is {"model", "messages", "temperature"}; the response text
    is taken from the first choice. Works against any endpoint speaking
    that shape; the base URL and model name are configuration.
    """

    def __init__(
        self,
        base_url: str,
        model_name: str,
        *,
        api_key_env: str = "IDIOMALIGN_LLM_API_KEY",
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
    ) -> None:
        self.base_url = base_url
        self.model_name = model_name
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(
        self,
        prompt: str,
        temperature: float,
        *,
        template_id: str = "",
        bindings: Mapping[str, str] | None = None,
    ) -> str:
        payload = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.max_retries:
            attempts += 1
            try:
                response = requests.post(
                    self.base_url, json=payload, headers=self._headers(), timeout=self.timeout
                )
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]
                text = choice["message"]["content"]
                if not isinstance(text, str):
                    raise ValueError("response content is not a string")
                return text
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempts > self.max_retries:
                    break
                time.sleep(self.backoff_base * (2 ** (attempts - 1)))
        raise TransportError(
            f"LLM request failed after {attempts} attempts: {last_error}", attempts=attempts
        )
