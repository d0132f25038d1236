"""Batch chat-model inference producing the raw-answers JSONL.

Backends implement preflight() (fail the whole batch before any call if
the endpoint is unusable) and complete(doc_id, prompt). Per-document
failures after a successful preflight are recorded in the output record's
"error" field and never abort the batch; the downstream parser turns an
empty answer into zero entities.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import requests

from .corpus import Note, write_raw_answers
from .prompts import PromptTemplate, build_prompt

logger = logging.getLogger(__name__)


class BackendError(RuntimeError):
    pass


class ChatBackend(Protocol):
    def preflight(self) -> None: ...

    def complete(self, doc_id: str, prompt: str) -> str: ...


@dataclass
class HttpChatBackend:
    """OpenAI-style chat-completions endpoint over HTTP."""

    endpoint: str
    model: str
    api_key_env: str = "MODEL_RUNNER_API_KEY"
    timeout: float = 120.0

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def preflight(self) -> None:
        try:
            requests.get(self.endpoint, headers=self._headers(), timeout=10)
        except requests.RequestException as exc:
            raise BackendError(f"chat endpoint unreachable: {self.endpoint}: {exc}") from exc

    def complete(self, doc_id: str, prompt: str) -> str:
        resp = requests.post(
            self.endpoint,
            headers=self._headers(),
            json={
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": 0,
            },
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


@dataclass
class FixtureChatBackend:
    """Canned answers keyed by doc_id (JSONL of {"doc_id", "answer"}).

    Lets the whole pipeline run offline: tests, dry runs, replaying a
    previous model session.
    """

    path: Path

    def __post_init__(self) -> None:
        self.path = Path(self.path)
        self._answers: dict[str, str] | None = None

    def preflight(self) -> None:
        if not self.path.is_file():
            raise BackendError(f"fixture answers file not found: {self.path}")
        answers = {}
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    record = json.loads(line)
                    answers[record["doc_id"]] = record.get("answer", "")
        self._answers = answers

    def complete(self, doc_id: str, prompt: str) -> str:
        if self._answers is None:
            self.preflight()
        if doc_id not in self._answers:
            raise KeyError(f"no canned answer for {doc_id}")
        return self._answers[doc_id]


def run_chat_model(
    notes: Iterable[Note],
    template: PromptTemplate,
    backend: ChatBackend,
    out_path: Path | str,
) -> list[dict]:
    """One JSONL record per document, canonically ordered by doc_id."""
    notes = sorted(notes, key=lambda n: n.doc_id)
    backend.preflight()
    records = []
    for note in notes:
        record = {"doc_id": note.doc_id, "answer": "", "mode": template.mode}
        try:
            record["answer"] = backend.complete(note.doc_id, build_prompt(template, note))
        except Exception as exc:
            logger.warning("chat failed for %s: %s", note.doc_id, exc)
            record["error"] = str(exc)
        records.append(record)
    write_raw_answers(records, out_path)
    return records
