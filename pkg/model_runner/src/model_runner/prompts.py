"""Prompt templates for the two answer conventions.

The bundled Italian instructions are illustrative defaults, not a
canonical wording: supply your own template file to reproduce a specific
experimental setup. A template is plain text with a {text} placeholder;
whatever it asks for must parse with the toolkit's tag grammar
(<TYPE>surface</TYPE> pairs).
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Note

MODES = ("generative", "extractive")

ANSWER_PATTERNS = {
    "generative": "left context <type>surface form</type> right context",
    "extractive": "<type 1>surface form 1</type 1>, <type 2>surface form 2</type 2>",
}

PLACEHOLDER = "{text}"


@dataclass(frozen=True)
class PromptTemplate:
    mode: str
    instruction_text: str
    answer_pattern: str

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if PLACEHOLDER not in self.instruction_text:
            raise ValueError(f"template is missing the {PLACEHOLDER} placeholder")


def bundled_template(mode: str) -> PromptTemplate:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    text = resources.files("model_runner").joinpath(f"templates/{mode}.txt").read_text("utf-8")
    return PromptTemplate(mode=mode, instruction_text=text, answer_pattern=ANSWER_PATTERNS[mode])


def load_template(path: Path | str, mode: str) -> PromptTemplate:
    text = Path(path).read_text(encoding="utf-8")
    return PromptTemplate(mode=mode, instruction_text=text, answer_pattern=ANSWER_PATTERNS[mode])


def build_prompt(template: PromptTemplate, note: Note) -> str:
    """Instruction plus passage; deterministic, no templating engine."""
    if not note.text:
        raise ValueError(f"document {note.doc_id} has empty text")
    return template.instruction_text.replace(PLACEHOLDER, note.text)
