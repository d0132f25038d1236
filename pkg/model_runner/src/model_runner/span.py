"""Zero-shot span-classifier inference producing the predictions CSV.

The GliNER backend is optional (install the `gliner` extra and have the
weights available); the gazetteer backend is a deterministic offline
stand-in that marks known surfaces, used for testing the wire surface.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .corpus import Note, canonical_type, write_predictions

logger = logging.getLogger(__name__)


class ModelLoadError(RuntimeError):
    pass


class SpanBackend(Protocol):
    def predict(self, text: str, labels: Sequence[str]) -> list[tuple[str, int, int, str]]:
        """Return (surface, start, end, label) spans for one text."""
        ...


@dataclass
class GlinerBackend:
    model_name: str = "DeepMount00/GLiNER_ITA_BASE"
    threshold: float = 0.5

    def __post_init__(self) -> None:
        try:
            from gliner import GLiNER
        except ImportError as exc:
            raise ModelLoadError(
                "the gliner package is not installed; install the 'gliner' extra to use this backend"
            ) from exc
        try:
            self._model = GLiNER.from_pretrained(self.model_name)
        except Exception as exc:
            raise ModelLoadError(f"cannot load span model {self.model_name!r}: {exc}") from exc

    def predict(self, text: str, labels: Sequence[str]) -> list[tuple[str, int, int, str]]:
        entities = self._model.predict_entities(text, list(labels), threshold=self.threshold)
        return [(e["text"], e["start"], e["end"], e["label"]) for e in entities]


@dataclass
class GazetteerBackend:
    """Marks every non-overlapping occurrence of known surfaces.

    entries maps surface form -> label; longer surfaces take precedence
    so "Degli Scritt. del Trecento" beats "Trecento".
    """

    entries: dict[str, str]

    def predict(self, text: str, labels: Sequence[str]) -> list[tuple[str, int, int, str]]:
        wanted = {label.strip().lower() for label in labels}
        taken = [False] * len(text)
        spans = []
        for surface in sorted(self.entries, key=len, reverse=True):
            label = self.entries[surface]
            if label.strip().lower() not in wanted:
                continue
            start = text.find(surface)
            while start != -1:
                end = start + len(surface)
                if not any(taken[start:end]):
                    for i in range(start, end):
                        taken[i] = True
                    spans.append((surface, start, end, label))
                start = text.find(surface, start + 1)
        spans.sort(key=lambda s: (s[1], s[2]))
        return spans


def run_span_model(
    notes: Iterable[Note],
    labels: Sequence[str],
    backend: SpanBackend,
    out_path: Path | str,
) -> int:
    """Predict spans for every note and write the predictions CSV.

    Requested labels must canonicalize to PER/LOC/WORK; anything else is
    an error before any inference runs.
    """
    unknown = [l for l in labels if canonical_type(l) is None]
    if unknown:
        raise ValueError(f"unknown entity labels requested: {unknown}")
    rows = []
    for note in sorted(notes, key=lambda n: n.doc_id):
        for surface, start, end, label in backend.predict(note.text, labels):
            etype = canonical_type(label)
            if etype is None:
                logger.warning("%s: dropping span with unknown label %r", note.doc_id, label)
                continue
            rows.append((note.doc_id, surface, start, end, etype))
    seen = set()
    deduped = []
    for row in sorted(rows, key=lambda r: (r[0], r[2], r[3], r[4])):
        key = (row[0], row[2], row[3], row[4])
        if key not in seen:
            seen.add(key)
            deduped.append(row)
    write_predictions(deduped, out_path)
    return len(deduped)
