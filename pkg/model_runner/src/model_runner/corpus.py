"""Readers and writers for the toolkit's wire formats.

This package talks to the corpus toolkit only through its documented
files (documents.csv / annotations.csv, raw-answers JSONL, predictions
CSV), so the formats are implemented here independently.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

DOCUMENTS_HEADER = ["doc_id", "text"]
ANNOTATIONS_HEADER = ["doc_id", "surface", "start_pos", "end_pos", "identifier", "type"]
PREDICTIONS_HEADER = ["doc_id", "surface", "start_pos", "end_pos", "type"]

# Canonical entity types and the label spellings accepted for them.
LABEL_ALIASES = {
    "PER": {"per", "person", "persona"},
    "LOC": {"loc", "location", "luogo", "place"},
    "WORK": {"work", "opera"},
}
ITALIAN_LABELS = {"PER": "persona", "LOC": "luogo", "WORK": "opera"}


def canonical_type(label: str) -> Optional[str]:
    wanted = label.strip().lower()
    for canonical, aliases in LABEL_ALIASES.items():
        if wanted in aliases:
            return canonical
    return None


class WireFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Note:
    doc_id: str
    text: str


@dataclass(frozen=True)
class GoldSpan:
    doc_id: str
    surface: str
    start_pos: int
    end_pos: int
    identifier: str
    type: str


def _read_csv(path: Path | str, header: list[str]):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        got = next(reader, None)
        if got != header:
            raise WireFormatError(f"{path}: expected header {header}, got {got}")
        yield from reader


def read_documents(path: Path | str) -> list[Note]:
    path = Path(path)
    if path.is_dir():
        path = path / "documents.csv"
    notes = []
    for row in _read_csv(path, DOCUMENTS_HEADER):
        if len(row) != 2:
            raise WireFormatError(f"{path}: malformed row {row!r}")
        notes.append(Note(doc_id=row[0], text=row[1]))
    return notes


def read_annotations(path: Path | str) -> list[GoldSpan]:
    path = Path(path)
    if path.is_dir():
        path = path / "annotations.csv"
    spans = []
    for row in _read_csv(path, ANNOTATIONS_HEADER):
        if len(row) != 6:
            raise WireFormatError(f"{path}: malformed row {row!r}")
        spans.append(
            GoldSpan(
                doc_id=row[0],
                surface=row[1],
                start_pos=int(row[2]),
                end_pos=int(row[3]),
                identifier=row[4],
                type=row[5],
            )
        )
    return spans


def write_raw_answers(records: Iterable[dict], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_predictions(rows: Iterable[tuple[str, str, int, int, str]], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PREDICTIONS_HEADER)
        for row in rows:
            writer.writerow(row)
