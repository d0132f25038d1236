"""Core domain types for standoff entity annotation.

Offsets count Unicode code points (not bytes), start inclusive, end
exclusive. All types are immutable values; everything here is pure.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union


class EntityType(Enum):
    PER = "PER"
    LOC = "LOC"
    WORK = "WORK"

    def __str__(self) -> str:
        return self.value


# Accepted spellings per canonical type, compared case-insensitively after
# trimming. Anything not listed maps to None and the caller decides.
_TYPE_ALIASES = {
    EntityType.PER: {"per", "person", "persona"},
    EntityType.LOC: {"loc", "location", "luogo", "place"},
    EntityType.WORK: {"work", "opera"},
}

_ALIAS_TO_TYPE = {
    alias: etype for etype, aliases in _TYPE_ALIASES.items() for alias in aliases
}

IDENTIFIER_RE = re.compile(r"^(Q[0-9]+|viaf[0-9]+)$")


def canonicalize_type(label: str) -> Optional[EntityType]:
    """Map a raw type label to one of the three entity types.

    Case-insensitive and whitespace-trimmed; returns None for labels
    outside the closed set (e.g. "DATE", "ORG").
    """
    return _ALIAS_TO_TYPE.get(label.strip().lower())


@dataclass(frozen=True)
class Document:
    """One note of the edition: a stable URI identifier plus plain text."""

    doc_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")


@dataclass(frozen=True)
class Annotation:
    """Gold standoff span with an external authority identifier."""

    doc_id: str
    surface: str
    start_pos: int
    end_pos: int
    identifier: str
    etype: EntityType


@dataclass(frozen=True)
class Prediction:
    """Predicted standoff span; same offset semantics as Annotation."""

    doc_id: str
    surface: str
    start_pos: int
    end_pos: int
    etype: EntityType


Span = Union[Annotation, Prediction]


@dataclass(frozen=True)
class Violation:
    """One violated invariant found by validate_annotation."""

    code: str
    message: str
    severity: str = "error"  # "error" | "warning"

    def __str__(self) -> str:
        return f"[{self.severity}] {self.code}: {self.message}"


def validate_annotation(doc: Document, ann: Span) -> list[Violation]:
    """Check a span against its document; returns every violated invariant.

    Violations are data, not exceptions: an empty list means ok. The
    identifier pattern check is a warning only, since scoring never uses
    identifiers and upstream editions may link elsewhere.
    """
    violations: list[Violation] = []
    if ann.doc_id != doc.doc_id:
        violations.append(
            Violation("doc-mismatch", f"annotation doc_id {ann.doc_id!r} != document {doc.doc_id!r}")
        )
    n = len(doc.text)
    if ann.start_pos >= ann.end_pos:
        code = "empty span" if ann.start_pos == ann.end_pos else "inverted span"
        violations.append(
            Violation(code, f"start_pos={ann.start_pos} end_pos={ann.end_pos}")
        )
    if ann.start_pos < 0 or ann.end_pos > n:
        violations.append(
            Violation("out of bounds", f"[{ann.start_pos}, {ann.end_pos}) outside text of length {n}")
        )
    elif ann.start_pos < ann.end_pos:
        actual = doc.text[ann.start_pos:ann.end_pos]
        if actual != ann.surface:
            violations.append(
                Violation(
                    "substring mismatch",
                    f"text[{ann.start_pos}:{ann.end_pos}] is {actual!r}, surface is {ann.surface!r}",
                )
            )
    identifier = getattr(ann, "identifier", None)
    if identifier is not None and not IDENTIFIER_RE.match(identifier):
        violations.append(
            Violation(
                "identifier pattern",
                f"{identifier!r} is neither a Wikidata QID nor a VIAF id",
                severity="warning",
            )
        )
    return violations


def spans_overlap(a: Span, b: Span) -> bool:
    """True if the two spans share at least one character position."""
    return a.start_pos < b.end_pos and b.start_pos < a.end_pos


class CorpusError(ValueError):
    """Raised when a corpus violates its construction invariants."""


@dataclass(frozen=True)
class Corpus:
    """Documents plus their gold annotations.

    Construction enforces: every annotation references a known document,
    satisfies the offset/substring invariants, and no two annotations of
    one document overlap. Identifier-pattern problems are tolerated here
    (warnings surface at import time).
    """

    documents: dict[str, Document] = field(default_factory=dict)
    annotations: tuple[Annotation, ...] = ()

    def __init__(self, documents: Iterable[Document] = (), annotations: Iterable[Annotation] = ()):
        doc_map: dict[str, Document] = {}
        for doc in documents:
            if doc.doc_id in doc_map:
                raise CorpusError(f"duplicate document id {doc.doc_id!r}")
            doc_map[doc.doc_id] = doc
        anns = tuple(annotations)
        for i, ann in enumerate(anns):
            doc = doc_map.get(ann.doc_id)
            if doc is None:
                raise CorpusError(f"annotation {i} references unknown document {ann.doc_id!r}")
            errors = [v for v in validate_annotation(doc, ann) if v.severity == "error"]
            if errors:
                raise CorpusError(f"annotation {i} ({ann.surface!r} in {ann.doc_id}): " + "; ".join(map(str, errors)))
        _check_disjoint(anns)
        object.__setattr__(self, "documents", doc_map)
        object.__setattr__(self, "annotations", anns)

    def annotations_for(self, doc_id: str) -> list[Annotation]:
        return [a for a in self.annotations if a.doc_id == doc_id]

    def __len__(self) -> int:
        return len(self.documents)


def _check_disjoint(annotations: tuple[Annotation, ...]) -> None:
    by_doc: dict[str, list[tuple[int, Annotation]]] = {}
    for idx, ann in enumerate(annotations):
        by_doc.setdefault(ann.doc_id, []).append((idx, ann))
    for doc_id, rows in by_doc.items():
        ordered = sorted(rows, key=lambda r: (r[1].start_pos, r[1].end_pos))
        for (i, prev), (j, cur) in zip(ordered, ordered[1:]):
            if spans_overlap(prev, cur):
                raise CorpusError(
                    f"overlapping gold annotations in {doc_id}: "
                    f"row {i} {prev.surface!r}[{prev.start_pos},{prev.end_pos}) and "
                    f"row {j} {cur.surface!r}[{cur.start_pos},{cur.end_pos})"
                )


def dedupe_predictions(preds: Iterable[Prediction]) -> list[Prediction]:
    """Drop exact duplicates (same doc, offsets and type), keeping first occurrences."""
    seen: set[tuple[str, int, int, EntityType]] = set()
    out: list[Prediction] = []
    for p in preds:
        key = (p.doc_id, p.start_pos, p.end_pos, p.etype)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out
