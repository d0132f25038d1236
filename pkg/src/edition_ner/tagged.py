"""Codec between plain documents and angle-bracket-tagged model answers.

Two answer shapes share one tag grammar: inline-annotated rewrites
("left context <PER>Gelli</PER> right context") and ordered entity lists
("<PER>Gelli</PER>, <WORK>...</WORK>"). Parsing is lenient by design --
model output is untrusted -- so malformed tags are skipped with a logged
warning and unknown type labels are filtered in a separate step.

Alignment maps parsed surfaces back to character offsets with a
left-to-right consuming cursor and a single restart from position zero
for out-of-order answers. Matches are exact on the raw string.
"""
from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .model import (
    Annotation,
    Document,
    EntityType,
    Prediction,
    canonicalize_type,
    spans_overlap,
)

logger = logging.getLogger(__name__)

# Any identifier-like label, spaces allowed ("type 1"); legality of the
# label is decided later by filter_known_types.
_LABEL = r"[A-Za-z_][A-Za-z0-9_ ]*"
TAG_RE = re.compile(rf"<({_LABEL})>(.*?)</\1>", re.DOTALL)
_ANY_TAG_RE = re.compile(rf"</?{_LABEL}>")


@dataclass(frozen=True)
class TaggedEntity:
    """One (type, surface) pair parsed from a model answer."""

    type_label: str
    surface: str
    rank: int


@dataclass(frozen=True)
class AlignmentOutcome:
    aligned: tuple[Prediction, ...]
    unaligned: tuple[TaggedEntity, ...]
    dropped: tuple[TaggedEntity, ...]


def _scan_tags(answer: str) -> list[TaggedEntity]:
    entities: list[TaggedEntity] = []
    consumed: list[tuple[int, int]] = []
    rank = 0
    for m in TAG_RE.finditer(answer):
        # Nested tags: the outermost match wins, inner tags are stripped
        # from the surface.
        surface = _ANY_TAG_RE.sub("", m.group(2))
        consumed.append(m.span())
        if not surface:
            logger.warning("empty tag %r skipped", m.group(0))
            continue
        entities.append(TaggedEntity(type_label=m.group(1), surface=surface, rank=rank))
        rank += 1
    residue = []
    last = 0
    for s, e in consumed:
        residue.append(answer[last:s])
        last = e
    residue.append(answer[last:])
    stray = _ANY_TAG_RE.findall("".join(residue))
    if stray:
        logger.warning("%d unmatched tag(s) ignored: %s", len(stray), stray[:5])
    return entities


def parse_inline_tagged(answer: str) -> list[TaggedEntity]:
    """Parse an inline-annotated rewrite of the passage."""
    return _scan_tags(answer)


def parse_entity_list(answer: str) -> list[TaggedEntity]:
    """Parse a list-shaped answer; separator text between tags is ignored."""
    return _scan_tags(answer)


def filter_known_types(
    entities: Sequence[TaggedEntity],
) -> tuple[list[TaggedEntity], list[TaggedEntity]]:
    """Split entities into (kept, dropped) by label.

    Kept entities have their label rewritten to the canonical PER/LOC/WORK
    spelling; everything else (DATE, ORG, ...) lands in dropped, order
    preserved on both sides.
    """
    kept: list[TaggedEntity] = []
    dropped: list[TaggedEntity] = []
    for e in entities:
        etype = canonicalize_type(e.type_label)
        if etype is None:
            dropped.append(e)
        else:
            kept.append(TaggedEntity(etype.value, e.surface, e.rank))
    return kept, dropped


def align_to_source(
    entities: Sequence[TaggedEntity],
    source: Document,
    dropped: Sequence[TaggedEntity] = (),
) -> AlignmentOutcome:
    """Map type-filtered entities to character offsets in the source text.

    Cursor rule: find the first occurrence of the surface at or after the
    cursor, emit the prediction and advance the cursor past it; on a miss
    retry once from position zero; still absent -> unaligned.
    """
    bad = sorted({e.type_label for e in entities if canonicalize_type(e.type_label) is None})
    if bad:
        raise ValueError(f"entities must be type-filtered first; unknown labels: {bad}")
    cursor = 0
    aligned: list[Prediction] = []
    unaligned: list[TaggedEntity] = []
    for e in sorted(entities, key=lambda e: e.rank):
        idx = source.text.find(e.surface, cursor)
        if idx == -1:
            idx = source.text.find(e.surface)
        if idx == -1:
            unaligned.append(e)
            continue
        end = idx + len(e.surface)
        aligned.append(
            Prediction(
                doc_id=source.doc_id,
                surface=e.surface,
                start_pos=idx,
                end_pos=end,
                etype=canonicalize_type(e.type_label),
            )
        )
        cursor = end
    return AlignmentOutcome(tuple(aligned), tuple(unaligned), tuple(dropped))


def postprocess_answer(answer: str, mode: str, source: Document) -> AlignmentOutcome:
    """Full pipeline for one answer: parse, filter types, align offsets."""
    if mode == "generative":
        parsed = parse_inline_tagged(answer)
    elif mode == "extractive":
        parsed = parse_entity_list(answer)
    else:
        raise ValueError(f"unknown answer mode {mode!r}")
    kept, dropped = filter_known_types(parsed)
    return align_to_source(kept, source, dropped=dropped)


class OverlapError(ValueError):
    pass


def render_inline_tagged(doc: Document, spans: Sequence[Union[Annotation, Prediction]]) -> str:
    """Insert <TYPE>...</TYPE> around each span, in offset order.

    The output parses back to the same (type, surface, order) list; spans
    must be within bounds and non-overlapping.
    """
    ordered = sorted(spans, key=lambda s: (s.start_pos, s.end_pos))
    for prev, cur in zip(ordered, ordered[1:]):
        if spans_overlap(prev, cur):
            raise OverlapError(
                f"overlapping spans [{prev.start_pos},{prev.end_pos}) and "
                f"[{cur.start_pos},{cur.end_pos}) in {doc.doc_id}"
            )
    parts: list[str] = []
    pos = 0
    for s in ordered:
        if s.start_pos < 0 or s.end_pos > len(doc.text):
            raise ValueError(f"span [{s.start_pos},{s.end_pos}) out of bounds for {doc.doc_id}")
        parts.append(doc.text[pos:s.start_pos])
        parts.append(f"<{s.etype.value}>{doc.text[s.start_pos:s.end_pos]}</{s.etype.value}>")
        pos = s.end_pos
    parts.append(doc.text[pos:])
    return "".join(parts)


# --- wire formats ---------------------------------------------------------

PREDICTIONS_HEADER = ["doc_id", "surface", "start_pos", "end_pos", "type"]


@dataclass(frozen=True)
class RawAnswer:
    """One record of the raw-answers JSON Lines file."""

    doc_id: str
    answer: str
    mode: str
    error: str | None = None


def read_raw_answers(path: Path | str) -> list[RawAnswer]:
    records: list[RawAnswer] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("doc_id", "mode"):
                if key not in obj:
                    raise ValueError(f"{path}:{lineno}: missing {key!r}")
            if obj["mode"] not in ("generative", "extractive"):
                raise ValueError(f"{path}:{lineno}: unknown mode {obj['mode']!r}")
            records.append(
                RawAnswer(
                    doc_id=obj["doc_id"],
                    answer=obj.get("answer") or "",
                    mode=obj["mode"],
                    error=obj.get("error"),
                )
            )
    return records


def write_predictions(preds: Iterable[Prediction], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PREDICTIONS_HEADER)
        for p in preds:
            writer.writerow([p.doc_id, p.surface, p.start_pos, p.end_pos, p.etype.value])


def read_predictions(path: Path | str) -> list[Prediction]:
    preds: list[Prediction] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != PREDICTIONS_HEADER:
            raise ValueError(f"{path}: expected header {PREDICTIONS_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            doc_id, surface, start, end, type_label = row
            etype = canonicalize_type(type_label)
            if etype is None:
                raise ValueError(f"{path}:{lineno}: unknown type {type_label!r}")
            try:
                start_pos, end_pos = int(start), int(end)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer offsets {start!r}, {end!r}") from exc
            preds.append(Prediction(doc_id, surface, start_pos, end_pos, etype))
    return preds


def _entity_dict(e: TaggedEntity) -> dict:
    return {"label": e.type_label, "surface": e.surface, "rank": e.rank}


def write_diagnostics(outcomes: dict[str, AlignmentOutcome], path: Path | str) -> None:
    """Emit unaligned/dropped entities per document (JSON Lines).

    Only documents with something to report get a line, so precision
    penalties stay attributable without drowning the file in no-ops.
    """
    with open(path, "w", encoding="utf-8") as f:
        for doc_id in sorted(outcomes):
            o = outcomes[doc_id]
            if not o.unaligned and not o.dropped:
                continue
            record = {
                "doc_id": doc_id,
                "unaligned": [_entity_dict(e) for e in o.unaligned],
                "dropped": [_entity_dict(e) for e in o.dropped],
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
