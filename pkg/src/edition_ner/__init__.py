"""Standoff NER corpora from digital editions: build, post-process, score."""

from .model import (
    Annotation,
    Corpus,
    CorpusError,
    Document,
    EntityType,
    Prediction,
    Violation,
    canonicalize_type,
    dedupe_predictions,
    validate_annotation,
)
from .scoring import (
    EvaluationReport,
    MatchMode,
    MatchResult,
    Metrics,
    evaluate,
    match_exact,
    match_fuzzy,
    prf,
    render_report,
)
from .tagged import (
    AlignmentOutcome,
    TaggedEntity,
    align_to_source,
    filter_known_types,
    parse_entity_list,
    parse_inline_tagged,
    postprocess_answer,
    render_inline_tagged,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AlignmentOutcome",
    "Corpus",
    "CorpusError",
    "Document",
    "EntityType",
    "EvaluationReport",
    "MatchMode",
    "MatchResult",
    "Metrics",
    "Prediction",
    "TaggedEntity",
    "Violation",
    "align_to_source",
    "canonicalize_type",
    "dedupe_predictions",
    "evaluate",
    "filter_known_types",
    "match_exact",
    "match_fuzzy",
    "parse_entity_list",
    "parse_inline_tagged",
    "postprocess_answer",
    "prf",
    "render_inline_tagged",
    "render_report",
    "validate_annotation",
]
