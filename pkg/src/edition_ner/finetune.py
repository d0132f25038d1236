"""Training-dataset export for span-classifier fine-tuning.

Entity types are rendered as the Italian words a domain model is trained
against (persona / luogo / opera). Character offsets and identifiers are
preserved verbatim so the file converts back to the corpus exactly;
tokenized_text (whitespace tokens) is included for trainers that consume
token sequences.
"""
from __future__ import annotations

import json
from pathlib import Path

from .model import Annotation, Corpus, Document, EntityType, canonicalize_type

ITALIAN_LABELS = {
    EntityType.PER: "persona",
    EntityType.LOC: "luogo",
    EntityType.WORK: "opera",
}

FINETUNE_LABELS = [ITALIAN_LABELS[t] for t in EntityType]


def export_finetune_dataset(corpus: Corpus) -> dict:
    """Per-document records with Italian span labels, offsets preserved."""
    records = []
    doc_order = {doc_id: i for i, doc_id in enumerate(corpus.documents)}
    by_doc: dict[str, list[Annotation]] = {doc_id: [] for doc_id in corpus.documents}
    for ann in corpus.annotations:
        by_doc[ann.doc_id].append(ann)
    for doc_id, doc in corpus.documents.items():
        entities = [
            {
                "surface": a.surface,
                "start_pos": a.start_pos,
                "end_pos": a.end_pos,
                "identifier": a.identifier,
                "label": ITALIAN_LABELS[a.etype],
            }
            for a in sorted(by_doc[doc_id], key=lambda a: (a.start_pos, a.end_pos))
        ]
        records.append(
            {
                "doc_id": doc_id,
                "text": doc.text,
                "tokenized_text": doc.text.split(),
                "entities": entities,
            }
        )
    records.sort(key=lambda r: doc_order[r["doc_id"]])
    return {"labels": FINETUNE_LABELS, "records": records}


def finetune_dataset_to_corpus(data: dict) -> Corpus:
    """Inverse of export_finetune_dataset; validates labels strictly."""
    documents = []
    annotations = []
    for i, record in enumerate(data.get("records", [])):
        documents.append(Document(doc_id=record["doc_id"], text=record["text"]))
        for j, e in enumerate(record.get("entities", [])):
            etype = canonicalize_type(e["label"])
            if etype is None:
                raise ValueError(f"record {i} entity {j}: unknown label {e['label']!r}")
            annotations.append(
                Annotation(
                    doc_id=record["doc_id"],
                    surface=e["surface"],
                    start_pos=e["start_pos"],
                    end_pos=e["end_pos"],
                    identifier=e["identifier"],
                    etype=etype,
                )
            )
    return Corpus(documents, annotations)


def write_finetune_dataset(corpus: Corpus, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(export_finetune_dataset(corpus), f, ensure_ascii=False, indent=2)
        f.write("\n")
