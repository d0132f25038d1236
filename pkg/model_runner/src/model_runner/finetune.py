"""Fine-tuning recipe and training-dataset export.

The recipe records the domain-adaptation hyperparameters as data and the
dataset export mirrors the toolkit's training JSON byte-for-byte: Italian
labels, character offsets and identifiers preserved so the file converts
back to the corpus. Running the training loop itself is out of scope
here; the emitted plan is the hand-off to an external trainer.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import ITALIAN_LABELS, GoldSpan, read_annotations, read_documents

TYPE_ORDER = ("PER", "LOC", "WORK")
FINETUNE_LABELS = [ITALIAN_LABELS[t] for t in TYPE_ORDER]


@dataclass(frozen=True)
class FineTuneRecipe:
    """Domain-adaptation settings for the span-classifier backbone.

    The two learning rates apply to the span/entity-representation heads
    and to the transformer backbone respectively; where a backbone has a
    different internal layout, map them accordingly.
    """

    epochs: int = 4
    lr_ner_components: float = 5e-6
    lr_backbone: float = 1e-5
    batch_size: int = 4
    weight_decay: float = 0.01
    labels: tuple[str, ...] = tuple(FINETUNE_LABELS)
    train_fraction: str = "9/10"

    def to_dict(self) -> dict:
        data = asdict(self)
        data["labels"] = list(self.labels)
        return data


def export_finetune_dataset(corpus_dir: Path | str) -> dict:
    """Build the training JSON from a two-CSV corpus directory."""
    notes = read_documents(Path(corpus_dir) / "documents.csv")
    spans = read_annotations(Path(corpus_dir) / "annotations.csv")
    by_doc: dict[str, list[GoldSpan]] = {note.doc_id: [] for note in notes}
    for span in spans:
        if span.doc_id not in by_doc:
            raise ValueError(f"annotation references unknown document {span.doc_id!r}")
        if span.type not in ITALIAN_LABELS:
            raise ValueError(f"unknown entity type {span.type!r} for {span.doc_id}")
        by_doc[span.doc_id].append(span)
    records = []
    for note in notes:
        entities = [
            {
                "surface": s.surface,
                "start_pos": s.start_pos,
                "end_pos": s.end_pos,
                "identifier": s.identifier,
                "label": ITALIAN_LABELS[s.type],
            }
            for s in sorted(by_doc[note.doc_id], key=lambda s: (s.start_pos, s.end_pos))
        ]
        records.append(
            {
                "doc_id": note.doc_id,
                "text": note.text,
                "tokenized_text": note.text.split(),
                "entities": entities,
            }
        )
    return {"labels": FINETUNE_LABELS, "records": records}


def write_finetune_dataset(corpus_dir: Path | str, out_path: Path | str) -> None:
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(export_finetune_dataset(corpus_dir), f, ensure_ascii=False, indent=2)
        f.write("\n")


@dataclass
class TrainingPlan:
    base_model: str
    recipe: FineTuneRecipe
    dataset_path: str
    output_dir: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "base_model": self.base_model,
            "recipe": self.recipe.to_dict(),
            "dataset_path": self.dataset_path,
            "output_dir": self.output_dir,
            "notes": self.notes,
        }


def make_training_plan(
    base_model: str,
    dataset_path: Path | str,
    output_dir: Path | str,
    recipe: FineTuneRecipe | None = None,
) -> TrainingPlan:
    recipe = recipe or FineTuneRecipe()
    with open(dataset_path, encoding="utf-8") as f:
        data = json.load(f)
    if sorted(data.get("labels", [])) != sorted(recipe.labels):
        raise ValueError(
            f"dataset labels {data.get('labels')} do not match recipe labels {list(recipe.labels)}"
        )
    plan = TrainingPlan(
        base_model=base_model,
        recipe=recipe,
        dataset_path=str(dataset_path),
        output_dir=str(output_dir),
        notes=[f"{len(data.get('records', []))} training records"],
    )
    return plan
