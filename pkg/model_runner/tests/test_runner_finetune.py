import json
import subprocess
import sys

import pytest

from model_runner.finetune import (
    FineTuneRecipe,
    export_finetune_dataset,
    make_training_plan,
    write_finetune_dataset,
)

from sample_corpus import NOTE_A


def test_recipe_default_values():
    recipe = FineTuneRecipe()
    assert recipe.epochs == 4
    assert recipe.lr_ner_components == 5e-6
    assert recipe.lr_backbone == 1e-5
    assert recipe.batch_size == 4
    assert recipe.weight_decay == 0.01
    assert recipe.labels == ("persona", "luogo", "opera")
    assert recipe.train_fraction == "9/10"


def test_export_uses_italian_labels_and_offsets(corpus_dir):
    data = export_finetune_dataset(corpus_dir)
    assert data["labels"] == ["persona", "luogo", "opera"]
    record = next(r for r in data["records"] if r["doc_id"] == NOTE_A)
    assert record["tokenized_text"] == ["Il", "Gelli", "scrisse", "a", "Roma."]
    assert record["entities"] == [
        {"surface": "Gelli", "start_pos": 3, "end_pos": 8, "identifier": "Q518160", "label": "persona"},
        {"surface": "Roma", "start_pos": 19, "end_pos": 23, "identifier": "Q220", "label": "luogo"},
    ]


def test_export_matches_toolkit_cli_byte_for_byte(corpus_dir, tmp_path):
    """Both components must emit the identical training JSON for one corpus."""
    ours = tmp_path / "ours.json"
    theirs = tmp_path / "theirs.json"
    write_finetune_dataset(corpus_dir, ours)
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "edition_ner.cli",
            "export-finetune",
            "--corpus",
            str(corpus_dir),
            "--out",
            str(theirs),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert ours.read_bytes() == theirs.read_bytes()


def test_training_plan_checks_labels(tmp_path, corpus_dir):
    dataset = tmp_path / "train.json"
    write_finetune_dataset(corpus_dir, dataset)
    plan = make_training_plan("DeepMount00/GLiNER_ITA_BASE", dataset, tmp_path / "out")
    assert plan.recipe == FineTuneRecipe()
    assert plan.to_dict()["recipe"]["epochs"] == 4

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": ["person"], "records": []}), encoding="utf-8")
    with pytest.raises(ValueError, match="labels"):
        make_training_plan("m", bad, tmp_path / "out")


def test_unknown_annotation_type_rejected(corpus_dir):
    anns = corpus_dir / "annotations.csv"
    anns.write_text(
        anns.read_text(encoding="utf-8").replace("PER", "DATE"), encoding="utf-8"
    )
    with pytest.raises(ValueError, match="DATE"):
        export_finetune_dataset(corpus_dir)
