import json

import pytest

from model_runner.chat import BackendError, FixtureChatBackend, HttpChatBackend, run_chat_model
from model_runner.corpus import Note, read_documents
from model_runner.prompts import bundled_template

from sample_corpus import NOTE_A, NOTE_B


def _fixture_file(tmp_path, answers):
    path = tmp_path / "canned.jsonl"
    path.write_text(
        "\n".join(json.dumps({"doc_id": d, "answer": a}) for d, a in answers.items()) + "\n",
        encoding="utf-8",
    )
    return path


def test_one_record_per_document_in_doc_id_order(tmp_path, corpus_dir):
    notes = read_documents(corpus_dir)
    answers = _fixture_file(tmp_path, {NOTE_A: "<PER>Gelli</PER>", NOTE_B: "<PER>Dante</PER>"})
    out = tmp_path / "raw.jsonl"
    # shuffle input; output must come back sorted by doc_id
    records = run_chat_model(list(reversed(notes)), bundled_template("extractive"), FixtureChatBackend(answers), out)
    assert [r["doc_id"] for r in records] == [NOTE_A, NOTE_B]
    lines = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    assert lines == records
    assert all(r["mode"] == "extractive" for r in records)


def test_per_document_failure_recorded_not_fatal(tmp_path, corpus_dir):
    notes = read_documents(corpus_dir)
    answers = _fixture_file(tmp_path, {NOTE_A: "<PER>Gelli</PER>"})  # NOTE_B missing
    out = tmp_path / "raw.jsonl"
    records = run_chat_model(notes, bundled_template("generative"), FixtureChatBackend(answers), out)
    assert len(records) == 2
    failed = [r for r in records if "error" in r]
    assert [r["doc_id"] for r in failed] == [NOTE_B]
    assert failed[0]["answer"] == ""


def test_unreachable_endpoint_fails_before_any_call(tmp_path, corpus_dir):
    notes = read_documents(corpus_dir)
    backend = HttpChatBackend(endpoint="http://127.0.0.1:9/v1/chat/completions", model="m")
    out = tmp_path / "raw.jsonl"
    with pytest.raises(BackendError, match="unreachable"):
        run_chat_model(notes, bundled_template("generative"), backend, out)
    assert not out.exists()


def test_missing_fixture_file_is_batch_error(tmp_path):
    backend = FixtureChatBackend(tmp_path / "nope.jsonl")
    with pytest.raises(BackendError, match="not found"):
        run_chat_model([Note("d", "testo")], bundled_template("generative"), backend, tmp_path / "o")
