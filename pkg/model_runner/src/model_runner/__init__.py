"""Model adapters emitting the edition-ner wire formats."""

from .chat import BackendError, FixtureChatBackend, HttpChatBackend, run_chat_model
from .corpus import Note, read_annotations, read_documents
from .finetune import FineTuneRecipe, export_finetune_dataset, make_training_plan
from .prompts import PromptTemplate, build_prompt, bundled_template, load_template
from .span import GazetteerBackend, GlinerBackend, ModelLoadError, run_span_model

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "FineTuneRecipe",
    "FixtureChatBackend",
    "GazetteerBackend",
    "GlinerBackend",
    "HttpChatBackend",
    "ModelLoadError",
    "Note",
    "PromptTemplate",
    "build_prompt",
    "bundled_template",
    "export_finetune_dataset",
    "load_template",
    "make_training_plan",
    "read_annotations",
    "read_documents",
    "run_chat_model",
    "run_span_model",
]
