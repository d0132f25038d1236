import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sample_note import FIXTURES, P2721_ANNOTATIONS, P2721_ID, P2721_TEXT  # noqa: E402

from edition_ner.model import Corpus, Document  # noqa: E402


@pytest.fixture
def p2721_doc() -> Document:
    return Document(P2721_ID, P2721_TEXT)


@pytest.fixture
def p2721_corpus(p2721_doc) -> Corpus:
    return Corpus([p2721_doc], P2721_ANNOTATIONS)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
