import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sample_corpus import write_sample_corpus  # noqa: E402


@pytest.fixture
def corpus_dir(tmp_path):
    """A small two-CSV corpus written in the documented wire format."""
    return write_sample_corpus(tmp_path / "corpus")
