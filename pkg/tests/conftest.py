from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from localrag.embedding import EmbedderSpec, HashedNgramEmbedder


@pytest.fixture
def embedder() -> HashedNgramEmbedder:
    """Small offline embedder shared by tests that need one."""
    return HashedNgramEmbedder(EmbedderSpec(dims=256))
