"""Native vector indexes: flat scan, inverted file, and layered graph."""

from __future__ import annotations

from .base import (
    IndexConfig,
    IndexFrozenError,
    IndexKind,
    SearchHit,
    VectorIndex,
)
from .flat import FlatIndex
from .hnsw import HnswIndex
from .io import (
    CorruptIndexError,
    IndexFormatError,
    VersionMismatchError,
    load,
    save,
)
from .ivf import IvfIndex

__all__ = [
    "IndexConfig",
    "IndexKind",
    "IndexFrozenError",
    "SearchHit",
    "VectorIndex",
    "FlatIndex",
    "IvfIndex",
    "HnswIndex",
    "CorruptIndexError",
    "IndexFormatError",
    "VersionMismatchError",
    "save",
    "load",
    "create_index",
]


def create_index(config: IndexConfig) -> VectorIndex:
    """Build an empty index of the kind named in the config."""
    if config.kind is IndexKind.FLAT:
        return FlatIndex(config)
    if config.kind is IndexKind.IVF:
        return IvfIndex(config)
    return HnswIndex(config)
