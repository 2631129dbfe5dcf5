"""Binary persistence for the vector indexes.

Layout, all little-endian:

    magic "LRVX" | u16 version | u32 config-json length | config json
    u64 count | per id: u32 length + utf-8 bytes
    count x dims float32 vector payload
    kind-specific structure (ivf cells, hnsw graph)
    u32 crc32 over everything above

The checksum is verified before any parsing, so truncation or bit rot
fails fast instead of producing a half-loaded index. Loaded indexes come
back frozen: they answer queries exactly like the saved one but do not
accept new vectors.
"""

from __future__ import annotations

import io as _io
import json
import struct
import zlib
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .base import IndexConfig, IndexKind, VectorIndex
from .flat import FlatIndex
from .hnsw import HnswIndex
from .ivf import IvfIndex

MAGIC = b"LRVX"
FORMAT_VERSION = 1


class IndexFormatError(ValueError):
    """The bytes are not a readable index file."""


class CorruptIndexError(IndexFormatError):
    """Checksum mismatch, truncation, or inconsistent structure."""


class VersionMismatchError(IndexFormatError):
    """The file is a newer or older format than this code reads."""


def _pack_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptIndexError("unexpected end of index data")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def f32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 4), dtype="<f4").copy()

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 8), dtype="<f8").copy()

    def u32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 4), dtype="<u4").copy()

    def done(self) -> bool:
        return self.pos == len(self.data)


def _serialize(index: VectorIndex) -> bytes:
    buf = _io.BytesIO()
    config_json = json.dumps(index.config.to_dict(), sort_keys=True).encode()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    buf.write(struct.pack("<I", len(config_json)))
    buf.write(config_json)
    buf.write(struct.pack("<Q", len(index)))
    for chunk_id in index.chunk_ids():
        buf.write(_pack_str(chunk_id))
    buf.write(index._vectors().astype("<f4").tobytes())

    if isinstance(index, IvfIndex):
        assert index._centroids is not None
        buf.write(index._centroids.astype("<f8").tobytes())
        for rows in index._lists:
            buf.write(struct.pack("<I", len(rows)))
            buf.write(rows.astype("<u4").tobytes())
    elif isinstance(index, HnswIndex):
        buf.write(struct.pack("<q", index._entry))
        buf.write(struct.pack("<q", index._max_level))
        for node in range(len(index)):
            layers = index._neighbors[node]
            buf.write(struct.pack("<I", index._levels[node]))
            for links in layers:
                buf.write(struct.pack("<I", len(links)))
                buf.write(np.asarray(links, dtype="<u4").tobytes())

    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


def save(index: VectorIndex, destination: Path | str | BinaryIO) -> None:
    """Write a frozen-state snapshot of the index.

    Flat indexes save at any time; ivf must be trained and hnsw frozen,
    since their structure would otherwise still be in motion.
    """
    if isinstance(index, IvfIndex) and not index.trained:
        raise ValueError("ivf index must be trained before saving")
    if isinstance(index, HnswIndex) and not index.frozen:
        raise ValueError("hnsw index must be frozen before saving")
    data = _serialize(index)
    if hasattr(destination, "write"):
        destination.write(data)  # type: ignore[union-attr]
    else:
        Path(destination).write_bytes(data)


def load(source: Path | str | BinaryIO) -> VectorIndex:
    """Read an index back. The result is frozen."""
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = Path(source).read_bytes()
    if len(data) < len(MAGIC) + 2 + 4 + 4:
        raise CorruptIndexError("file too short to be an index")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptIndexError("checksum mismatch")
    if body[:4] != MAGIC:
        raise IndexFormatError("bad magic, not an index file")
    reader = _Reader(body)
    reader.take(4)
    version = reader.u16()
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"file format version {version}, expected {FORMAT_VERSION}"
        )
    config = IndexConfig.from_dict(json.loads(reader.string()))
    count = reader.u64()
    ids = [reader.string() for _ in range(count)]
    matrix = reader.f32_array(count * config.dims).reshape(count, config.dims)

    index: VectorIndex
    if config.kind is IndexKind.FLAT:
        index = FlatIndex(config)
    elif config.kind is IndexKind.IVF:
        index = IvfIndex(config)
    else:
        index = HnswIndex(config)

    index._ids = ids
    index._id_rows = {chunk_id: row for row, chunk_id in enumerate(ids)}
    if len(index._id_rows) != count:
        raise CorruptIndexError("duplicate ids in index file")
    index._matrix = matrix
    index._size = count

    if isinstance(index, IvfIndex):
        nlist = config.ivf_nlist
        index._centroids = reader.f64_array(nlist * config.dims).reshape(
            nlist, config.dims
        )
        lists = []
        total = 0
        for _ in range(nlist):
            n = reader.u32()
            rows = reader.u32_array(n)
            if len(rows) and rows.max() >= count:
                raise CorruptIndexError("posting list points past the vectors")
            total += n
            lists.append(rows)
        if total != count:
            raise CorruptIndexError("posting lists do not cover the vectors")
        index._lists = lists
    elif isinstance(index, HnswIndex):
        index._entry = reader.i64()
        index._max_level = reader.i64()
        levels = []
        neighbors = []
        for _ in range(count):
            level = reader.u32()
            layers = []
            for _lvl in range(level + 1):
                n = reader.u32()
                links = reader.u32_array(n)
                if len(links) and links.max() >= count:
                    raise CorruptIndexError("graph link points past the vectors")
                layers.append([int(x) for x in links])
            levels.append(level)
            neighbors.append(layers)
        index._levels = levels
        index._neighbors = neighbors

    if not reader.done():
        raise CorruptIndexError("trailing bytes after index payload")
    index.freeze()
    return index
