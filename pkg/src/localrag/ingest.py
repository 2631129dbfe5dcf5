"""Corpus ingestion: dump parsing, approximate tokenization, and chunking.

Two source shapes are supported. Encyclopedia dumps arrive as XML or JSONL
streams of articles; each article becomes one chunk when it fits the token
budget and is otherwise packed paragraph by paragraph. Regulation texts are
segmented on clause markers so every clause becomes its own chunk and the
original document can be reassembled from the pieces.

Token counts everywhere are approximate and deliberately cheap: one token
per CJK character plus one per run of other word characters. The same rule
is reused by the reranker and the embedding truncation path so budgets mean
the same thing across the package.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import BinaryIO

DEFAULT_MAX_TOKENS = 8192

# Buckets for the report histogram, chosen around the chunking budgets that
# matter downstream: small clauses, typical articles, the embed budget.
HISTOGRAM_EDGES = (250, 1000, 8192, 17000)

# Han ideographs, kana, hangul, and the compatibility/extension planes.
_CJK_RANGES = (
    "぀-ヿ"
    "㐀-䶿"
    "一-鿿"
    "가-힯"
    "豈-﫿"
    "\U00020000-\U0002ebef"
)
_TOKEN_RE = re.compile(f"[{_CJK_RANGES}]|[^\\W{_CJK_RANGES}]+", re.UNICODE)

# A clause heading sits at the start of a line: 第 + number + 條. Arabic,
# fullwidth, and CJK numerals all occur in practice.
_CLAUSE_NUM = "0-9０-９零〇一二三四五六七八九十百千"
_CLAUSE_RE = re.compile(f"^第[{_CLAUSE_NUM}]+條")

_PARA_SEP_RE = re.compile(r"\n[ \t]*\n+")

_REDIRECT_RE = re.compile(r"^\s*#(redirect|重定向)", re.IGNORECASE)


class SourceKind(str, Enum):
    ENCYCLOPEDIA = "encyclopedia"
    REGULATION = "regulation"


class ChunkKind(str, Enum):
    WHOLE_ARTICLE = "whole_article"
    ARTICLE_FRAGMENT = "article_fragment"
    LEGAL_CLAUSE = "legal_clause"


class ParseError(ValueError):
    """A malformed record in a corpus stream, with its position."""


class IngestAborted(RuntimeError):
    """The sink failed mid-run. Carries the report built so far."""

    def __init__(self, message: str, report: "IngestReport"):
        super().__init__(message)
        self.report = report


def tokenize(text: str) -> list[str]:
    """Split text into approximate tokens.

    Each CJK codepoint is one token; each maximal run of other word
    characters is one token. Punctuation and whitespace vanish.
    """
    return _TOKEN_RE.findall(text)


def approx_token_count(text: str) -> int:
    """Count approximate tokens without materializing them."""
    return sum(1 for _ in _TOKEN_RE.finditer(text))


def truncate_to_tokens(text: str, max_tokens: int) -> str:
    """Cut text right after its max_tokens-th token.

    Returns the text unchanged when it is already within budget.
    """
    if max_tokens <= 0:
        raise ValueError(f"max_tokens must be positive, got {max_tokens}")
    end = None
    for i, match in enumerate(_TOKEN_RE.finditer(text)):
        if i == max_tokens:
            return text[:end]
        end = match.end()
    return text


@dataclass
class SourceDocument:
    """One raw document prior to chunking."""

    doc_id: str
    title: str
    body: str
    source: SourceKind
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if not self.body:
            raise ValueError(f"document {self.doc_id!r} has an empty body")
        self.source = SourceKind(self.source)


@dataclass
class Chunk:
    """One retrievable unit of text."""

    chunk_id: str
    parent_doc_id: str
    text: str
    token_count: int
    kind: ChunkKind
    hard_split: bool = False

    def __post_init__(self) -> None:
        self.kind = ChunkKind(self.kind)

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "parent_doc_id": self.parent_doc_id,
            "text": self.text,
            "token_count": self.token_count,
            "kind": self.kind.value,
            "hard_split": self.hard_split,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Chunk":
        return cls(
            chunk_id=data["chunk_id"],
            parent_doc_id=data["parent_doc_id"],
            text=data["text"],
            token_count=data["token_count"],
            kind=ChunkKind(data["kind"]),
            hard_split=bool(data.get("hard_split", False)),
        )


def _chunk_id(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}#{ordinal}"


def _make_chunk(
    doc_id: str,
    ordinal: int,
    text: str,
    kind: ChunkKind,
    hard_split: bool = False,
) -> Chunk:
    return Chunk(
        chunk_id=_chunk_id(doc_id, ordinal),
        parent_doc_id=doc_id,
        text=text,
        token_count=approx_token_count(text),
        kind=kind,
        hard_split=hard_split,
    )


def _histogram_bucket(token_count: int) -> str:
    lo = 0
    for edge in HISTOGRAM_EDGES:
        if token_count < edge:
            return f"{lo}-{edge - 1}"
        lo = edge
    return f"{HISTOGRAM_EDGES[-1]}+"


@dataclass
class IngestReport:
    """Counters accumulated over one ingestion run. Reports merge."""

    documents_seen: int = 0
    documents_dropped: int = 0
    malformed_records: int = 0
    chunks_emitted: int = 0
    hard_split_chunks: int = 0
    unsegmented_regulations: list[str] = field(default_factory=list)
    token_histogram: Counter = field(default_factory=Counter)

    def record_chunk(self, chunk: Chunk) -> None:
        self.chunks_emitted += 1
        if chunk.hard_split:
            self.hard_split_chunks += 1
        self.token_histogram[_histogram_bucket(chunk.token_count)] += 1

    def merge(self, other: "IngestReport") -> "IngestReport":
        """Combine two reports into a new one; inputs are untouched."""
        return IngestReport(
            documents_seen=self.documents_seen + other.documents_seen,
            documents_dropped=self.documents_dropped + other.documents_dropped,
            malformed_records=self.malformed_records + other.malformed_records,
            chunks_emitted=self.chunks_emitted + other.chunks_emitted,
            hard_split_chunks=self.hard_split_chunks + other.hard_split_chunks,
            unsegmented_regulations=(
                self.unsegmented_regulations + other.unsegmented_regulations
            ),
            token_histogram=self.token_histogram + other.token_histogram,
        )

    def to_dict(self) -> dict:
        return {
            "documents_seen": self.documents_seen,
            "documents_dropped": self.documents_dropped,
            "malformed_records": self.malformed_records,
            "chunks_emitted": self.chunks_emitted,
            "hard_split_chunks": self.hard_split_chunks,
            "unsegmented_regulations": list(self.unsegmented_regulations),
            "token_histogram": dict(sorted(self.token_histogram.items())),
        }


def _is_redirect(body: str, record: dict | None = None) -> bool:
    if record is not None and record.get("redirect"):
        return True
    return bool(_REDIRECT_RE.match(body))


def _parse_jsonl(
    stream: BinaryIO,
    strict: bool,
    report: IngestReport,
    seen_ids: set[str],
) -> Iterator[SourceDocument]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("record is not an object")
            doc_id = str(record["id"])
            title = str(record.get("title", ""))
            body = str(record["text"])
            if doc_id in seen_ids:
                raise ValueError(f"duplicate doc_id {doc_id!r}")
        except (KeyError, ValueError) as exc:
            if strict:
                raise ParseError(f"line {lineno}: {exc}") from exc
            report.malformed_records += 1
            continue
        seen_ids.add(doc_id)
        report.documents_seen += 1
        if _is_redirect(body, record) or not body.strip():
            report.documents_dropped += 1
            continue
        yield SourceDocument(doc_id, title, body, SourceKind.ENCYCLOPEDIA)


def _page_field(elem: ET.Element, tag: str) -> str | None:
    child = elem.find(tag)
    if child is None:
        return None
    return child.text or ""


def _parse_xml_dump(
    stream: BinaryIO,
    strict: bool,
    report: IngestReport,
    seen_ids: set[str],
) -> Iterator[SourceDocument]:
    # iterparse keeps memory bounded as long as finished pages are cleared.
    try:
        for _event, elem in ET.iterparse(stream, events=("end",)):
            tag = elem.tag.rsplit("}", 1)[-1]
            if tag != "page":
                continue
            doc_id = _page_field(elem, "id")
            title = _page_field(elem, "title")
            body = _page_field(elem, "text")
            redirect = elem.find("redirect") is not None
            elem.clear()
            if not doc_id or title is None or body is None:
                if strict:
                    raise ParseError(
                        f"page missing id/title/text (last id {doc_id!r})"
                    )
                report.malformed_records += 1
                continue
            if doc_id in seen_ids:
                if strict:
                    raise ParseError(f"duplicate doc_id {doc_id!r}")
                report.malformed_records += 1
                continue
            seen_ids.add(doc_id)
            report.documents_seen += 1
            if redirect or _is_redirect(body) or not body.strip():
                report.documents_dropped += 1
                continue
            yield SourceDocument(doc_id, title, body, SourceKind.ENCYCLOPEDIA)
    except ET.ParseError as exc:
        raise ParseError(f"xml not well-formed at {exc.position}") from exc


def parse_dump(
    stream: BinaryIO,
    fmt: str,
    *,
    strict: bool = True,
    report: IngestReport | None = None,
) -> Iterator[SourceDocument]:
    """Stream documents out of an encyclopedia dump.

    ``fmt`` is "xml_dump" or "jsonl". Redirect stubs and empty bodies are
    dropped and counted on the report. Malformed records raise ParseError
    with a position when strict, otherwise they are counted and skipped.
    """
    if report is None:
        report = IngestReport()
    seen_ids: set[str] = set()
    if fmt == "jsonl":
        return _parse_jsonl(stream, strict, report, seen_ids)
    if fmt == "xml_dump":
        return _parse_xml_dump(stream, strict, report, seen_ids)
    raise ValueError(f"unknown dump format {fmt!r}")


def segment_regulation(
    doc: SourceDocument,
    *,
    report: IngestReport | None = None,
) -> list[Chunk]:
    """Split a regulation into clause chunks on 第N條 line headings.

    Text before the first heading becomes a preamble chunk (ordinal 0)
    when it has content; pure-whitespace preambles are folded into the
    first clause so concatenating the chunk texts reproduces the body
    exactly. A document without any heading comes back as one chunk and
    is flagged on the report.
    """
    if doc.source is not SourceKind.REGULATION:
        raise ValueError(f"document {doc.doc_id!r} is not a regulation")
    lines = doc.body.splitlines(keepends=True)
    marker_idx = [i for i, line in enumerate(lines) if _CLAUSE_RE.match(line)]
    if not marker_idx:
        if report is not None:
            report.unsegmented_regulations.append(doc.doc_id)
        return [_make_chunk(doc.doc_id, 0, doc.body, ChunkKind.LEGAL_CLAUSE)]

    pieces: list[str] = []
    preamble = "".join(lines[: marker_idx[0]])
    if preamble.strip():
        pieces.append(preamble)
        prefix = ""
    else:
        prefix = preamble
    bounds = marker_idx + [len(lines)]
    for start, stop in zip(bounds[:-1], bounds[1:]):
        pieces.append(prefix + "".join(lines[start:stop]))
        prefix = ""
    return [
        _make_chunk(doc.doc_id, i, piece, ChunkKind.LEGAL_CLAUSE)
        for i, piece in enumerate(pieces)
    ]


def _split_paragraphs(body: str) -> list[str]:
    """Split on blank lines, keeping separators attached to the left side."""
    parts: list[str] = []
    pos = 0
    for match in _PARA_SEP_RE.finditer(body):
        parts.append(body[pos : match.end()])
        pos = match.end()
    if pos < len(body):
        parts.append(body[pos:])
    return parts


def _hard_split(text: str, max_tokens: int) -> list[str]:
    """Split one overlong stretch of text on token boundaries."""
    pieces: list[str] = []
    spans = [m.span() for m in _TOKEN_RE.finditer(text)]
    for i in range(0, len(spans), max_tokens):
        window = spans[i : i + max_tokens]
        start = 0 if i == 0 else window[0][0]
        end = len(text) if i + max_tokens >= len(spans) else window[-1][1]
        pieces.append(text[start:end])
    return pieces


def chunk_document(
    doc: SourceDocument,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> list[Chunk]:
    """Chunk an article under a token budget.

    Fits the whole article into one chunk when possible. Otherwise packs
    consecutive paragraphs greedily; a single paragraph over the budget is
    hard-split on token boundaries and those pieces carry a flag.
    """
    if max_tokens <= 0:
        raise ValueError(f"max_tokens must be positive, got {max_tokens}")
    if approx_token_count(doc.body) <= max_tokens:
        return [_make_chunk(doc.doc_id, 0, doc.body, ChunkKind.WHOLE_ARTICLE)]

    fragments: list[tuple[str, bool]] = []
    current: list[str] = []
    current_tokens = 0

    def flush() -> None:
        nonlocal current, current_tokens
        if current:
            fragments.append(("".join(current), False))
            current = []
            current_tokens = 0

    for para in _split_paragraphs(doc.body):
        n = approx_token_count(para)
        if n > max_tokens:
            flush()
            fragments.extend((p, True) for p in _hard_split(para, max_tokens))
            continue
        if current and current_tokens + n > max_tokens:
            flush()
        current.append(para)
        current_tokens += n
    flush()

    chunks = []
    for i, (text, forced) in enumerate(fragments):
        cleaned = text.rstrip("\n") or text
        chunks.append(
            _make_chunk(
                doc.doc_id, i, cleaned, ChunkKind.ARTICLE_FRAGMENT, forced
            )
        )
    return chunks


@dataclass
class CorpusSource:
    """Where one corpus lives and how to ingest it.

    kind is "jsonl", "xml_dump", or "regulation_dir". The first two point
    at a dump file; the last at a directory of .txt files, one regulation
    per file, whose stem becomes the doc_id.
    """

    kind: str
    path: Path
    max_tokens: int = DEFAULT_MAX_TOKENS
    strict: bool = True
    title_header: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("jsonl", "xml_dump", "regulation_dir"):
            raise ValueError(f"unknown corpus kind {self.kind!r}")
        self.path = Path(self.path)


def _iter_regulation_docs(source: CorpusSource) -> Iterator[SourceDocument]:
    for path in sorted(source.path.glob("*.txt")):
        body = path.read_text(encoding="utf-8")
        if not body.strip():
            continue
        title = body.splitlines()[0].strip() if body else path.stem
        yield SourceDocument(path.stem, title, body, SourceKind.REGULATION)


def _with_title_header(chunk: Chunk, title: str) -> Chunk:
    text = f"{title}\n{chunk.text}"
    return replace(chunk, text=text, token_count=approx_token_count(text))


def _document_chunks(
    doc: SourceDocument,
    source: CorpusSource,
    report: IngestReport,
) -> list[Chunk]:
    if doc.source is SourceKind.REGULATION:
        raw = segment_regulation(doc, report=report)
        pieces: list[tuple[str, bool]] = []
        for chunk in raw:
            if chunk.token_count > source.max_tokens:
                pieces.extend(
                    (p, True) for p in _hard_split(chunk.text, source.max_tokens)
                )
            else:
                pieces.append((chunk.text, chunk.hard_split))
        chunks = [
            _make_chunk(doc.doc_id, i, text, ChunkKind.LEGAL_CLAUSE, forced)
            for i, (text, forced) in enumerate(pieces)
        ]
    else:
        chunks = chunk_document(doc, source.max_tokens)
    if source.title_header and doc.title:
        chunks = [_with_title_header(c, doc.title) for c in chunks]
    return chunks


def ingest_corpus(
    sources: CorpusSource | Sequence[CorpusSource],
    sink: Callable[[Chunk], None],
) -> IngestReport:
    """Run full ingestion over one or more sources, feeding chunks to sink.

    Processing order is deterministic: sources in the order given, dump
    records in stream order, regulation files sorted by name. A sink
    failure aborts the run; the partial report rides on the exception.
    """
    if isinstance(sources, CorpusSource):
        sources = [sources]
    report = IngestReport()
    for source in sources:
        if source.kind == "regulation_dir":
            docs: Iterable[SourceDocument] = _iter_regulation_docs(source)
            for doc in docs:
                report.documents_seen += 1
                _emit(doc, source, report, sink)
        else:
            with open(source.path, "rb") as stream:
                for doc in parse_dump(
                    stream, source.kind, strict=source.strict, report=report
                ):
                    _emit(doc, source, report, sink)
    return report


def _emit(
    doc: SourceDocument,
    source: CorpusSource,
    report: IngestReport,
    sink: Callable[[Chunk], None],
) -> None:
    for chunk in _document_chunks(doc, source, report):
        try:
            sink(chunk)
        except Exception as exc:
            raise IngestAborted(
                f"sink failed on chunk {chunk.chunk_id!r}: {exc}", report
            ) from exc
        report.record_chunk(chunk)


def write_chunk_archive(chunks: Iterable[Chunk], path: Path | str) -> int:
    """Write chunks to a JSONL archive. Returns the record count.

    Output bytes are a pure function of the chunk sequence, so rerunning
    an identical ingest produces an identical file.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(
                json.dumps(chunk.to_dict(), ensure_ascii=False, sort_keys=True)
            )
            fh.write("\n")
            count += 1
    return count


def read_chunk_archive(path: Path | str) -> Iterator[Chunk]:
    """Stream chunks back out of a JSONL archive."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield Chunk.from_dict(json.loads(line))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
