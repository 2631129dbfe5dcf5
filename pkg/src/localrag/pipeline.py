"""The question-answering pipeline.

One pipeline object owns an index, the chunk texts behind it, an
embedder, a pair scorer for reranking, and a language model client. A
question flows through retrieve, rerank, prompt, complete, and finally
label extraction: the model's reply is embedded and compared to each
option text by cosine similarity, and the closest option wins. Labeled
mode first tries to read a bare option letter out of the reply and only
falls back to the similarity route when none is there.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import prompts
from .embedding import Embedder, Metric, similarity
from .index.base import VectorIndex
from .ingest import Chunk, read_chunk_archive
from .llm import LlmClient
from .rerank import PairScorer, ScoredPassage, rerank

LABELS = ("A", "B", "C", "D")


@dataclass
class McqOption:
    label: str
    text: str

    def to_dict(self) -> dict:
        return {"label": self.label, "text": self.text}


@dataclass
class McqQuestion:
    """A multiple-choice question with 2 to 4 lettered options."""

    question_id: str
    stem: str
    options: list[McqOption]
    topic: str = ""
    gold_label: str | None = None

    def __post_init__(self) -> None:
        if not self.question_id:
            raise ValueError("question_id must be non-empty")
        if not self.stem.strip():
            raise ValueError(f"question {self.question_id!r} has an empty stem")
        self.options = [
            o if isinstance(o, McqOption) else McqOption(**o)
            for o in self.options
        ]
        labels = tuple(o.label for o in self.options)
        if not 2 <= len(labels) <= 4 or labels != LABELS[: len(labels)]:
            raise ValueError(
                f"question {self.question_id!r}: options must be labeled "
                f"{LABELS[0]}..{LABELS[3]} in order, got {labels}"
            )
        for option in self.options:
            if not option.text.strip():
                raise ValueError(
                    f"question {self.question_id!r} has an empty option text"
                )
        if self.gold_label is not None and self.gold_label not in labels:
            raise ValueError(
                f"question {self.question_id!r}: gold label "
                f"{self.gold_label!r} is not one of {labels}"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.options)

    def option_pairs(self) -> list[tuple[str, str]]:
        return [(o.label, o.text) for o in self.options]

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "topic": self.topic,
            "stem": self.stem,
            "options": [o.to_dict() for o in self.options],
            "gold_label": self.gold_label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "McqQuestion":
        return cls(
            question_id=data["question_id"],
            stem=data["stem"],
            options=[McqOption(**o) for o in data["options"]],
            topic=data.get("topic", ""),
            gold_label=data.get("gold_label"),
        )


@dataclass
class PromptBundle:
    system: str
    user: str


@dataclass
class RagAnswer:
    """Everything produced while answering one question."""

    question_id: str
    mode: str
    used_rag: bool
    contexts: list[ScoredPassage]
    llm_text: str
    predicted_label: str
    label_source: str  # "parsed", "similarity", or "similarity_fallback"
    option_similarities: list[float] | None = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "mode": self.mode,
            "used_rag": self.used_rag,
            "contexts": [c.to_dict() for c in self.contexts],
            "llm_text": self.llm_text,
            "predicted_label": self.predicted_label,
            "label_source": self.label_source,
            "option_similarities": self.option_similarities,
        }


@dataclass
class Reference:
    """A generated study paragraph and the chunks it drew from."""

    text: str
    cited_chunk_ids: list[str]

    def to_dict(self) -> dict:
        return {"text": self.text, "cited_chunk_ids": self.cited_chunk_ids}


class ReferenceGenerationError(RuntimeError):
    """Generation failed after retrieval; the contexts are still here."""

    def __init__(self, message: str, contexts: list[ScoredPassage]):
        super().__init__(message)
        self.contexts = contexts


class ChunkStore:
    """Chunk texts by id, the companion to an index of their vectors."""

    def __init__(self, chunks: Iterable[Chunk] = ()):
        self._chunks: dict[str, Chunk] = {}
        for chunk in chunks:
            self.add(chunk)

    def add(self, chunk: Chunk) -> None:
        if chunk.chunk_id in self._chunks:
            raise ValueError(f"duplicate chunk_id {chunk.chunk_id!r}")
        self._chunks[chunk.chunk_id] = chunk

    def get(self, chunk_id: str) -> Chunk:
        try:
            return self._chunks[chunk_id]
        except KeyError:
            raise KeyError(f"unknown chunk_id {chunk_id!r}") from None

    def __len__(self) -> int:
        return len(self._chunks)

    def __iter__(self) -> Iterable[Chunk]:
        return iter(self._chunks.values())

    @classmethod
    def from_archive(cls, path: Path | str) -> "ChunkStore":
        return cls(read_chunk_archive(path))


def select_option(similarities: Sequence[float]) -> int:
    """Index of the largest similarity; ties go to the lowest index."""
    if len(similarities) == 0:
        raise ValueError("similarities must be non-empty")
    values = np.asarray(similarities, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("similarities must all be finite")
    return int(np.argmax(values))


_LABEL_TOKEN_RE = re.compile(r"(?<![A-Za-z0-9])\(?([A-D])\)?(?![A-Za-z0-9])")


def parse_label_token(text: str, labels: Sequence[str] = LABELS) -> str | None:
    """First standalone option letter in the text, or None.

    A letter counts when it is not glued to other letters or digits;
    surrounding parentheses or punctuation are fine.
    """
    valid = set(labels)
    for match in _LABEL_TOKEN_RE.finditer(text):
        if match.group(1) in valid:
            return match.group(1)
    return None


@dataclass
class PipelineConfig:
    n_retrieve: int = 20
    n_context: int = 5
    query_with_options: bool = True
    prompt_version: str = prompts.TEMPLATE_VERSION

    def __post_init__(self) -> None:
        if self.n_retrieve < 1 or self.n_context < 1:
            raise ValueError("n_retrieve and n_context must be positive")
        if self.n_context > self.n_retrieve:
            raise ValueError("n_context cannot exceed n_retrieve")


class RagPipeline:
    def __init__(
        self,
        index: VectorIndex,
        chunk_store: ChunkStore,
        embedder: Embedder,
        scorer: PairScorer,
        llm: LlmClient,
        config: PipelineConfig | None = None,
    ):
        self.index = index
        self.chunk_store = chunk_store
        self.embedder = embedder
        self.scorer = scorer
        self.llm = llm
        self.config = config or PipelineConfig()

    def retrieve(
        self,
        query: str,
        n_retrieve: int | None = None,
        n_context: int | None = None,
    ) -> list[ScoredPassage]:
        """Dense retrieval then rerank: the n_context best passages."""
        if not query.strip():
            raise ValueError("query must be non-empty")
        n_retrieve = n_retrieve or self.config.n_retrieve
        n_context = n_context or self.config.n_context
        query_vector = self.embedder.embed_text(query)
        hits = self.index.search(query_vector, n_retrieve)
        candidates = [
            ScoredPassage(
                chunk_id=hit.chunk_id,
                text=self.chunk_store.get(hit.chunk_id).text,
                retrieval_score=hit.score,
            )
            for hit in hits
        ]
        return rerank(query, candidates, n_context, self.scorer)

    def build_prompt(
        self,
        question: McqQuestion,
        contexts: list[ScoredPassage],
        mode: str,
    ) -> PromptBundle:
        if mode == prompts.MODE_LABELED:
            return PromptBundle(
                system=prompts.SYSTEM_LABELED,
                user=prompts.labeled_user_prompt(
                    question.stem, question.option_pairs(), contexts
                ),
            )
        if mode == prompts.MODE_FREEFORM:
            return PromptBundle(
                system=prompts.SYSTEM_FREEFORM,
                user=prompts.freeform_user_prompt(
                    question.stem, question.option_pairs(), contexts
                ),
            )
        raise ValueError(f"unknown mode {mode!r}")

    def extract_label(
        self, llm_text: str, question: McqQuestion
    ) -> tuple[str, list[float]]:
        """Map a free-text reply to an option by cosine similarity."""
        reply_vector = self.embedder.embed_text(llm_text)
        option_vectors = self.embedder.embed_batch(
            [o.text for o in question.options]
        )
        sims = [
            similarity(reply_vector, ov, Metric.COSINE)
            for ov in option_vectors
        ]
        choice = select_option(sims)
        return question.options[choice].label, sims

    def _mcq_query(self, question: McqQuestion) -> str:
        if self.config.query_with_options:
            texts = " ".join(o.text for o in question.options)
            return f"{question.stem} {texts}"
        return question.stem

    def answer_mcq(
        self,
        question: McqQuestion,
        mode: str = prompts.MODE_LABELED,
        use_rag: bool = True,
    ) -> RagAnswer:
        """Answer one question end to end."""
        if mode not in prompts.MODES:
            raise ValueError(f"unknown mode {mode!r}")
        contexts: list[ScoredPassage] = []
        if use_rag:
            contexts = self.retrieve(self._mcq_query(question))
        bundle = self.build_prompt(question, contexts, mode)
        llm_text = self.llm.complete(
            bundle.system, bundle.user, request_id=question.question_id
        )
        option_similarities: list[float] | None = None
        if mode == prompts.MODE_LABELED:
            parsed = parse_label_token(llm_text, question.labels)
            if parsed is not None:
                label, source = parsed, "parsed"
            else:
                label, option_similarities = self.extract_label(
                    llm_text, question
                )
                source = "similarity_fallback"
        else:
            label, option_similarities = self.extract_label(llm_text, question)
            source = "similarity"
        return RagAnswer(
            question_id=question.question_id,
            mode=mode,
            used_rag=use_rag,
            contexts=contexts,
            llm_text=llm_text,
            predicted_label=label,
            label_source=source,
            option_similarities=option_similarities,
        )

    def generate_reference(self, stem: str) -> Reference:
        """Write a study paragraph for a question stem.

        Retrieval sees only the stem, never the options. If the model
        call fails, the error still carries the retrieved contexts so a
        caller can show something.
        """
        if not stem.strip():
            raise ValueError("stem must be non-empty")
        contexts = self.retrieve(stem)
        user = prompts.reference_user_prompt(stem, contexts)
        try:
            text = self.llm.complete(prompts.SYSTEM_REFERENCE, user)
        except Exception as exc:
            raise ReferenceGenerationError(
                f"reference generation failed: {exc}", contexts
            ) from exc
        return Reference(
            text=text,
            cited_chunk_ids=[c.chunk_id for c in contexts],
        )
