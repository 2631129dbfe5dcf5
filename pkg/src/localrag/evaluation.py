"""Dataset loading, accuracy evaluation, and score statistics.

The harness answers every question in a dataset through a pipeline and
writes a report that is complete enough to reproduce the run: per
question it keeps the prediction, the gold label, the exact prompts, the
context chunk ids, and any error. Two reports over the same dataset can
then be compared to measure what retrieval bought.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .pipeline import McqOption, McqQuestion, RagPipeline

QUIZ_LENGTH = 20
POINTS_PER_QUESTION = 5


class DatasetError(ValueError):
    """A dataset file that cannot be loaded, with the offending position."""


@dataclass
class EvalDataset:
    name: str
    questions: list[McqQuestion]

    def __post_init__(self) -> None:
        if not self.questions:
            raise DatasetError(f"dataset {self.name!r} has no questions")
        seen = set()
        for question in self.questions:
            if question.question_id in seen:
                raise DatasetError(
                    f"duplicate question_id {question.question_id!r}"
                )
            seen.add(question.question_id)
            if question.gold_label is None:
                raise DatasetError(
                    f"question {question.question_id!r} has no gold label"
                )

    def topics(self) -> list[str]:
        return sorted({q.topic for q in self.questions})

    def by_id(self) -> dict[str, McqQuestion]:
        return {q.question_id: q for q in self.questions}


def load_ttqa(path: Path | str, name: str | None = None) -> EvalDataset:
    """Load a JSONL dataset of lettered multiple-choice questions.

    Each line: {"id", "topic", "question", "options": [{"label", "text"}],
    "answer"}. Errors point at the line that broke.
    """
    path = Path(path)
    questions = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                questions.append(
                    McqQuestion(
                        question_id=str(record["id"]),
                        topic=str(record.get("topic", "")),
                        stem=record["question"],
                        options=[
                            McqOption(o["label"], o["text"])
                            for o in record["options"]
                        ],
                        gold_label=record["answer"],
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    if not questions:
        raise DatasetError(f"{path}: no questions found")
    return EvalDataset(name or path.stem, questions)


def convert_tmmluplus(path: Path | str, name: str | None = None) -> EvalDataset:
    """Load a CSV dataset with question, A..D, answer, subject columns."""
    path = Path(path)
    questions = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rowno, row in enumerate(reader, start=2):
            try:
                options = [
                    McqOption(label, row[label])
                    for label in ("A", "B", "C", "D")
                    if row.get(label)
                ]
                questions.append(
                    McqQuestion(
                        question_id=f"{path.stem}-{rowno - 1}",
                        topic=row.get("subject", ""),
                        stem=row["question"],
                        options=options,
                        gold_label=row["answer"].strip(),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{rowno}: {exc}") from exc
    if not questions:
        raise DatasetError(f"{path}: no questions found")
    return EvalDataset(name or path.stem, questions)


@dataclass
class EvalReport:
    """Everything one evaluation run produced."""

    dataset_name: str
    config: dict
    overall_accuracy: float
    per_topic_accuracy: dict[str, float]
    per_topic_counts: dict[str, int]
    per_question: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "config": self.config,
            "overall_accuracy": self.overall_accuracy,
            "per_topic_accuracy": self.per_topic_accuracy,
            "per_topic_counts": self.per_topic_counts,
            "per_question": self.per_question,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            dataset_name=data["dataset_name"],
            config=data["config"],
            overall_accuracy=data["overall_accuracy"],
            per_topic_accuracy=data["per_topic_accuracy"],
            per_topic_counts=data["per_topic_counts"],
            per_question=data["per_question"],
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path | str) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _evaluate_one(
    pipeline: RagPipeline,
    question: McqQuestion,
    mode: str,
    use_rag: bool,
) -> dict:
    row = {
        "question_id": question.question_id,
        "topic": question.topic,
        "gold_label": question.gold_label,
        "predicted_label": None,
        "correct": False,
        "label_source": None,
        "llm_text": None,
        "context_chunk_ids": [],
        "prompt_system": None,
        "prompt_user": None,
        "error": None,
    }
    try:
        answer = pipeline.answer_mcq(question, mode=mode, use_rag=use_rag)
        bundle = pipeline.build_prompt(question, answer.contexts, mode)
        row.update(
            predicted_label=answer.predicted_label,
            correct=answer.predicted_label == question.gold_label,
            label_source=answer.label_source,
            llm_text=answer.llm_text,
            context_chunk_ids=[c.chunk_id for c in answer.contexts],
            prompt_system=bundle.system,
            prompt_user=bundle.user,
        )
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def evaluate(
    dataset: EvalDataset,
    pipeline: RagPipeline,
    *,
    mode: str,
    use_rag: bool,
    max_workers: int = 1,
    config_extra: dict | None = None,
    out_path: Path | str | None = None,
) -> EvalReport:
    """Answer every question and aggregate accuracy.

    A question whose pipeline run raises is recorded with the error text
    and counted as incorrect; the run itself keeps going.
    """
    if max_workers < 1:
        raise ValueError("max_workers must be positive")
    questions = dataset.questions
    if max_workers == 1:
        rows = [
            _evaluate_one(pipeline, q, mode, use_rag) for q in questions
        ]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(
                pool.map(
                    lambda q: _evaluate_one(pipeline, q, mode, use_rag),
                    questions,
                )
            )

    correct_total = sum(1 for row in rows if row["correct"])
    topic_totals: Counter = Counter()
    topic_correct: Counter = Counter()
    for question, row in zip(questions, rows):
        topic_totals[question.topic] += 1
        if row["correct"]:
            topic_correct[question.topic] += 1

    config = {
        "mode": mode,
        "use_rag": use_rag,
        "n_retrieve": pipeline.config.n_retrieve,
        "n_context": pipeline.config.n_context,
        "prompt_version": pipeline.config.prompt_version,
    }
    if config_extra:
        config.update(config_extra)

    report = EvalReport(
        dataset_name=dataset.name,
        config=config,
        overall_accuracy=correct_total / len(questions),
        per_topic_accuracy={
            topic: topic_correct[topic] / total
            for topic, total in sorted(topic_totals.items())
        },
        per_topic_counts=dict(sorted(topic_totals.items())),
        per_question={row["question_id"]: row for row in rows},
    )
    if out_path is not None:
        report.save(out_path)
    return report


@dataclass
class ComparisonReport:
    """Accuracy deltas between two runs over the same dataset."""

    dataset_name: str
    baseline_config: dict
    contrast_config: dict
    overall_delta: float
    per_topic_delta: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "baseline_config": self.baseline_config,
            "contrast_config": self.contrast_config,
            "overall_delta": self.overall_delta,
            "per_topic_delta": self.per_topic_delta,
        }


def compare(baseline: EvalReport, contrast: EvalReport) -> ComparisonReport:
    """Contrast minus baseline, overall and per topic."""
    if baseline.dataset_name != contrast.dataset_name:
        raise ValueError(
            f"reports cover different datasets: {baseline.dataset_name!r} "
            f"vs {contrast.dataset_name!r}"
        )
    if set(baseline.per_question) != set(contrast.per_question):
        raise ValueError("reports cover different question sets")
    return ComparisonReport(
        dataset_name=baseline.dataset_name,
        baseline_config=baseline.config,
        contrast_config=contrast.config,
        overall_delta=contrast.overall_accuracy - baseline.overall_accuracy,
        per_topic_delta={
            topic: contrast.per_topic_accuracy[topic]
            - baseline.per_topic_accuracy[topic]
            for topic in sorted(baseline.per_topic_accuracy)
        },
    )


@dataclass
class ScoreStats:
    """Descriptive statistics over a list of scores."""

    n: int
    mean: float
    variance: float
    std: float
    median: float
    mode: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            "median": self.median,
            "mode": self.mode,
        }


def score_stats(scores: Sequence[float]) -> ScoreStats:
    """Mean, population variance and std, median, and mode.

    The median of an even-length list is the mean of the two middle
    values. The mode is the most frequent value; frequency ties go to
    the smallest value.
    """
    if len(scores) == 0:
        raise ValueError("scores must be non-empty")
    values = [float(s) for s in scores]
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    ordered = sorted(values)
    if n % 2 == 1:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    counts = Counter(values)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return ScoreStats(
        n=n,
        mean=mean,
        variance=variance,
        std=variance**0.5,
        median=median,
        mode=mode,
    )


def quiz_score(
    responses: Mapping[str, str],
    answer_key: Mapping[str, str],
) -> int:
    """Points for one quiz sitting: 5 per correct answer out of 20.

    The key must hold exactly 20 questions. Unanswered questions score
    nothing; answers to questions outside the key are an error.
    """
    if len(answer_key) != QUIZ_LENGTH:
        raise ValueError(
            f"answer key must have exactly {QUIZ_LENGTH} entries, "
            f"got {len(answer_key)}"
        )
    unknown = set(responses) - set(answer_key)
    if unknown:
        raise ValueError(f"responses for unknown questions: {sorted(unknown)}")
    correct = sum(
        1 for qid, gold in answer_key.items() if responses.get(qid) == gold
    )
    return POINTS_PER_QUESTION * correct
