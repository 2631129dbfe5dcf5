"""Prompt templates, versioned so recorded runs stay comparable.

Two question modes exist. "labeled" shows lettered options and asks for
one letter back. "freeform_refined" strips the letters and asks for a
direct answer; the reply is mapped back to an option by embedding
similarity downstream. Retrieved passages always go in a fenced
reference block ahead of the question, each tagged with its chunk id.
"""

from __future__ import annotations

from .rerank import ScoredPassage

TEMPLATE_VERSION = "v1"

MODE_LABELED = "labeled"
MODE_FREEFORM = "freeform_refined"
MODES = (MODE_LABELED, MODE_FREEFORM)

REFERENCE_OPEN = "=== reference passages ==="
REFERENCE_CLOSE = "=== end of reference passages ==="

SYSTEM_LABELED = (
    "You answer multiple-choice questions. When reference passages are "
    "provided, ground your answer in them. Reply with exactly one option "
    "letter."
)

SYSTEM_FREEFORM = (
    "You answer questions directly and concisely. When reference passages "
    "are provided, ground your answer in them. Reply with the answer "
    "itself, not a letter or a number."
)

SYSTEM_REFERENCE = (
    "You write short study notes. Using only the reference passages, "
    "write one compact paragraph of background that would help someone "
    "answer the question. Do not answer the question itself."
)


def reference_block(contexts: list[ScoredPassage]) -> str:
    """Fence the retrieved passages, one per chunk id tag."""
    if not contexts:
        return ""
    lines = [REFERENCE_OPEN]
    for passage in contexts:
        lines.append(f"[{passage.chunk_id}]")
        lines.append(passage.text)
    lines.append(REFERENCE_CLOSE)
    return "\n".join(lines) + "\n\n"


def labeled_user_prompt(
    stem: str,
    options: list[tuple[str, str]],
    contexts: list[ScoredPassage],
) -> str:
    option_lines = "\n".join(f"({label}) {text}" for label, text in options)
    return (
        f"{reference_block(contexts)}"
        f"Question:\n{stem}\n\n"
        f"Options:\n{option_lines}\n\n"
        f"Answer with the single letter of the best option."
    )


def freeform_user_prompt(
    stem: str,
    options: list[tuple[str, str]],
    contexts: list[ScoredPassage],
) -> str:
    option_lines = "\n".join(f"- {text}" for _label, text in options)
    return (
        f"{reference_block(contexts)}"
        f"Question:\n{stem}\n\n"
        f"Candidate answers:\n{option_lines}\n\n"
        f"Answer the question directly with the correct candidate."
    )


def reference_user_prompt(stem: str, contexts: list[ScoredPassage]) -> str:
    return (
        f"{reference_block(contexts)}"
        f"Question:\n{stem}\n\n"
        f"Write one short paragraph of background reading for this question."
    )
