// DOM builders for every screen. Everything goes through createElement
// and textContent, so server text is never interpreted as markup.

import { optionLine, progressLine, scoreBanner, stageTitle } from "./format.js";
import { addressedCount, canSubmit, currentIndex } from "./state.js";
import type { DraftSheet } from "./state.js";
import type {
  PosttestQuestion,
  PretestQuestion,
  QueryHit,
  Reference,
  SessionResults,
  SubmitResult,
} from "./types.js";

export type QuizHandlers = {
  onChoose: (qid: string, label: string) => void;
  onType: (qid: string, text: string) => void;
  onSkip: (qid: string) => void;
  onSubmit: () => void;
  onRetryReference: (qid: string) => void;
};

export type StartHandlers = {
  onCreate: (participantId: string) => void;
};

export type QueryHandlers = {
  onRun: (text: string, k: number) => void;
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function clear(node: HTMLElement): void {
  node.textContent = "";
}

export function renderLoading(root: HTMLElement, message = "Loading"): void {
  clear(root);
  root.append(el("p", "loading", message));
}

export function renderStart(root: HTMLElement, handlers: StartHandlers): void {
  clear(root);
  const view = el("section", "start-view");
  view.append(el("h1", "", "Quiz console"));

  const form = el("form", "start-form");
  const label = el("label", "", "Participant id ");
  const input = el("input", "participant-input");
  input.type = "text";
  label.append(input);

  const button = el("button", "start-button", "Start a session");
  button.type = "submit";
  button.disabled = true;
  input.addEventListener("input", () => {
    button.disabled = input.value.trim() === "";
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const participantId = input.value.trim();
    if (participantId) handlers.onCreate(participantId);
  });
  form.append(label, button);

  const panelLink = el("p", "panel-link");
  const link = el("a", "query-link", "Open the retrieval query panel");
  link.href = "#/query";
  panelLink.append(link);

  view.append(form, panelLink);
  root.append(view);
}

function buildSkipRow(qid: string, handlers: QuizHandlers): HTMLElement {
  const row = el("label", "skip-row");
  const box = el("input", "skip-toggle");
  box.type = "checkbox";
  box.addEventListener("change", () => handlers.onSkip(qid));
  row.append(box, el("span", "", " Skip this question"));
  return row;
}

function buildSubmitRow(handlers: QuizHandlers): HTMLElement {
  const row = el("footer", "submit-row");
  row.append(el("p", "progress"));
  const button = el("button", "submit-button", "Submit answers");
  button.type = "button";
  button.disabled = true;
  button.addEventListener("click", () => handlers.onSubmit());
  row.append(button);
  return row;
}

export function renderPretest(
  root: HTMLElement,
  questions: PretestQuestion[],
  sheet: DraftSheet,
  handlers: QuizHandlers,
): void {
  clear(root);
  const view = el("section", "quiz-view pretest-view");
  view.append(el("h1", "", stageTitle("pretest")));

  questions.forEach((question, i) => {
    const block = el("section", "question");
    block.dataset.qid = question.question_id;
    block.append(el("h3", "", `Question ${i + 1}`));
    block.append(el("p", "stem", question.stem));

    const options = el("div", "options");
    for (const option of question.options) {
      const optionLabel = el("label", "option");
      const radio = el("input");
      radio.type = "radio";
      radio.name = `choice-${question.question_id}`;
      radio.setAttribute("value", option.label);
      radio.addEventListener("change", () => {
        if (radio.checked) handlers.onChoose(question.question_id, option.label);
      });
      optionLabel.append(
        radio,
        el("span", "", ` ${optionLine(option.label, option.text)}`),
      );
      options.append(optionLabel);
    }
    block.append(options);
    block.append(buildSkipRow(question.question_id, handlers));
    view.append(block);
  });

  view.append(buildSubmitRow(handlers));
  root.append(view);
  syncQuizControls(root, sheet, questions.map((q) => q.question_id));
}

export function renderPosttest(
  root: HTMLElement,
  questions: PosttestQuestion[],
  sheet: DraftSheet,
  handlers: QuizHandlers,
): void {
  clear(root);
  const view = el("section", "quiz-view posttest-view");
  view.append(el("h1", "", stageTitle("posttest")));

  questions.forEach((question, i) => {
    const block = el("section", "question");
    block.dataset.qid = question.question_id;
    block.append(el("h3", "", `Question ${i + 1}`));
    block.append(el("p", "stem", question.stem));

    const slot = el("div", "reference-slot");
    fillReferenceSlot(slot, question.question_id, question.reference, handlers);
    block.append(slot);

    const answer = el("textarea", "answer-text");
    answer.rows = 2;
    answer.placeholder = "Type your answer";
    answer.addEventListener("input", () => {
      handlers.onType(question.question_id, answer.value);
    });
    block.append(answer);
    block.append(buildSkipRow(question.question_id, handlers));
    view.append(block);
  });

  view.append(buildSubmitRow(handlers));
  root.append(view);
  syncQuizControls(root, sheet, questions.map((q) => q.question_id));
}

/**
 * Fill a question's reference area. A missing reference gets a retry
 * button instead; the answer box next to it stays usable either way.
 */
export function fillReferenceSlot(
  slot: HTMLElement,
  qid: string,
  reference: Reference | null,
  handlers: QuizHandlers,
  errorMessage?: string,
): void {
  clear(slot);
  if (reference) {
    slot.append(el("blockquote", "reference", reference.text));
    if (reference.cited_chunk_ids.length > 0) {
      slot.append(
        el("p", "citations", `Sources: ${reference.cited_chunk_ids.join(", ")}`),
      );
    }
    return;
  }
  slot.append(
    el(
      "p",
      "reference-error",
      errorMessage ?? "Reference material is not loaded yet.",
    ),
  );
  const retry = el("button", "retry-reference", "Retry loading the reference");
  retry.type = "button";
  retry.addEventListener("click", () => handlers.onRetryReference(qid));
  slot.append(retry);
}

/** Refresh skip visuals, the progress line, and the submit gate in place. */
export function syncQuizControls(
  root: HTMLElement,
  sheet: DraftSheet,
  questionIds: string[],
): void {
  const active = currentIndex(sheet, questionIds);
  questionIds.forEach((qid, i) => {
    const block = root.querySelector<HTMLElement>(
      `.question[data-qid="${qid}"]`,
    );
    const draft = sheet.get(qid);
    if (!block || !draft) return;
    block.classList.toggle("skipped", draft.skipped);
    block.classList.toggle("current", i === active);
    const skipBox = block.querySelector<HTMLInputElement>(".skip-toggle");
    if (skipBox) skipBox.checked = draft.skipped;
    for (const radio of block.querySelectorAll<HTMLInputElement>(
      'input[type="radio"]',
    )) {
      radio.disabled = draft.skipped;
      if (draft.skipped) radio.checked = false;
    }
    const answer = block.querySelector<HTMLTextAreaElement>(".answer-text");
    if (answer) answer.disabled = draft.skipped;
  });

  const progress = root.querySelector<HTMLElement>(".progress");
  if (progress) {
    progress.textContent = progressLine(addressedCount(sheet), sheet.size);
  }
  const submit = root.querySelector<HTMLButtonElement>(".submit-button");
  if (submit) submit.disabled = !canSubmit(sheet);
}

export function renderScore(
  root: HTMLElement,
  result: SubmitResult,
  onContinue: () => void,
): void {
  clear(root);
  const view = el("section", "score-view");
  view.append(el("h1", "", "Answers submitted"));
  view.append(el("p", "score-banner", scoreBanner(result.score, result.max_score)));
  view.append(el("p", "score-detail", `Correct answers: ${result.correct_count}`));
  const next = el(
    "button",
    "continue-button",
    result.next_stage === "posttest" ? "Continue to stage 2" : "View results",
  );
  next.type = "button";
  next.addEventListener("click", onContinue);
  view.append(next);
  root.append(view);
}

export function renderResults(root: HTMLElement, results: SessionResults): void {
  clear(root);
  const view = el("section", "results-view");
  view.append(el("h1", "", stageTitle("completed")));
  view.append(el("p", "participant", `Participant: ${results.participant_id}`));

  const list = el("dl", "score-list");
  const rows: [string, string, number | null][] = [
    ["score-pretest", "Stage 1, own knowledge", results.scores.pretest],
    ["score-posttest", "Stage 2, with reference material", results.scores.posttest],
  ];
  for (const [cls, caption, score] of rows) {
    list.append(el("dt", "", caption));
    list.append(el("dd", cls, score === null ? "not submitted" : String(score)));
  }
  view.append(list);
  root.append(view);
}

export function renderQueryPanel(
  root: HTMLElement,
  handlers: QueryHandlers,
): void {
  clear(root);
  const view = el("section", "query-view");
  view.append(el("h1", "", "Retrieval query panel"));

  const form = el("form", "query-form");
  const input = el("input", "query-input");
  input.type = "text";
  input.placeholder = "Search the indexed corpus";

  const kRow = el("label", "k-row", "Passages to show: ");
  const kValue = el("span", "k-value", "5");
  const slider = el("input", "k-slider");
  slider.type = "range";
  slider.min = "1";
  slider.max = "20";
  slider.value = "5";
  slider.addEventListener("input", () => {
    kValue.textContent = slider.value;
  });
  kRow.append(kValue, slider);

  const run = el("button", "run-query", "Search");
  run.type = "submit";
  run.disabled = true;
  input.addEventListener("input", () => {
    run.disabled = input.value.trim() === "";
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text) handlers.onRun(text, Number(slider.value));
  });
  form.append(input, kRow, run);

  view.append(form);
  view.append(el("p", "query-status"));
  view.append(el("ol", "hits"));
  root.append(view);
}

/** Hits are shown in payload order; the server already ranked them. */
export function renderHits(root: HTMLElement, hits: QueryHit[]): void {
  const status = root.querySelector<HTMLElement>(".query-status");
  const list = root.querySelector<HTMLElement>(".hits");
  if (!status || !list) return;
  status.classList.remove("query-error");
  status.textContent = hits.length > 0 ? `${hits.length} passages` : "No passages matched.";
  clear(list);
  for (const hit of hits) {
    const item = el("li", "hit");
    const head = el("p", "hit-head", hit.chunk_id);
    head.append(
      el(
        "span",
        "hit-scores",
        ` rerank ${hit.rerank_score.toFixed(4)}, retrieval ${hit.retrieval_score.toFixed(4)}`,
      ),
    );
    item.append(head, el("p", "hit-text", hit.text));
    list.append(item);
  }
}

export function renderQueryError(root: HTMLElement, message: string): void {
  const status = root.querySelector<HTMLElement>(".query-status");
  if (!status) return;
  status.classList.add("query-error");
  status.textContent = message;
}

/** Modal that blocks the view behind it until its action is taken. */
export function showDialog(
  root: HTMLElement,
  title: string,
  message: string,
  actionLabel: string,
  onAction: () => void,
): void {
  root.querySelector(".dialog-backdrop")?.remove();
  const backdrop = el("div", "dialog-backdrop");
  const dialog = el("div", "dialog");
  dialog.setAttribute("role", "alertdialog");
  dialog.append(el("h2", "dialog-title", title));
  dialog.append(el("p", "dialog-message", message));
  const action = el("button", "dialog-action", actionLabel);
  action.type = "button";
  action.addEventListener("click", () => {
    backdrop.remove();
    onAction();
  });
  dialog.append(action);
  backdrop.append(dialog);
  root.append(backdrop);
}

export function renderFatal(
  root: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  clear(root);
  const view = el("section", "fatal-view");
  view.append(el("h1", "", "Something went wrong"));
  view.append(el("p", "fatal-message", message));
  const retry = el("button", "retry-button", "Try again");
  retry.type = "button";
  retry.addEventListener("click", onRetry);
  view.append(retry);
  root.append(view);
}
