// Per-question input state for the active stage. This is the only state
// the console keeps besides the session id in the URL hash; everything
// else is re-fetched from the server on reload.

export type Draft = {
  // Pretest: the chosen option label. Posttest: the typed answer text.
  value: string;
  skipped: boolean;
};

export type DraftSheet = Map<string, Draft>;

export function emptySheet(questionIds: string[]): DraftSheet {
  return new Map(questionIds.map((qid) => [qid, { value: "", skipped: false }]));
}

export function setValue(sheet: DraftSheet, qid: string, value: string): void {
  const draft = sheet.get(qid);
  if (!draft) return;
  draft.value = value;
  if (value.trim()) draft.skipped = false;
}

export function toggleSkip(sheet: DraftSheet, qid: string): void {
  const draft = sheet.get(qid);
  if (!draft) return;
  draft.skipped = !draft.skipped;
  if (draft.skipped) draft.value = "";
}

export function isAddressed(draft: Draft): boolean {
  return draft.skipped || draft.value.trim() !== "";
}

export function addressedCount(sheet: DraftSheet): number {
  let n = 0;
  for (const draft of sheet.values()) {
    if (isAddressed(draft)) n += 1;
  }
  return n;
}

/** Index of the first question the participant has not dealt with yet. */
export function currentIndex(sheet: DraftSheet, questionIds: string[]): number {
  for (let i = 0; i < questionIds.length; i++) {
    const draft = sheet.get(questionIds[i] ?? "");
    if (draft && !isAddressed(draft)) return i;
  }
  return questionIds.length;
}

/** Submit unlocks once every question is answered or explicitly skipped. */
export function canSubmit(sheet: DraftSheet): boolean {
  for (const draft of sheet.values()) {
    if (!isAddressed(draft)) return false;
  }
  return sheet.size > 0;
}

/** Responses payload: answered questions only, skipped ones are omitted. */
export function responsesPayload(sheet: DraftSheet): Record<string, string> {
  const responses: Record<string, string> = {};
  for (const [qid, draft] of sheet) {
    if (!draft.skipped && draft.value.trim()) {
      responses[qid] = draft.value;
    }
  }
  return responses;
}
