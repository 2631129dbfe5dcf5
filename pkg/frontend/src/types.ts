// Wire types for the quiz service JSON API. Field names match the
// server payloads byte for byte; nothing here is derived client-side.

export type Stage = "pretest" | "posttest" | "completed";

export type SessionSnapshot = {
  session_id: string;
  participant_id: string;
  seed: number;
  stage: Stage;
  question_ids: string[];
  scores: { pretest: number | null; posttest: number | null };
};

export type McqOption = {
  label: string;
  text: string;
};

export type PretestQuestion = {
  question_id: string;
  stem: string;
  options: McqOption[];
};

export type Reference = {
  text: string;
  cited_chunk_ids: string[];
};

export type PosttestQuestion = {
  question_id: string;
  stem: string;
  // The server inlines references; null marks one the client still has
  // to fetch (or re-fetch after a failure).
  reference: Reference | null;
};

export type QuestionsPayload =
  | { stage: "pretest"; questions: PretestQuestion[] }
  | { stage: "posttest" | "completed"; questions: PosttestQuestion[] };

export type SubmitResult = {
  session_id: string;
  stage: Stage;
  score: number;
  correct_count: number;
  max_score: number;
  next_stage: Stage;
};

export type StageRecord = {
  responses: Record<string, string>;
  predicted: Record<string, string>;
  score: number;
  submitted_at: number;
};

export type SessionResults = {
  session_id: string;
  participant_id: string;
  stage: Stage;
  scores: { pretest: number | null; posttest: number | null };
  pretest: StageRecord | null;
  posttest: StageRecord | null;
};

export type QueryHit = {
  chunk_id: string;
  text: string;
  retrieval_score: number;
  rerank_score: number;
};

export type ErrorEnvelope = {
  error: { code: string; message: string; [key: string]: unknown };
};
