// Single-page controller. The URL hash carries the session id and
// nothing else; every view is rebuilt from server responses, so a page
// reload lands on exactly the same content. Scores are rendered as
// returned and never computed here.

import { ApiError, QuizApi } from "./api.js";
import { emptySheet, responsesPayload, setValue, toggleSkip } from "./state.js";
import type { DraftSheet } from "./state.js";
import type { PosttestQuestion, SessionSnapshot } from "./types.js";
import * as views from "./views.js";

export type Route =
  | { kind: "start" }
  | { kind: "query" }
  | { kind: "session"; sessionId: string };

export function parseHash(hash: string): Route {
  const path = hash.replace(/^#/, "");
  const match = /^\/session\/([^/]+)$/.exec(path);
  if (match?.[1]) return { kind: "session", sessionId: match[1] };
  if (path === "/query") return { kind: "query" };
  return { kind: "start" };
}

export type ConsoleOptions = {
  root: HTMLElement;
  win: Window;
  api: QuizApi;
};

export class ConsoleApp {
  private readonly root: HTMLElement;
  private readonly win: Window;
  private readonly api: QuizApi;

  // UI work runs strictly one task at a time on this chain.
  private chain: Promise<void> = Promise.resolve();
  private renderedHash: string | null = null;
  private session: SessionSnapshot | null = null;
  private sheet: DraftSheet = new Map();
  private posttestQuestions: PosttestQuestion[] = [];

  constructor(options: ConsoleOptions) {
    this.root = options.root;
    this.win = options.win;
    this.api = options.api;
  }

  start(): Promise<void> {
    this.win.addEventListener("hashchange", () => {
      void this.schedule(() => {
        // Skip the echo of a hash this app just set itself.
        if (this.win.location.hash === this.renderedHash) {
          return Promise.resolve();
        }
        return this.navigate();
      });
    });
    return this.schedule(() => this.navigate());
  }

  /** Resolves once every scheduled task has settled. Used by tests. */
  idle(): Promise<void> {
    return this.chain;
  }

  private schedule(work: () => Promise<void>): Promise<void> {
    const next = this.chain
      .then(work)
      .catch((error: unknown) => this.handleFailure(error));
    this.chain = next;
    return next;
  }

  private handleFailure(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    if (error instanceof ApiError && error.status === 409) {
      views.showDialog(
        this.root,
        "Session is out of step",
        message,
        "Reload the session",
        () => {
          void this.schedule(() => this.navigate());
        },
      );
      return;
    }
    views.renderFatal(this.root, message, () => {
      void this.schedule(() => this.navigate());
    });
  }

  private async navigate(): Promise<void> {
    const hash = this.win.location.hash;
    this.renderedHash = hash;
    const route = parseHash(hash);
    if (route.kind === "start") {
      views.renderStart(this.root, {
        onCreate: (participantId) => {
          void this.schedule(() => this.createSession(participantId));
        },
      });
      return;
    }
    if (route.kind === "query") {
      views.renderQueryPanel(this.root, {
        onRun: (text, k) => {
          void this.schedule(() => this.runQuery(text, k));
        },
      });
      return;
    }
    await this.loadSession(route.sessionId);
  }

  private async createSession(participantId: string): Promise<void> {
    const session = await this.api.createSession(participantId);
    this.win.location.hash = `#/session/${session.session_id}`;
    await this.navigate();
  }

  private async loadSession(sessionId: string): Promise<void> {
    views.renderLoading(this.root, "Loading the session");
    const session = await this.api.getSession(sessionId);
    this.session = session;
    if (session.stage === "completed") {
      const results = await this.api.getResults(sessionId);
      views.renderResults(this.root, results);
      return;
    }
    const payload = await this.api.getQuestions(sessionId);
    this.sheet = emptySheet(payload.questions.map((q) => q.question_id));
    if (payload.stage === "pretest") {
      views.renderPretest(this.root, payload.questions, this.sheet, this.quizHandlers());
    } else {
      this.posttestQuestions = payload.questions;
      views.renderPosttest(this.root, payload.questions, this.sheet, this.quizHandlers());
    }
  }

  private quizHandlers(): views.QuizHandlers {
    return {
      onChoose: (qid, label) => {
        setValue(this.sheet, qid, label);
        this.syncControls();
      },
      onType: (qid, text) => {
        setValue(this.sheet, qid, text);
        this.syncControls();
      },
      onSkip: (qid) => {
        toggleSkip(this.sheet, qid);
        this.syncControls();
      },
      onSubmit: () => {
        void this.schedule(() => this.submitStage());
      },
      onRetryReference: (qid) => {
        void this.schedule(() => this.retryReference(qid));
      },
    };
  }

  private syncControls(): void {
    views.syncQuizControls(this.root, this.sheet, [...this.sheet.keys()]);
  }

  private async submitStage(): Promise<void> {
    const session = this.session;
    if (!session || session.stage === "completed") return;
    const result = await this.api.submitResponses(
      session.session_id,
      session.stage,
      responsesPayload(this.sheet),
    );
    this.session = { ...session, stage: result.next_stage };
    views.renderScore(this.root, result, () => {
      void this.schedule(() => this.navigate());
    });
  }

  private async retryReference(qid: string): Promise<void> {
    const session = this.session;
    if (!session) return;
    const slot = this.root.querySelector<HTMLElement>(
      `.question[data-qid="${qid}"] .reference-slot`,
    );
    if (!slot) return;
    try {
      const payload = await this.api.getReference(session.session_id, qid);
      const entry = this.posttestQuestions.find((q) => q.question_id === qid);
      if (entry) entry.reference = payload.reference;
      views.fillReferenceSlot(slot, qid, payload.reference, this.quizHandlers());
    } catch (error) {
      // The question stays answerable; only the reference area changes.
      const message = error instanceof Error ? error.message : String(error);
      views.fillReferenceSlot(
        slot,
        qid,
        null,
        this.quizHandlers(),
        `The reference could not be loaded (${message}).`,
      );
    }
  }

  private async runQuery(text: string, k: number): Promise<void> {
    try {
      const { hits } = await this.api.query(text, k);
      views.renderHits(this.root, hits);
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      views.renderQueryError(this.root, message);
    }
  }
}
