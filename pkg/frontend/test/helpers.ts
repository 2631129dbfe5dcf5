// Shared wiring for the DOM tests: a console instance over the mock
// server plus small event-dispatching helpers.

import { QuizApi } from "../src/api.js";
import { ConsoleApp } from "../src/app.js";
import { buildPool, MockQuizServer } from "./mock_server.js";
import type { PoolQuestion } from "./mock_server.js";

export type Harness = {
  server: MockQuizServer;
  root: HTMLElement;
  app: ConsoleApp;
  pool: PoolQuestion[];
};

export function setup(poolSize = 30): Harness {
  const pool = buildPool(poolSize);
  const server = new MockQuizServer(pool);
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.append(root);
  window.location.hash = "";
  const api = new QuizApi("http://mock.test", server.fetch);
  const app = new ConsoleApp({ root, win: window, api });
  return { server, root, app, pool };
}

export function text(root: HTMLElement): string {
  return root.textContent ?? "";
}

export function questionIds(root: HTMLElement): string[] {
  return [...root.querySelectorAll<HTMLElement>(".question")].map(
    (block) => block.dataset.qid ?? "",
  );
}

export function block(root: HTMLElement, qid: string): HTMLElement {
  const node = root.querySelector<HTMLElement>(`.question[data-qid="${qid}"]`);
  if (!node) throw new Error(`no question block for ${qid}`);
  return node;
}

export function choose(root: HTMLElement, qid: string, label: string): void {
  const radio = block(root, qid).querySelector<HTMLInputElement>(
    `input[value="${label}"]`,
  );
  if (!radio) throw new Error(`no option ${label} for ${qid}`);
  radio.checked = true;
  radio.dispatchEvent(new Event("change", { bubbles: true }));
}

export function typeAnswer(root: HTMLElement, qid: string, value: string): void {
  const area = block(root, qid).querySelector<HTMLTextAreaElement>(".answer-text");
  if (!area) throw new Error(`no answer box for ${qid}`);
  area.value = value;
  area.dispatchEvent(new Event("input", { bubbles: true }));
}

export function toggleSkipBox(root: HTMLElement, qid: string): void {
  const box = block(root, qid).querySelector<HTMLInputElement>(".skip-toggle");
  if (!box) throw new Error(`no skip toggle for ${qid}`);
  box.checked = !box.checked;
  box.dispatchEvent(new Event("change", { bubbles: true }));
}

export function submitButton(root: HTMLElement): HTMLButtonElement {
  const button = root.querySelector<HTMLButtonElement>(".submit-button");
  if (!button) throw new Error("no submit button in view");
  return button;
}

export function clickIfEnabled(button: HTMLButtonElement): void {
  if (button.disabled) throw new Error(`button '${button.textContent}' is disabled`);
  button.click();
}

export function setInput(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function submitForm(form: HTMLFormElement): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function query<T extends Element>(root: HTMLElement, selector: string): T {
  const node = root.querySelector<T>(selector);
  if (!node) throw new Error(`selector matched nothing: ${selector}`);
  return node;
}
