import { QuizApi } from "./api.js";
import { ConsoleApp } from "./app.js";

// The API origin comes from <meta name="api-base">; empty means same origin.
const root = document.getElementById("app");
const base =
  document.querySelector<HTMLMetaElement>('meta[name="api-base"]')?.content ?? "";

if (root) {
  const app = new ConsoleApp({ root, win: window, api: new QuizApi(base) });
  void app.start();
}
