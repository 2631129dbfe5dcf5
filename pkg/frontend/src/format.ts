// Small presentation helpers. Scores are rendered exactly as the server
// returned them; the client never grades or recomputes anything.

export function scoreBanner(score: number, maxScore: number): string {
  return `${score} / ${maxScore}`;
}

export function optionLine(label: string, text: string): string {
  return `(${label}) ${text}`;
}

export function stageTitle(stage: string): string {
  switch (stage) {
    case "pretest":
      return "Stage 1 of 2: answer on your own";
    case "posttest":
      return "Stage 2 of 2: answer with the reference material";
    case "completed":
      return "Session complete";
    default:
      return stage;
  }
}

export function progressLine(addressed: number, total: number): string {
  return `${addressed} of ${total} answered`;
}
