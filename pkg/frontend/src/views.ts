import type {
  CompletedPayload,
  LessonPayload,
  ProgressPayload,
  QuestionnairePayload,
  ResultPayload,
  TestPayload,
} from "./types.js";
import { STYLE_LABELS } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

/** Banner shown whenever a payload fell back to its source language. */
export function untranslatedNotice(): HTMLElement {
  const notice = el("div", "notice notice-untranslated");
  notice.setAttribute("data-role", "untranslated-notice");
  notice.textContent =
    "Translation to your language is unavailable right now; showing the original text.";
  return notice;
}

export function questionnaireView(
  payload: QuestionnairePayload,
  onSubmit: (responses: Record<string, number>) => void,
): HTMLElement {
  const root = el("section", "screen screen-questionnaire");
  if (payload.untranslated) root.append(untranslatedNotice());
  root.append(el("h2", "", "How do you like to learn?"));
  root.append(
    el("p", "hint", "Rate each statement from 1 (not me at all) to 5 (exactly me)."),
  );
  const form = el("form");
  for (const item of payload.items) {
    const row = el("fieldset", "likert-row");
    row.setAttribute("data-item-id", item.item_id);
    row.append(el("legend", "", item.prompt));
    for (let value = 1; value <= 5; value++) {
      const label = el("label", "likert-choice");
      const input = el("input");
      input.type = "radio";
      input.name = item.item_id;
      input.value = String(value);
      label.append(input, document.createTextNode(String(value)));
      row.append(label);
    }
    form.append(row);
  }
  const submit = el("button", "primary", "Save my profile");
  submit.type = "submit";
  form.append(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const responses: Record<string, number> = {};
    for (const item of payload.items) {
      const picked = form.querySelector<HTMLInputElement>(
        `input[name="${item.item_id}"]:checked`,
      );
      if (picked) responses[item.item_id] = Number(picked.value);
    }
    onSubmit(responses);
  });
  root.append(form);
  return root;
}

export function testView(
  payload: TestPayload,
  onSubmit: (answers: Record<string, number>) => void,
): HTMLElement {
  const root = el("section", `screen screen-test phase-${payload.phase}`);
  if (payload.untranslated) root.append(untranslatedNotice());
  const heading = payload.phase === "pre_test" ? "Before the lesson" : "Show what you learned";
  root.append(el("h2", "", `${heading}: ${payload.concept_title}`));
  if (payload.seen_reset) {
    const notice = el("div", "notice", "You have seen every question once; some will repeat.");
    notice.setAttribute("data-role", "seen-reset-notice");
    root.append(notice);
  }
  const form = el("form");
  form.setAttribute("data-test-id", payload.test_id);
  payload.questions.forEach((question, index) => {
    const block = el("fieldset", "question");
    block.setAttribute("data-question-id", question.question_id);
    block.append(el("legend", "", `${index + 1}. ${question.stem}`));
    question.choices.forEach((choice, choiceIndex) => {
      const label = el("label", "choice");
      const input = el("input");
      input.type = "radio";
      input.name = question.question_id;
      input.value = String(choiceIndex);
      label.append(input, document.createTextNode(choice));
      block.append(label);
    });
    form.append(block);
  });
  const submit = el("button", "primary", "Submit answers");
  submit.type = "submit";
  form.append(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const answers: Record<string, number> = {};
    for (const question of payload.questions) {
      const picked = form.querySelector<HTMLInputElement>(
        `input[name="${question.question_id}"]:checked`,
      );
      if (picked) answers[question.question_id] = Number(picked.value);
    }
    onSubmit(answers);
  });
  root.append(form);
  return root;
}

export function lessonView(
  payload: LessonPayload,
  onSubmitPostTest: (testId: string, answers: Record<string, number>) => void,
): HTMLElement {
  const root = el("section", "screen screen-lesson");
  if (payload.untranslated) root.append(untranslatedNotice());
  root.append(el("h2", "", payload.concept_title));
  const style = el("p", "style-label", `Taught in your style: ${STYLE_LABELS[payload.style]}`);
  style.setAttribute("data-role", "style-label");
  style.setAttribute("data-style", payload.style);
  root.append(style);
  const body = el("article", "lesson-body");
  for (const block of payload.blocks) {
    body.append(el("p", "", block));
  }
  root.append(body);
  if (payload.post_test) {
    const test = payload.post_test;
    root.append(testView(test, (answers) => onSubmitPostTest(test.test_id, answers)));
  }
  return root;
}

export function resultView(payload: ResultPayload, onContinue: () => void): HTMLElement {
  const root = el("section", "screen screen-result");
  root.append(el("h2", "", payload.phase === "pre_test" ? "Pre-test results" : "Post-test results"));
  const scores = el("dl", "scores");
  const rows: [string, string, number, string][] = [
    ["total", "Total", payload.total_score, payload.level],
    ["conceptual", "Concepts", payload.conceptual_score, payload.conceptual_level],
    ["objective", "Details", payload.objective_score, payload.objective_level],
  ];
  for (const [role, label, score, level] of rows) {
    scores.append(el("dt", "", label));
    const value = el("dd", "", `${score}`);
    value.setAttribute("data-role", `${role}-score`);
    scores.append(value);
    const band = el("dd", "band", level.replace("_", " "));
    band.setAttribute("data-role", `${role}-level`);
    scores.append(band);
  }
  root.append(scores);
  if (payload.decision) {
    const banner = el(
      "div",
      `decision decision-${payload.decision}`,
      payload.decision === "advance"
        ? "Concept mastered. On to the next one!"
        : `Not quite there yet (attempt ${payload.attempts}). The lesson comes next from a different angle.`,
    );
    banner.setAttribute("data-role", "decision");
    banner.setAttribute("data-decision", payload.decision);
    root.append(banner);
  }
  const button = el("button", "primary", "Continue");
  button.addEventListener("click", onContinue);
  root.append(button);
  return root;
}

export function progressView(payload: ProgressPayload): HTMLElement {
  const root = el("aside", "progress-panel");
  root.append(el("h3", "", "Progress"));
  const summary = el(
    "p",
    "",
    `${payload.mastered_count} of ${payload.concepts.length} concepts mastered`,
  );
  summary.setAttribute("data-role", "mastered-count");
  summary.setAttribute("data-count", String(payload.mastered_count));
  root.append(summary);
  if (payload.style) {
    root.append(
      el("p", "style-label", `Your style: ${STYLE_LABELS[payload.style.dominant]}`),
    );
  }
  const table = el("table", "progress-table");
  const head = el("tr");
  for (const caption of ["Concept", "Status", "Attempts"]) {
    head.append(el("th", "", caption));
  }
  table.append(head);
  for (const concept of payload.concepts) {
    const row = el("tr", `status-${concept.status}`);
    row.setAttribute("data-concept-id", concept.concept_id);
    row.append(el("td", "", concept.concept_id));
    row.append(el("td", "", concept.status.replace("_", " ")));
    row.append(el("td", "", String(concept.attempts)));
    table.append(row);
  }
  root.append(table);
  return root;
}

export function completedView(payload: CompletedPayload): HTMLElement {
  const root = el("section", "screen screen-completed");
  root.append(el("h2", "", "Course complete!"));
  root.append(
    el("p", "", `You mastered all ${payload.concepts_mastered.length} concepts.`),
  );
  const list = el("ul");
  for (const conceptId of payload.concepts_mastered) {
    list.append(el("li", "", conceptId));
  }
  root.append(list);
  return root;
}

export function errorView(message: string, retryable: boolean): HTMLElement {
  const root = el("div", "notice notice-error");
  root.setAttribute("data-role", "error");
  root.textContent = retryable ? `${message} (you can retry)` : message;
  return root;
}
