import { beforeEach, describe, expect, it } from "vitest";

import { App, type TutorApi } from "../src/app.js";
import { ApiError } from "../src/api.js";
import type {
  ProgressPayload,
  QuestionnairePayload,
  ResultPayload,
  StepPayload,
} from "../src/types.js";

const questionnaire: QuestionnairePayload = {
  kind: "questionnaire",
  untranslated: false,
  items: [{ item_id: "i-1", prompt: "I plan ahead." }],
};

const progress: ProgressPayload = {
  kind: "progress",
  learner_id: "l-1",
  language: "en",
  phase: "NeedsProfile",
  style: null,
  concepts: [],
  mastered_count: 0,
  completed: false,
};

const result: ResultPayload = {
  kind: "result",
  test_id: "t-1",
  correctness: {},
  total_score: 100,
  conceptual_score: 100,
  objective_score: 100,
  level: "excellent",
  conceptual_level: "excellent",
  objective_level: "excellent",
  concept_id: "c1",
  phase: "pre_test",
  session_phase: "InLesson",
};

function stubApi(overrides: Partial<TutorApi> = {}): TutorApi {
  return {
    register: async () => ({ learner_id: "l-1" }),
    login: async () => "tok",
    questionnaire: async () => questionnaire,
    submitQuestionnaire: async () => ({
      kind: "style_summary",
      scores: { SS: 5, GOA: 5, EIA: 5, CA: 5, DLA: 25 },
      dominant: "DLA",
    }),
    next: async (): Promise<StepPayload> => questionnaire,
    submitTest: async () => result,
    progress: async () => progress,
    ...overrides,
  };
}

describe("App", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById("root")!;
  });

  it("starts on the auth screen", () => {
    new App(root, stubApi()).start();
    expect(root.querySelector('[data-role="auth-form"]')).not.toBeNull();
  });

  it("renders the current step plus progress after sign-in", async () => {
    const app = new App(root, stubApi());
    await app.signIn("sam", "pw");
    expect(root.querySelector(".screen-questionnaire")).not.toBeNull();
    expect(root.querySelector(".progress-panel")).not.toBeNull();
  });

  it("shows the result screen after a submission", async () => {
    const app = new App(root, stubApi());
    await app.submitTest("t-1", { q: 0 });
    expect(root.querySelector(".screen-result")).not.toBeNull();
    expect(root.querySelector('[data-role="total-score"]')!.textContent).toBe("100");
  });

  it("surfaces API errors without losing the screen", async () => {
    const app = new App(root, stubApi());
    await app.signIn("sam", "pw");
    const failing = stubApi({
      submitTest: async () => {
        throw new ApiError(409, "wrong_phase", "no pending test");
      },
    });
    const app2 = new App(root, failing);
    await app2.submitTest("t-1", {});
    const error = root.querySelector('[data-role="error"]');
    expect(error).not.toBeNull();
    expect(error!.textContent).toContain("no pending test");
  });

  it("bad credentials keep the auth screen with an error", async () => {
    const app = new App(
      root,
      stubApi({
        login: async () => {
          throw new ApiError(401, "invalid_credentials", "wrong name or password");
        },
      }),
    );
    app.start();
    await app.signIn("sam", "nope");
    expect(root.querySelector('[data-role="auth-form"]')).not.toBeNull();
    expect(root.querySelector('[data-role="error"]')).not.toBeNull();
  });
});
