import { ApiClient, ApiError } from "./api.js";
import type { ProgressPayload, ResultPayload, StepPayload } from "./types.js";

/** The slice of the client the journey controller actually uses. */
export type TutorApi = Pick<
  ApiClient,
  | "register"
  | "login"
  | "questionnaire"
  | "submitQuestionnaire"
  | "next"
  | "submitTest"
  | "progress"
>;
import {
  completedView,
  errorView,
  lessonView,
  progressView,
  questionnaireView,
  resultView,
  testView,
} from "./views.js";

/**
 * Screen-by-screen journey controller.
 *
 * Every handler ends by re-rendering from fresh server state; the server
 * owns the phase machine, the client only displays it.
 */
export class App {
  constructor(
    private root: HTMLElement,
    private client: TutorApi,
  ) {}

  start(): void {
    this.renderAuth();
  }

  private clear(): HTMLElement {
    this.root.innerHTML = "";
    return this.root;
  }

  private showError(error: unknown): void {
    const message = error instanceof ApiError ? error.message : String(error);
    const retryable = error instanceof ApiError && error.retryable;
    this.root.prepend(errorView(message, retryable));
  }

  renderAuth(): void {
    const root = this.clear();
    const section = document.createElement("section");
    section.className = "screen screen-auth";
    section.innerHTML = `
      <h2>Welcome</h2>
      <form data-role="auth-form">
        <label>Name <input name="name" required></label>
        <label>Password <input name="password" type="password" required></label>
        <label>Language <input name="language" value="en" size="3"></label>
        <button type="submit" data-role="login">Log in</button>
        <button type="button" data-role="register">Create account</button>
      </form>`;
    const form = section.querySelector("form") as HTMLFormElement;
    const read = () => ({
      name: (form.elements.namedItem("name") as HTMLInputElement).value,
      password: (form.elements.namedItem("password") as HTMLInputElement).value,
      language: (form.elements.namedItem("language") as HTMLInputElement).value,
    });
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const { name, password } = read();
      void this.signIn(name, password);
    });
    (section.querySelector('[data-role="register"]') as HTMLButtonElement).addEventListener(
      "click",
      () => {
        const { name, password, language } = read();
        void this.signUp(name, password, language);
      },
    );
    root.append(section);
  }

  async signUp(name: string, password: string, language: string): Promise<void> {
    try {
      await this.client.register(name, password, language);
      await this.client.login(name, password);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async signIn(name: string, password: string): Promise<void> {
    try {
      await this.client.login(name, password);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  /** Pull progress plus the current step and rebuild the whole screen. */
  async refresh(): Promise<void> {
    let step: StepPayload;
    let progress: ProgressPayload;
    try {
      [step, progress] = await Promise.all([this.client.next(), this.client.progress()]);
    } catch (error) {
      this.showError(error);
      return;
    }
    const root = this.clear();
    root.append(progressView(progress));
    root.append(this.stepScreen(step));
  }

  private stepScreen(step: StepPayload): HTMLElement {
    switch (step.kind) {
      case "questionnaire":
        return questionnaireView(step, (responses) => void this.submitProfile(responses));
      case "test":
        return testView(step, (answers) => void this.submitTest(step.test_id, answers));
      case "lesson":
        return lessonView(step, (testId, answers) => void this.submitTest(testId, answers));
      case "completed":
        return completedView(step);
    }
  }

  async submitProfile(responses: Record<string, number>): Promise<void> {
    try {
      await this.client.submitQuestionnaire(responses);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async submitTest(testId: string, answers: Record<string, number>): Promise<void> {
    let result: ResultPayload;
    try {
      result = await this.client.submitTest(testId, answers);
    } catch (error) {
      this.showError(error);
      return;
    }
    const root = this.clear();
    root.append(resultView(result, () => void this.refresh()));
  }
}

export function mountApp(root: HTMLElement, client: TutorApi): App {
  const app = new App(root, client);
  app.start();
  return app;
}

// Browser entry point; tests construct App themselves.
const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  const base = mount.dataset.apiBase ?? "http://127.0.0.1:8000";
  mountApp(mount, new ApiClient(base));
}
