import type {
  ChatReply,
  ProgressPayload,
  QuestionnairePayload,
  ResultPayload,
  StepPayload,
  StyleSummary,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    details: Record<string, unknown>;
    retryable?: boolean;
  };
}

/** Typed failure carrying the server's stable error code. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly retryable = false,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  token = "";

  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    authorized = true,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (authorized) headers["authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ApiError(0, "unreachable", `cannot reach ${this.baseUrl}`, true);
    }
    if (!response.ok) {
      const envelope = (await response.json()) as ErrorEnvelope;
      throw new ApiError(
        response.status,
        envelope.error.code,
        envelope.error.message,
        envelope.error.retryable ?? false,
      );
    }
    return (await response.json()) as T;
  }

  /** Create a learner account; language is a two or three letter code. */
  register(name: string, password: string, language: string): Promise<{ learner_id: string }> {
    return this.request("POST", "/v1/register", { name, password, language }, false);
  }

  /** Exchange credentials for a bearer token and remember it. */
  async login(name: string, password: string): Promise<string> {
    const { token } = await this.request<{ token: string }>(
      "POST",
      "/v1/login",
      { name, password },
      false,
    );
    this.token = token;
    return token;
  }

  questionnaire(): Promise<QuestionnairePayload> {
    return this.request("GET", "/v1/questionnaire");
  }

  submitQuestionnaire(responses: Record<string, number>): Promise<StyleSummary> {
    return this.request("POST", "/v1/questionnaire", { responses });
  }

  /** Whatever the learner should see right now. Safe to call repeatedly. */
  next(): Promise<StepPayload> {
    return this.request("GET", "/v1/next");
  }

  submitTest(testId: string, answers: Record<string, number>): Promise<ResultPayload> {
    return this.request("POST", `/v1/tests/${testId}`, { answers });
  }

  progress(): Promise<ProgressPayload> {
    return this.request("GET", "/v1/progress");
  }

  chatTranslate(targetLanguage: string, text: string): Promise<ChatReply> {
    return this.request("POST", "/v1/chat/translate", {
      target_language: targetLanguage,
      text,
    });
  }
}
