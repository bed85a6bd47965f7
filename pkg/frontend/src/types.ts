/** Wire types for the /v1 API. Field names match the JSON exactly. */

export type StyleTag = "SS" | "GOA" | "EIA" | "CA" | "DLA";

export type SessionPhase =
  | "NeedsProfile"
  | "AwaitingPreTest"
  | "InLesson"
  | "AwaitingPostTest"
  | "Completed";

export const STYLE_LABELS: Record<StyleTag, string> = {
  SS: "Sensation Seeking",
  GOA: "Goal Oriented Achiever",
  EIA: "Emotionally Intelligent Achiever",
  CA: "Conscientious Achiever",
  DLA: "Deep Learning Achiever",
};

export interface QuestionView {
  question_id: string;
  stem: string;
  choices: string[];
}

export interface TestPayload {
  kind: "test";
  phase: "pre_test" | "post_test";
  test_id: string;
  concept_id: string;
  concept_title: string;
  seen_reset: boolean;
  questions: QuestionView[];
  untranslated: boolean;
}

export interface LessonPayload {
  kind: "lesson";
  concept_id: string;
  concept_title: string;
  style: StyleTag;
  blocks: string[];
  untranslated: boolean;
  post_test?: TestPayload;
}

export interface QuestionnairePayload {
  kind: "questionnaire";
  items: { item_id: string; prompt: string }[];
  untranslated: boolean;
}

export interface CompletedPayload {
  kind: "completed";
  concepts_mastered: string[];
  untranslated: boolean;
}

export type StepPayload =
  | TestPayload
  | LessonPayload
  | QuestionnairePayload
  | CompletedPayload;

export interface ResultPayload {
  kind: "result";
  test_id: string;
  correctness: Record<string, boolean>;
  total_score: number;
  conceptual_score: number;
  objective_score: number;
  level: string;
  conceptual_level: string;
  objective_level: string;
  concept_id: string;
  phase: "pre_test" | "post_test";
  session_phase: SessionPhase;
  decision?: "advance" | "remediate";
  attempts?: number;
}

export interface StyleSummary {
  kind: "style_summary";
  scores: Record<StyleTag, number>;
  dominant: StyleTag;
}

export interface ConceptProgress {
  concept_id: string;
  pre_level: string | null;
  post_level: string | null;
  conceptual_level: string | null;
  objective_level: string | null;
  attempts: number;
  status: "not_started" | "in_progress" | "mastered";
}

export interface ProgressPayload {
  kind: "progress";
  learner_id: string;
  language: string;
  phase: SessionPhase;
  style: { scores: Record<StyleTag, number>; dominant: StyleTag } | null;
  concepts: ConceptProgress[];
  mastered_count: number;
  completed: boolean;
}

export interface ChatReply {
  text: string;
  source: string;
  target: string;
}
