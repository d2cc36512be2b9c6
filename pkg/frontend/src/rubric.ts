// Review rubric: six five-point questions (with the level descriptions shown
// as hover text) and eleven binary error categories. Keys match the API.

export interface LikertQuestion {
  key: string;
  label: string;
  // descriptions indexed by score, 5 first (most favorable) down to 1
  descriptions: [string, string, string, string, string];
}

const CLARITY_LEVELS: LikertQuestion["descriptions"] = [
  "Completely easily understood and well written",
  "Mostly clear and easy to read",
  "Needs rereading to understand",
  "Difficult to understand",
  "Unintelligible",
];

const EXTRA_INFO_LEVELS: LikertQuestion["descriptions"] = [
  "No extra information in LLM text",
  "Little extra information, none impacting interpretation",
  "Some extra information that might affect the case interpretation",
  "Significant extra information but not all changes interpretation",
  "Significant extra information changing interpretation",
];

export const LIKERT_QUESTIONS: LikertQuestion[] = [
  {
    key: "original_clear",
    label: "Is the original translation provided by the human clear?",
    descriptions: CLARITY_LEVELS,
  },
  {
    key: "llm_clear",
    label: "Is LLM translation clear?",
    descriptions: CLARITY_LEVELS,
  },
  {
    key: "llm_complete",
    label: "Is the LLM translation complete?",
    descriptions: [
      "Complete, not missing any relevant or auxiliary information",
      "Mostly clear and easy to read",
      "Needs rereading to understand",
      "Difficult to understand",
      "Unintelligible",
    ],
  },
  {
    key: "llm_correct",
    label: "Is the information in the LLM translation correct?",
    descriptions: [
      "All translated text correct",
      "Some incorrectness, no impact to interpretation",
      "Inaccuracy that might impact interpretability",
      "Significant inaccuracies impacting interpretability",
      "All translation is inaccurate",
    ],
  },
  {
    key: "extraneous_info",
    label: "Is there unnecessary or extraneous information in the LLM translation?",
    descriptions: EXTRA_INFO_LEVELS,
  },
  {
    key: "ungrounded_key_info",
    label:
      "Amount of key (drug safety related) information in the LLM translation " +
      "not present in the source text",
    descriptions: EXTRA_INFO_LEVELS,
  },
];

export function descriptionFor(question: LikertQuestion, score: number): string {
  return question.descriptions[5 - score];
}

export interface BinaryCategory {
  key: string;
  label: string;
}

export const BINARY_CATEGORIES: BinaryCategory[] = [
  { key: "source_contradictions", label: "Source contains contradictions" },
  { key: "llm_contradictions", label: "LLM contains contradictions" },
  { key: "wrong_drug", label: "Wrong drug name or information" },
  { key: "wrong_dosage", label: "Wrong dosage" },
  { key: "wrong_dates", label: "Wrong dates/times" },
  { key: "incorrect_missing_ae", label: "Incorrect/missing AE/wrong outcome" },
  { key: "rechallenge_dechallenge", label: "Rechallenge/dechallenge errors" },
  { key: "tto_issues", label: "TTO issues" },
  { key: "nonsensical_phrases", label: "Nonsensical phrases" },
  { key: "other_errors", label: "Other errors" },
  { key: "clinically_accurate", label: "Is the case clinically accurate?" },
];
