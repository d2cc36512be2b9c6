// Wire types mirroring the pipeline HTTP API. The UI renders these verbatim;
// it never re-derives guardrail decisions client-side.

export interface SpanRow {
  canonical_id: string;
  kind: "drug" | "adverse_event";
  start: number;
  end: number;
  surface: string;
  language: string;
  label: "matched" | "unmatched";
}

export interface MissrateBlock {
  source_drugs: number | null;
  target_drugs: number | null;
  source_aes: number | null;
  target_aes: number | null;
}

export interface MismatchBlock {
  matched_drug_ids: string[];
  unmatched_source_drug_ids: string[];
  unmatched_target_drug_ids: string[];
  matched_ae_ids: string[];
  unmatched_source_ae_ids: string[];
  unmatched_target_ae_ids: string[];
  source_spans: SpanRow[];
  target_spans: SpanRow[];
  tripped: boolean;
  missrates: MissrateBlock;
}

export interface FlaggedSpan {
  start: number;
  end: number;
  level: "L1" | "L2" | "L3";
}

export interface TluqBlock {
  token_entropies: number[];
  case_entropy: number;
  flagged_spans: FlaggedSpan[];
  truncated: boolean;
  empty: boolean;
}

export interface DluqBlock {
  distance: number;
  k_used: number;
  nearest_ids: string[];
  verdict: "accept" | "flag";
}

export interface GenericTradePair {
  generic_id: string;
  trade_id: string;
  consistent: boolean;
}

export interface GenericTradeBlock {
  pairs_checked: GenericTradePair[];
  method: string;
}

export interface Report {
  schema_version: number;
  case_id: string;
  pipeline_version: string;
  routing: "auto_pass" | "review" | "reject";
  routing_reasons: string[];
  dluq: DluqBlock | null;
  mismatch: MismatchBlock | null;
  generic_trade: GenericTradeBlock | null;
  tluq: TluqBlock | null;
  stage_errors: { stage: string; error: string }[];
}

export interface Assessment {
  reviewer_id: string;
  likert: Record<string, number>;
  binary_flags: Record<string, boolean>;
  free_text: string | null;
  submitted_at: string;
}

export interface Adjudication {
  adjudicator_id: string;
  assessment: Assessment;
  clinically_acceptable: boolean;
  submitted_at: string;
}

export type CaseStatus =
  | "pending"
  | "in_review"
  | "disagreement"
  | "adjudicated"
  | "closed";

export interface ReviewCase {
  case_id: string;
  source_text: string;
  target_text: string;
  report: Report;
  assessments: Assessment[];
  adjudication: Adjudication | null;
  status: CaseStatus;
}

export interface QueueEntry {
  case_id: string;
  status: CaseStatus;
  routing: Report["routing"];
  routing_reasons: string[];
  assessments: number;
  needs_adjudication: boolean;
}

export interface QueueResponse {
  cases: QueueEntry[];
}

// What the review screen renders: server-provided HTML panels plus the
// report summary, never client-recomputed spans.
export interface CaseView {
  caseData: ReviewCase;
  sourceHtml: string;
  targetHtml: string;
}

export interface AssessmentDraft {
  reviewer_id: string;
  likert: Record<string, number>;
  binary_flags: Record<string, boolean>;
  free_text: string | null;
}

export interface AdjudicationDraft {
  adjudicator_id: string;
  assessment: AssessmentDraft;
  clinically_acceptable: boolean;
}
