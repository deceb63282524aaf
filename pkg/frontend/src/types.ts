/**
 * Wire types for the annotation service.
 *
 * These mirror the JSON the service emits field for field. The client
 * never invents or derives any of these values; it only displays them.
 */

/** The four labels an annotator can submit, exactly as sent on the wire. */
export type WireLabel = "1" | "2" | "neither" | "unclear";

export const WIRE_LABELS: readonly WireLabel[] = ["1", "2", "neither", "unclear"];

export function isWireLabel(value: string): value is WireLabel {
  return (WIRE_LABELS as readonly string[]).includes(value);
}

/** Token span over the candidate's token list. */
export interface Span {
  start: number;
  end: number;
  surface: string;
}

/** One labeling candidate, as served by GET /api/next. */
export interface Candidate {
  id: string;
  text: string;
  tokens: string[];
  c1: Span;
  c2: Span;
  pronoun: Span;
  connective: Span | null;
  label: 1 | 2 | null;
  pronoun_gender: "m" | "f";
  source: string;
  derived_from: string | null;
  switched: boolean;
}

export interface NextResponse {
  candidate: Candidate | null;
  remaining: number;
}

export interface LabelAck {
  ok: boolean;
  record: {
    candidate_id: string;
    annotator_id: string;
    label: WireLabel;
    timestamp: number;
  };
}

export interface ProgressResponse {
  candidates: number;
  labels: number;
  events: number;
  per_annotator: Record<string, number>;
  accepted: number;
  rejected: number;
  pending: number;
}

export interface AgreementResponse {
  kappa: number | null;
  items: number;
  raters: number;
}

export interface ExportResponse {
  instances: Candidate[];
  matrix: {
    categories: string[];
    rows: number[][];
  };
  counts: {
    accepted: number;
    rejected: number;
    pending: number;
  };
}
