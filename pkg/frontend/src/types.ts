/** Wire types mirroring the review service's JSON (schemas/ v1). */

/** Half-open token-index interval [start, end). */
export type Span = [number, number];

export interface HiaRecord {
  schema_version: number;
  doc_id: string;
  tokens: string[];
  /** Gate strength per token, in (0, 1). */
  mask: number[];
  /** Row-sum of the attention output scaled by the gate. */
  attention_x_mask: number[];
  /** T x 5 style features, each in [0, 1]. */
  style_heatmap: number[][];
  pred_spans: Span[];
  pred_marginals: number[];
  gold_spans: Span[] | null;
}

export interface DocPayload {
  doc: {
    id: string;
    text: string;
    labels: number[];
    spans: Span[];
    meta: { domain: string; generator: string; attack: string | null; split: string };
  };
  pred_spans: Span[];
  pred_labels: number[];
  pred_marginals: number[];
}

export interface DocList {
  total: number;
  page: number;
  page_size: number;
  ids: string[];
}

export interface Correction {
  schema_version: number;
  doc_id: string;
  reviewer_id: string;
  corrected_spans: Span[];
  rating_boundary: number;
  rating_hia: number;
  elapsed_ms: number;
}

export type OverlayMode = "spans" | "mask-strength" | "attention-x-mask" | "style-heatmap";

export const OVERLAY_MODES: OverlayMode[] = [
  "spans",
  "mask-strength",
  "attention-x-mask",
  "style-heatmap",
];
