/** A small served-JSON fixture shared by the component tests. */

import type { DocPayload, HiaRecord } from "../src/types.js";

export const FIXTURE_HIA: HiaRecord = {
  schema_version: 1,
  doc_id: "fix-001",
  tokens: ["the", "cat", "sat.", "paradigm", "paradigm", "framework.", "done."],
  mask: [0.91, 0.88, 0.9, 0.32, 0.28, 0.35, 0.87],
  attention_x_mask: [0.41, 0.38, 0.44, -0.91, -0.88, -0.79, 0.4],
  style_heatmap: [
    [0.5, 0.4, 0.2, 0.9, 0.95],
    [0.52, 0.38, 0.19, 0.92, 0.95],
    [0.51, 0.41, 0.33, 0.9, 0.94],
    [0.6, 0.2, 0.05, 0.45, 0.8],
    [0.61, 0.22, 0.04, 0.4, 0.81],
    [0.59, 0.21, 0.15, 0.42, 0.8],
    [0.5, 0.4, 0.35, 0.88, 0.93],
  ],
  pred_spans: [[3, 6]],
  pred_marginals: [0.05, 0.08, 0.11, 0.93, 0.95, 0.9, 0.07],
  gold_spans: [[3, 6]],
};

export const FIXTURE_DOC: DocPayload = {
  doc: {
    id: "fix-001",
    text: "the cat sat. paradigm paradigm framework. done.",
    labels: [0, 0, 0, 1, 1, 1, 0],
    spans: [[3, 6]],
    meta: { domain: "synthetic", generator: "synth-v1", attack: null, split: "test" },
  },
  pred_spans: [[3, 6]],
  pred_labels: [0, 0, 0, 1, 1, 1, 0],
  pred_marginals: [0.05, 0.08, 0.11, 0.93, 0.95, 0.9, 0.07],
};
