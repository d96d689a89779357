/** Pure rendering: (document, attribution record, overlay mode) -> markup model.
 *
 * The markup model is plain data so component tests never need a DOM;
 * main.ts turns it into elements 1:1.
 */

import type { HiaRecord, OverlayMode, Span } from "./types.js";
import { labelArray } from "./spans.js";

export interface TokenMarkup {
  index: number;
  text: string;
  /** Predicted class: AI spans red, human green. */
  spanClass: "ai" | "human";
  /** Overlay intensity in [0, 1]; scales monotonically with the signal. */
  intensity: number;
  /** Exact signal values shown on hover. */
  hover: string;
  /** Style-heatmap cells for the active overlay (empty otherwise). */
  heatCells: number[];
}

export interface DocumentMarkup {
  docId: string;
  overlay: OverlayMode;
  tokens: TokenMarkup[];
}

const STYLE_FEATURE_NAMES = [
  "surprisal",
  "function-word density",
  "punctuation density",
  "lexical diversity",
  "readability",
];

function minMaxScale(values: number[]): number[] {
  if (values.length === 0) return [];
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  if (hi === lo) return values.map(() => 0.5);
  return values.map((v) => (v - lo) / (hi - lo));
}

export function renderDocument(rec: HiaRecord, overlay: OverlayMode): DocumentMarkup {
  const t = rec.tokens.length;
  const predLabels = labelArray(rec.pred_spans as Span[], t);

  let intensities: number[];
  switch (overlay) {
    case "spans":
      intensities = predLabels.map((l) => (l === 1 ? 1 : 0));
      break;
    case "mask-strength":
      intensities = minMaxScale(rec.mask);
      break;
    case "attention-x-mask":
      intensities = minMaxScale(rec.attention_x_mask);
      break;
    case "style-heatmap":
      // mean feature value per token; per-cell values go to heatCells
      intensities = minMaxScale(
        rec.style_heatmap.map((row) => row.reduce((a, b) => a + b, 0) / row.length),
      );
      break;
  }

  const tokens: TokenMarkup[] = rec.tokens.map((text, i) => {
    const hoverParts = [
      `mask=${rec.mask[i]!.toFixed(4)}`,
      `attn×mask=${rec.attention_x_mask[i]!.toFixed(4)}`,
      `p(ai)=${rec.pred_marginals[i]!.toFixed(4)}`,
    ];
    if (overlay === "style-heatmap") {
      for (let j = 0; j < STYLE_FEATURE_NAMES.length; j++) {
        hoverParts.push(`${STYLE_FEATURE_NAMES[j]}=${rec.style_heatmap[i]![j]!.toFixed(4)}`);
      }
    }
    return {
      index: i,
      text,
      spanClass: predLabels[i] === 1 ? "ai" : "human",
      intensity: intensities[i]!,
      hover: hoverParts.join(" "),
      heatCells: overlay === "style-heatmap" ? [...rec.style_heatmap[i]!] : [],
    };
  });

  return { docId: rec.doc_id, overlay, tokens };
}
