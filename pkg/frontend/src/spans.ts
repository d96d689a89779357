/** Token-granularity span editing with auto-merge and overlap rejection. */

import type { Span } from "./types.js";

/** True when the list is sorted, disjoint, non-empty intervals within bounds. */
export function isValidSpanList(spans: Span[], nTokens: number): boolean {
  let prevEnd = -1;
  for (const [start, end] of spans) {
    if (start < 0 || end <= start || end > nTokens) return false;
    if (start < prevEnd) return false;
    prevEnd = end;
  }
  return true;
}

/** Merge touching or overlapping intervals into a canonical sorted list. */
export function normalizeSpans(spans: Span[]): Span[] {
  const sorted = [...spans].sort((a, b) => a[0] - b[0]);
  const out: Span[] = [];
  for (const [start, end] of sorted) {
    const last = out[out.length - 1];
    if (last && start <= last[1]) {
      last[1] = Math.max(last[1], end);
    } else {
      out.push([start, end]);
    }
  }
  return out;
}

/**
 * Apply a reviewer selection [from, to] (inclusive token indices) to the
 * current span list. A selection wholly inside existing AI spans removes
 * that range (toggle off); anything else marks the range as AI,
 * auto-merging with adjacent spans.
 *
 * Returns the new list, or null when the edit is rejected (selection out
 * of bounds); the caller keeps the previous state unchanged.
 */
export function editSpans(
  spans: Span[],
  from: number,
  to: number,
  nTokens: number,
): Span[] | null {
  if (from > to) [from, to] = [to, from];
  if (from < 0 || to >= nTokens) return null;

  const selStart = from;
  const selEnd = to + 1; // half-open
  const covered = labelArray(spans, nTokens);
  const allInside = covered.slice(selStart, selEnd).every((v) => v === 1);

  const next = labelArray(spans, nTokens);
  const value = allInside ? 0 : 1;
  for (let i = selStart; i < selEnd; i++) next[i] = value;
  return spansFromLabels(next);
}

export function labelArray(spans: Span[], nTokens: number): number[] {
  const labels = new Array<number>(nTokens).fill(0);
  for (const [start, end] of spans) {
    for (let i = start; i < end; i++) labels[i] = 1;
  }
  return labels;
}

export function spansFromLabels(labels: number[]): Span[] {
  const spans: Span[] = [];
  let start: number | null = null;
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] === 1 && start === null) start = i;
    if (labels[i] !== 1 && start !== null) {
      spans.push([start, i]);
      start = null;
    }
  }
  if (start !== null) spans.push([start, labels.length]);
  return spans;
}
