/** Per-document review state: overlay mode, selection, edits, decision timer. */

import type { OverlayMode, Span } from "./types.js";
import { editSpans, isValidSpanList } from "./spans.js";

export interface Clock {
  now(): number;
}

/**
 * Decision timer: starts on document render, pauses while the tab is
 * hidden, reports whole elapsed milliseconds.
 */
export class DecisionTimer {
  private accumulated = 0;
  private runningSince: number | null;

  constructor(private clock: Clock = Date) {
    this.runningSince = clock.now();
  }

  pause(): void {
    if (this.runningSince !== null) {
      this.accumulated += this.clock.now() - this.runningSince;
      this.runningSince = null;
    }
  }

  resume(): void {
    if (this.runningSince === null) {
      this.runningSince = this.clock.now();
    }
  }

  elapsedMs(): number {
    const live = this.runningSince === null ? 0 : this.clock.now() - this.runningSince;
    return Math.round(this.accumulated + live);
  }
}

export class ViewState {
  overlay: OverlayMode = "spans";
  selection: [number, number] | null = null;
  correctedSpans: Span[];
  readonly timer: DecisionTimer;

  constructor(
    public readonly docId: string,
    public readonly nTokens: number,
    initialSpans: Span[],
    clock: Clock = Date,
  ) {
    this.correctedSpans = initialSpans.map((s) => [...s] as Span);
    this.timer = new DecisionTimer(clock);
  }

  /** Overlay switching never mutates correction state. */
  setOverlay(mode: OverlayMode): void {
    this.overlay = mode;
  }

  select(from: number, to: number): boolean {
    if (Math.min(from, to) < 0 || Math.max(from, to) >= this.nTokens) return false;
    this.selection = [from, to];
    return true;
  }

  /** Apply the current selection as a span edit; false = rejected, no change. */
  applySelection(): boolean {
    if (this.selection === null) return false;
    const [from, to] = this.selection;
    const next = editSpans(this.correctedSpans, from, to, this.nTokens);
    if (next === null || !isValidSpanList(next, this.nTokens)) return false;
    this.correctedSpans = next;
    this.selection = null;
    return true;
  }
}
