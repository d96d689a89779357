import { describe, expect, it } from "vitest";

import {
  editSpans,
  isValidSpanList,
  labelArray,
  normalizeSpans,
  spansFromLabels,
} from "../src/spans.js";
import { ViewState } from "../src/viewstate.js";
import type { Span } from "../src/types.js";

describe("span list validation", () => {
  it("accepts sorted disjoint spans in bounds", () => {
    expect(isValidSpanList([[0, 2], [4, 6]], 10)).toBe(true);
  });

  it.each<[Span[], number]>([
    [[[2, 2]], 10], // empty interval
    [[[-1, 2]], 10], // negative start
    [[[0, 11]], 10], // beyond bounds
    [[[0, 5], [3, 8]], 10], // overlap
  ])("rejects %j", (spans, n) => {
    expect(isValidSpanList(spans, n)).toBe(false);
  });
});

describe("normalizeSpans", () => {
  it("merges touching and overlapping intervals", () => {
    expect(normalizeSpans([[4, 6], [0, 2], [2, 4]])).toEqual([[0, 6]]);
    expect(normalizeSpans([[0, 3], [2, 5], [7, 9]])).toEqual([[0, 5], [7, 9]]);
  });
});

describe("editSpans", () => {
  it("marks a fresh selection as an AI span", () => {
    expect(editSpans([], 2, 4, 10)).toEqual([[2, 5]]);
  });

  it("auto-merges with an adjacent span", () => {
    expect(editSpans([[0, 2]], 2, 4, 10)).toEqual([[0, 5]]);
  });

  it("toggles off a selection wholly inside an existing span", () => {
    expect(editSpans([[0, 6]], 2, 3, 10)).toEqual([[0, 2], [4, 6]]);
  });

  it("rejects out-of-bounds selections with no state change", () => {
    expect(editSpans([[0, 2]], 5, 12, 10)).toBeNull();
    expect(editSpans([[0, 2]], -1, 3, 10)).toBeNull();
  });

  it("round-trips through labels", () => {
    const spans: Span[] = [[1, 3], [5, 9]];
    expect(spansFromLabels(labelArray(spans, 12))).toEqual(spans);
  });
});

describe("ViewState", () => {
  it("applies selections at token granularity", () => {
    const vs = new ViewState("d", 10, [[0, 2]]);
    expect(vs.select(2, 4)).toBe(true);
    expect(vs.applySelection()).toBe(true);
    expect(vs.correctedSpans).toEqual([[0, 5]]);
  });

  it("rejects an out-of-bounds selection without mutating state", () => {
    const vs = new ViewState("d", 5, [[0, 2]]);
    expect(vs.select(3, 7)).toBe(false);
    expect(vs.applySelection()).toBe(false);
    expect(vs.correctedSpans).toEqual([[0, 2]]);
  });

  it("keeps correction state across overlay switches", () => {
    const vs = new ViewState("d", 10, []);
    vs.select(1, 3);
    vs.applySelection();
    const before = JSON.stringify(vs.correctedSpans);
    vs.setOverlay("mask-strength");
    vs.setOverlay("style-heatmap");
    vs.setOverlay("spans");
    expect(JSON.stringify(vs.correctedSpans)).toBe(before);
  });
});

describe("DecisionTimer via ViewState", () => {
  it("accumulates only while running and pauses on hidden tab", () => {
    let t = 1000;
    const clock = { now: () => t };
    const vs = new ViewState("d", 5, [], clock);
    t += 400;
    vs.timer.pause(); // tab hidden
    t += 10_000;
    vs.timer.resume();
    t += 100;
    expect(vs.timer.elapsedMs()).toBe(500);
  });
});
