/** DOM wiring: document list, token view with overlays, correction form. */

import { ReviewApi, ApiError } from "./api.js";
import { renderDocument } from "./render.js";
import { ViewState } from "./viewstate.js";
import { OVERLAY_MODES, type Correction, type OverlayMode } from "./types.js";

const api = new ReviewApi();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

async function openDocument(id: string, root: HTMLElement): Promise<void> {
  const [payload, hia] = await Promise.all([api.getDoc(id), api.getHia(id)]);
  const state = new ViewState(id, hia.tokens.length, payload.pred_spans);

  document.addEventListener("visibilitychange", () => {
    if (document.hidden) state.timer.pause();
    else state.timer.resume();
  });

  const tokenBox = el("div", { class: "tokens" });
  const overlayBar = el("div", { class: "overlay-bar" });
  for (const mode of OVERLAY_MODES) {
    const btn = el("button", {}, mode);
    btn.addEventListener("click", () => {
      state.setOverlay(mode);
      paint(state.overlay);
    });
    overlayBar.appendChild(btn);
  }

  let dragStart: number | null = null;

  function paint(mode: OverlayMode): void {
    tokenBox.textContent = "";
    const markup = renderDocument(hia, mode);
    for (const tok of markup.tokens) {
      const span = el(
        "span",
        {
          class: `token ${tok.spanClass}`,
          title: tok.hover,
          "data-index": String(tok.index),
        },
        tok.text + " ",
      );
      span.style.setProperty("--intensity", tok.intensity.toFixed(4));
      span.addEventListener("mousedown", () => (dragStart = tok.index));
      span.addEventListener("mouseup", () => {
        if (dragStart === null) return;
        if (state.select(dragStart, tok.index)) {
          if (!state.applySelection()) {
            span.classList.add("rejected");
            setTimeout(() => span.classList.remove("rejected"), 400);
          }
          paint(state.overlay);
        }
        dragStart = null;
      });
      tokenBox.appendChild(span);
    }
  }

  const form = el("div", { class: "correction-form" });
  const ratingBoundary = el("input", { type: "number", min: "1", max: "5", value: "3" });
  const ratingHia = el("input", { type: "number", min: "1", max: "5", value: "3" });
  const submit = el("button", {}, "submit correction");
  const status = el("span", { class: "status" });
  submit.addEventListener("click", async () => {
    const correction: Correction = {
      schema_version: 1,
      doc_id: id,
      reviewer_id: localStorage.getItem("reviewer_id") ?? "anonymous",
      corrected_spans: state.correctedSpans,
      rating_boundary: Number(ratingBoundary.value),
      rating_hia: Number(ratingHia.value),
      elapsed_ms: state.timer.elapsedMs(),
    };
    status.textContent = "submitting…";
    try {
      await api.postCorrection(correction);
      status.textContent = "saved";
    } catch (e) {
      status.textContent = e instanceof ApiError ? e.detail : String(e);
    }
  });
  form.append("boundary rating: ", ratingBoundary, " hia rating: ", ratingHia, submit, status);

  root.textContent = "";
  root.append(overlayBar, tokenBox, form);
  paint(state.overlay);
}

async function init(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const list = await api.listDocs("test");
  const nav = el("ul", { class: "doc-list" });
  for (const id of list.ids) {
    const item = el("li", {}, id);
    item.addEventListener("click", () => void openDocument(id, viewer));
    nav.appendChild(item);
  }
  const viewer = el("div", { class: "viewer" });
  root.append(nav, viewer);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  void init();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => void init());
}
