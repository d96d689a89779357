"""Human-interpretable attribution export, review service, and corrections.

Per-document attribution artifacts (gate strength, attention-times-gate
influence, style-feature heatmap) are exported as plain JSON, served over a
small read-only HTTP API alongside predictions, and paired with an
append-only corrections journal. Replaying the journal against a prediction
set re-evaluates the corpus and quantifies the human-in-the-loop gain.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    Document,
    Span,
    labels_from_spans,
    read_jsonl,
    spans_from_labels,
    to_record,
)
from .evalkit import EvalReport, build_report
from .model import Prediction, TrainedModel
from .stylometry import build_style_matrix

SCHEMA_VERSION = 1


@dataclass
class HiaRecord:
    doc_id: str
    tokens: list[str]
    mask: list[float]  # gate strength per token, in (0, 1)
    attention_x_mask: list[float]  # row-sum of attention output x gate
    style_heatmap: list[list[float]]  # T x 5
    pred_spans: list[Span]
    pred_marginals: list[float]  # P(label=1) per token
    gold_spans: list[Span] | None = None

    def validate(self) -> None:
        t = len(self.tokens)
        for name in ("mask", "attention_x_mask", "pred_marginals"):
            if len(getattr(self, name)) != t:
                raise ValueError(f"{name} length != token count")
        if len(self.style_heatmap) != t:
            raise ValueError("style_heatmap length != token count")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pred_spans"] = [[s.start, s.end] for s in self.pred_spans]
        d["gold_spans"] = (
            None
            if self.gold_spans is None
            else [[s.start, s.end] for s in self.gold_spans]
        )
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HiaRecord":
        return cls(
            doc_id=d["doc_id"],
            tokens=list(d["tokens"]),
            mask=list(d["mask"]),
            attention_x_mask=list(d["attention_x_mask"]),
            style_heatmap=[list(r) for r in d["style_heatmap"]],
            pred_spans=[Span(a, b) for a, b in d["pred_spans"]],
            pred_marginals=list(d["pred_marginals"]),
            gold_spans=(
                None
                if d.get("gold_spans") is None
                else [Span(a, b) for a, b in d["gold_spans"]]
            ),
        )


@dataclass
class Correction:
    doc_id: str
    reviewer_id: str
    corrected_spans: list[Span]
    rating_boundary: int
    rating_hia: int
    elapsed_ms: int

    def validate(self, n_tokens: int | None = None) -> None:
        for name in ("rating_boundary", "rating_hia"):
            v = getattr(self, name)
            if not (isinstance(v, int) and 1 <= v <= 5):
                raise ValueError(f"{name}: must be an integer in [1, 5]")
        if not (isinstance(self.elapsed_ms, int) and self.elapsed_ms >= 0):
            raise ValueError("elapsed_ms: must be a non-negative integer")
        prev_end = -1
        for i, s in enumerate(self.corrected_spans):
            if s.start < 0 or s.end <= s.start:
                raise ValueError(f"corrected_spans[{i}]: invalid interval")
            if s.start < prev_end:
                raise ValueError(f"corrected_spans[{i}]: overlaps previous span")
            if n_tokens is not None and s.end > n_tokens:
                raise ValueError(f"corrected_spans[{i}]: exceeds document length")
            prev_end = s.end

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corrected_spans"] = [[s.start, s.end] for s in self.corrected_spans]
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Correction":
        return cls(
            doc_id=d["doc_id"],
            reviewer_id=d["reviewer_id"],
            corrected_spans=[Span(a, b) for a, b in d["corrected_spans"]],
            rating_boundary=d["rating_boundary"],
            rating_hia=d["rating_hia"],
            elapsed_ms=d["elapsed_ms"],
        )


def export_hia(doc: Document, trained: TrainedModel) -> HiaRecord:
    """Pure function of (document, checkpoint); repeated calls identical."""
    out = trained.export_intermediates(doc)
    mask = out["mask"].numpy()
    attended = out["attended"].numpy()
    marginals = out["marginals"].numpy()
    heatmap = build_style_matrix(doc, trained.lm, trained.cfg.window).values
    labels = out["labels"]
    rec = HiaRecord(
        doc_id=doc.id,
        tokens=doc.token_texts,
        mask=mask.tolist(),
        attention_x_mask=(attended.sum(axis=1) * mask).tolist(),
        style_heatmap=heatmap.tolist(),
        pred_spans=spans_from_labels(labels),
        pred_marginals=marginals[:, 1].tolist(),
        gold_spans=doc.gold_spans,
    )
    rec.validate()
    return rec


def checkpoint_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def export_corpus_hia(docs, trained: TrainedModel, out_dir, ckpt_hash="nockpt"):
    """Content-addressed per-document JSON files keyed by (doc id, checkpoint)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for doc in docs:
        rec = export_hia(doc, trained)
        p = out_dir / f"{doc.id}.{ckpt_hash}.hia.json"
        p.write_text(json.dumps(rec.to_dict()))
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# corrections journal and replay


class CorrectionsJournal:
    """Append-only JSONL journal with a single serialized writer."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, correction: Correction) -> None:
        correction.validate()
        line = json.dumps(correction.to_dict())
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def replay(self) -> list[Correction]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    out.append(Correction.from_dict(json.loads(line)))
        return out


def apply_corrections(
    docs: list[Document],
    predictions: dict[str, Prediction],
    corrections: list[Correction],
) -> tuple[dict[str, list[Span]], EvalReport, EvalReport]:
    """Corrected spans replace predicted spans; evaluation is re-run.

    Later corrections for the same document win. Returns the revised span
    map plus (report_before, report_after).
    """
    revised = {d.id: list(predictions[d.id].spans) for d in docs}
    by_id = {d.id: d for d in docs}
    for c in corrections:
        doc = by_id.get(c.doc_id)
        if doc is None:
            raise KeyError(f"correction references unknown document {c.doc_id!r}")
        c.validate(n_tokens=len(doc.tokens))
        revised[c.doc_id] = list(c.corrected_spans)

    def _reports(span_map):
        labels, probs = [], []
        for d in docs:
            labels.append(labels_from_spans(span_map[d.id], len(d.tokens)))
            p = predictions[d.id].marginals
            probs.append(p[:, 1] if p.size else np.zeros(0))
        return build_report(docs, labels, probs)

    before = _reports({d.id: list(predictions[d.id].spans) for d in docs})
    after = _reports(revised)
    return revised, before, after


# ---------------------------------------------------------------------------
# HTTP service


@dataclass
class ServeState:
    docs: dict[str, Document]
    order: list[str]
    trained: TrainedModel
    journal: CorrectionsJournal
    predictions: dict[str, Prediction] = field(default_factory=dict)
    hia_cache: dict[str, dict] = field(default_factory=dict)

    def prediction(self, doc_id: str) -> Prediction:
        if doc_id not in self.predictions:
            self.predictions[doc_id] = self.trained.predict(self.docs[doc_id])
        return self.predictions[doc_id]

    def hia(self, doc_id: str) -> dict:
        if doc_id not in self.hia_cache:
            self.hia_cache[doc_id] = export_hia(
                self.docs[doc_id], self.trained
            ).to_dict()
        return self.hia_cache[doc_id]


def create_app(data_path, model_path, journal_path):
    """FastAPI application over a document set, checkpoint, and journal."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    docs = list(read_jsonl(data_path))
    trained = TrainedModel.load(model_path)
    state = ServeState(
        docs={d.id: d for d in docs},
        order=[d.id for d in docs],
        trained=trained,
        journal=CorrectionsJournal(journal_path),
    )

    app = FastAPI(title="segment review service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = state

    def _get_doc(doc_id: str) -> Document:
        doc = state.docs.get(doc_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"unknown doc id {doc_id!r}")
        return doc

    @app.get("/api/docs")
    def list_docs(split: str = "", page: int = 0, page_size: int = 50):
        ids = [
            i
            for i in state.order
            if not split or state.docs[i].meta.split == split
        ]
        lo = page * page_size
        return {
            "total": len(ids),
            "page": page,
            "page_size": page_size,
            "ids": ids[lo : lo + page_size],
        }

    @app.get("/api/docs/{doc_id}")
    def get_doc(doc_id: str):
        doc = _get_doc(doc_id)
        pred = state.prediction(doc_id)
        return {
            "doc": to_record(doc),
            "pred_spans": [[s.start, s.end] for s in pred.spans],
            "pred_labels": pred.labels,
            "pred_marginals": pred.marginals[:, 1].tolist()
            if pred.marginals.size
            else [],
        }

    @app.get("/api/docs/{doc_id}/hia")
    def get_hia(doc_id: str):
        _get_doc(doc_id)
        return state.hia(doc_id)

    @app.post("/api/corrections")
    def post_correction(payload: dict):
        try:
            c = Correction.from_dict(payload)
        except (KeyError, TypeError) as e:
            raise HTTPException(status_code=422, detail=f"malformed correction: {e}")
        doc = _get_doc(c.doc_id)
        try:
            c.validate(n_tokens=len(doc.tokens))
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e))
        state.journal.append(c)
        return {"status": "ok", "doc_id": c.doc_id}

    @app.get("/api/report")
    def report():
        docs_list = [state.docs[i] for i in state.order]
        preds = {i: state.prediction(i) for i in state.order}
        corrections = state.journal.replay()
        _, before, after = apply_corrections(docs_list, preds, corrections)
        return {
            "before": before.to_dict(),
            "after": after.to_dict(),
            "n_corrections": len(corrections),
        }

    return app


def serve(data_path, model_path, journal_path, host="127.0.0.1", port=8000):
    import uvicorn

    app = create_app(data_path, model_path, journal_path)
    uvicorn.run(app, host=host, port=port)
