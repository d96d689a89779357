"""Span metrics, token metrics, calibration, boundary-error analysis, and
the saliency faithfulness protocol.

Span matching is existence-based: a span counts as matched if any
counterpart overlaps with IoU >= tau. Corpus-level rates pool matched/total
counts across documents. When both span sets are empty the rate is 1.0 so
that perfect predictions on fully-human text score perfectly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document, Span

DEFAULT_TAUS = (0.3, 0.5, 0.7, 0.9)
BOUNDARY_BUCKETS = ("off_by_1", "off_by_3", "off_by_5", "off_by_10", "larger")


def iou(a: Span, b: Span) -> float:
    """Token-set intersection over union of two spans."""
    inter = max(0, min(a.end, b.end) - max(a.start, b.start))
    union = len(a) + len(b) - inter
    return inter / union


def sbda(gold: list[Span], pred: list[Span], tau: float) -> float:
    """Fraction of gold spans with some predicted span at IoU >= tau."""
    if not (0 < tau <= 1):
        raise ValueError("tau must be in (0, 1]")
    if not gold:
        return 1.0 if not pred else 0.0
    matched = sum(1 for g in gold if any(iou(g, p) >= tau for p in pred))
    return matched / len(gold)


def segprec(gold: list[Span], pred: list[Span], tau: float) -> float:
    """Fraction of predicted spans with some gold span at IoU >= tau."""
    return sbda(pred, gold, tau)


def relaxed_span_acc(gold: list[Span], pred: list[Span], tau: float = 0.5) -> float:
    """Alias of sbda at tau=0.5 (the boundary-tolerant accuracy)."""
    return sbda(gold, pred, tau)


def greedy_one_to_one_matches(gold: list[Span], pred: list[Span],
                              tau: float) -> list[tuple[int, int]]:
    """Optional stricter matcher: greedy best-IoU one-to-one pairing."""
    cands = [
        (iou(g, p), gi, pi)
        for gi, g in enumerate(gold)
        for pi, p in enumerate(pred)
        if iou(g, p) >= tau
    ]
    cands.sort(key=lambda x: (-x[0], x[1], x[2]))
    used_g, used_p, out = set(), set(), []
    for _, gi, pi in cands:
        if gi not in used_g and pi not in used_p:
            out.append((gi, pi))
            used_g.add(gi)
            used_p.add(pi)
    return out


def token_metrics(gold_labels: list[int], pred_labels: list[int]) -> dict:
    """Accuracy/precision/recall/F1 with label 1 as the positive class."""
    if len(gold_labels) != len(pred_labels):
        raise ValueError("label sequences differ in length")
    tp = sum(1 for g, p in zip(gold_labels, pred_labels) if g == 1 and p == 1)
    fp = sum(1 for g, p in zip(gold_labels, pred_labels) if g == 0 and p == 1)
    fn = sum(1 for g, p in zip(gold_labels, pred_labels) if g == 1 and p == 0)
    tn = len(gold_labels) - tp - fp - fn
    n = len(gold_labels)
    acc = (tp + tn) / n if n else 1.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1}


# ---------------------------------------------------------------------------
# Boundary errors
# ---------------------------------------------------------------------------

@dataclass
class BoundaryErrors:
    hist: dict  # bucket -> fraction of inexact gold boundaries
    exact_matches: int
    total_boundaries: int
    inexact: int


def _bucket(d: float) -> str:
    if d <= 1:
        return "off_by_1"
    if d <= 3:
        return "off_by_3"
    if d <= 5:
        return "off_by_5"
    if d <= 10:
        return "off_by_10"
    return "larger"


def boundary_error_hist(gold: list[Span], pred: list[Span]) -> BoundaryErrors:
    """Distance from each gold boundary to the nearest predicted boundary of
    the same kind (start vs end). Exact hits are counted separately."""
    counts = {b: 0 for b in BOUNDARY_BUCKETS}
    exact = 0
    total = 0
    for kind in ("start", "end"):
        gold_pts = [getattr(s, kind) for s in gold]
        pred_pts = [getattr(s, kind) for s in pred]
        for g in gold_pts:
            total += 1
            d = min((abs(g - p) for p in pred_pts), default=math.inf)
            if d == 0:
                exact += 1
            else:
                counts[_bucket(d)] += 1
    inexact = total - exact
    hist = {
        b: (c / inexact if inexact else 0.0) for b, c in counts.items()
    }
    return BoundaryErrors(hist, exact, total, inexact)


def merge_boundary_errors(parts: list[BoundaryErrors]) -> BoundaryErrors:
    exact = sum(p.exact_matches for p in parts)
    total = sum(p.total_boundaries for p in parts)
    inexact = sum(p.inexact for p in parts)
    counts = {b: 0.0 for b in BOUNDARY_BUCKETS}
    for p in parts:
        for b in BOUNDARY_BUCKETS:
            counts[b] += p.hist[b] * p.inexact
    hist = {b: (c / inexact if inexact else 0.0) for b, c in counts.items()}
    return BoundaryErrors(hist, exact, total, inexact)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

def _binary_nll(logits: np.ndarray, labels: np.ndarray, temp: float) -> float:
    z = logits / temp
    # log sigmoid computed stably
    log_p1 = -np.logaddexp(0.0, -z)
    log_p0 = -np.logaddexp(0.0, z)
    return float(-(labels * log_p1 + (1 - labels) * log_p0).mean())


def fit_temperature(
    probs: np.ndarray, labels: np.ndarray, lo: float = 0.05, hi: float = 5.0
) -> float:
    """Scalar temperature minimizing token NLL, by golden-section search.

    `probs` are positive-class probabilities in (0, 1); they are converted
    to logits, divided by T, and squashed back.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        raise ValueError("temperature fit needs both label classes")
    if not ((probs > 0) & (probs < 1)).all():
        raise ValueError("probs must lie strictly in (0, 1)")
    logits = np.log(probs / (1 - probs))

    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = _binary_nll(logits, labels, c)
    fd = _binary_nll(logits, labels, d)
    for _ in range(200):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _binary_nll(logits, labels, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _binary_nll(logits, labels, d)
        if b - a < 1e-10:
            break
    t_star = (a + b) / 2
    # argmin property: never return something worse than T=1
    if _binary_nll(logits, labels, 1.0) < _binary_nll(logits, labels, t_star):
        return 1.0
    return t_star


def apply_temperature(probs: np.ndarray, temp: float) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    logits = np.log(probs / (1 - probs))
    return 1.0 / (1.0 + np.exp(-logits / temp))


def ece(probs: np.ndarray, labels: np.ndarray, bins: int = 15) -> float:
    """Expected calibration error over equal-width confidence bins.

    Confidence is max(p, 1-p); the predicted class is the argmax.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    conf = np.maximum(probs, 1 - probs)
    pred = (probs >= 0.5).astype(int)
    correct = (pred == labels).astype(np.float64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.digitize(conf, edges[1:-1]), 0, bins - 1)
    total = len(probs)
    out = 0.0
    for b in range(bins):
        sel = idx == b
        n = sel.sum()
        if n:
            out += (n / total) * abs(correct[sel].mean() - conf[sel].mean())
    return float(out)


def brier(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean squared error of the positive-class probability."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    return float(((probs - labels) ** 2).mean())


def reliability_bins(probs: np.ndarray, labels: np.ndarray, bins: int = 15):
    """(bin centers, accuracy, confidence, counts) for reliability diagrams."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    conf = np.maximum(probs, 1 - probs)
    pred = (probs >= 0.5).astype(int)
    correct = (pred == labels).astype(np.float64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.digitize(conf, edges[1:-1]), 0, bins - 1)
    centers = (edges[:-1] + edges[1:]) / 2
    accs, confs, counts = [], [], []
    for b in range(bins):
        sel = idx == b
        counts.append(int(sel.sum()))
        accs.append(float(correct[sel].mean()) if sel.any() else float("nan"))
        confs.append(float(conf[sel].mean()) if sel.any() else float("nan"))
    return centers, np.array(accs), np.array(confs), np.array(counts)


# ---------------------------------------------------------------------------
# Aggregated report
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    sbda: dict = field(default_factory=dict)  # tau -> rate
    segprec: dict = field(default_factory=dict)
    token_accuracy: float = 0.0
    token_precision: float = 0.0
    token_recall: float = 0.0
    token_f1: float = 0.0
    ece: float = 0.0
    brier: float = 0.0
    temperature: float = 1.0
    boundary_error_hist: dict = field(default_factory=dict)
    boundary_exact: int = 0
    boundary_total: int = 0
    relaxed_span_acc: float = 0.0
    n_documents: int = 0

    def to_dict(self) -> dict:
        return {
            "sbda": {str(k): v for k, v in self.sbda.items()},
            "segprec": {str(k): v for k, v in self.segprec.items()},
            "token_accuracy": self.token_accuracy,
            "token_precision": self.token_precision,
            "token_recall": self.token_recall,
            "token_f1": self.token_f1,
            "ece": self.ece,
            "brier": self.brier,
            "temperature": self.temperature,
            "boundary_error_hist": self.boundary_error_hist,
            "boundary_exact": self.boundary_exact,
            "boundary_total": self.boundary_total,
            "relaxed_span_acc": self.relaxed_span_acc,
            "n_documents": self.n_documents,
        }


def corpus_match_rate(
    pairs: list[tuple[list[Span], list[Span]]], tau: float
) -> float:
    """Pooled SBDA across documents: matched gold spans / total gold spans."""
    matched = total = 0
    any_pred = False
    for gold, pred in pairs:
        total += len(gold)
        any_pred = any_pred or bool(pred)
        matched += sum(1 for g in gold if any(iou(g, p) >= tau for p in pred))
    if total == 0:
        return 1.0 if not any_pred else 0.0
    return matched / total


def build_report(
    docs: list[Document],
    pred_labels: list[list[int]],
    pred_probs: list[np.ndarray] | None = None,
    taus: tuple = DEFAULT_TAUS,
    bins: int = 15,
    temperature: float = 1.0,
) -> EvalReport:
    """Aggregate all metrics over (gold document, predicted labels) pairs.

    `pred_probs` holds per-token positive-class probabilities; calibration
    numbers are zero when omitted.
    """
    from .corpus import spans_from_labels

    pairs = []
    all_gold, all_pred = [], []
    bnd = []
    for doc, labels in zip(docs, pred_labels):
        spans = spans_from_labels(labels)
        pairs.append((doc.gold_spans, spans))
        all_gold.extend(doc.labels)
        all_pred.extend(labels)
        bnd.append(boundary_error_hist(doc.gold_spans, spans))

    tm = token_metrics(all_gold, all_pred)
    merged = merge_boundary_errors(bnd)
    report = EvalReport(
        sbda={t: corpus_match_rate(pairs, t) for t in taus},
        segprec={t: corpus_match_rate([(p, g) for g, p in pairs], t) for t in taus},
        token_accuracy=tm["accuracy"],
        token_precision=tm["precision"],
        token_recall=tm["recall"],
        token_f1=tm["f1"],
        temperature=temperature,
        boundary_error_hist=merged.hist,
        boundary_exact=merged.exact_matches,
        boundary_total=merged.total_boundaries,
        relaxed_span_acc=corpus_match_rate(pairs, 0.5),
        n_documents=len(docs),
    )
    if pred_probs is not None:
        probs = np.concatenate([np.asarray(p) for p in pred_probs])
        labels = np.asarray(all_gold)
        report.ece = ece(probs, labels, bins)
        report.brier = brier(probs, labels)
    return report


# ---------------------------------------------------------------------------
# Faithfulness protocol
# ---------------------------------------------------------------------------

def faithfulness(
    docs: list[Document],
    trained,
    k_fraction: float = 0.10,
    mode: str = "mask",
    which: str = "top",
    taus: tuple = DEFAULT_TAUS,
    seed: int = 0,
) -> EvalReport:
    """Re-evaluate after perturbing the k top- or bottom-mask tokens per doc.

    Tokens are ranked by the clean run's gate values; floor(k * T) of them
    have their embedding and style rows zeroed (mask) or permuted among
    themselves (shuffle) before re-prediction.
    """
    if which not in ("top", "bottom"):
        raise ValueError("which must be 'top' or 'bottom'")
    labels_out, probs_out = [], []
    for doc in docs:
        clean = trained.predict(doc)
        t_len = len(doc.tokens)
        k = int(k_fraction * t_len)
        if k == 0:
            pred = clean
        else:
            order = np.argsort(clean.mask, kind="stable")
            idx = order[-k:] if which == "top" else order[:k]
            pred = trained.predict(
                doc,
                perturb_idx=sorted(int(i) for i in idx),
                perturb_mode=mode,
                perturb_seed=seed,
            )
        labels_out.append(pred.labels)
        probs_out.append(pred.marginals[:, 1] if pred.marginals.size else np.zeros(0))
    return build_report(docs, labels_out, probs_out, taus=taus)
