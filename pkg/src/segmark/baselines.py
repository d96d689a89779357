"""Zero-training detectors and the span-scoring adapter.

Both statistical detectors are percentile rules over per-token score
series from a human-trained language model: low log-probability or high
next-token entropy marks a token as likely AI. Percentiles use the
nearest-rank definition, so the flags are invariant under any strictly
monotone transform of the scores.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

from .corpus import Document, Span
from .stylometry import NgramLM

logger = logging.getLogger(__name__)


@dataclass
class TokenScoreSeries:
    scores: list[float]
    polarity: str  # "low_is_ai" | "high_is_ai"


def nearest_rank_percentile(scores: list[float], pct: float) -> float:
    """Nearest-rank percentile: sorted[ceil(pct/100 * n)] (1-indexed)."""
    if not scores:
        raise ValueError("empty score series")
    ordered = sorted(scores)
    rank = max(1, math.ceil(pct / 100 * len(ordered)))
    return ordered[rank - 1]


def flag_by_percentile(series: TokenScoreSeries, pct: float) -> list[int]:
    """1 for scores strictly beyond the percentile, in the AI direction."""
    cut = nearest_rank_percentile(series.scores, pct)
    if series.polarity == "low_is_ai":
        return [1 if s < cut else 0 for s in series.scores]
    return [1 if s > cut else 0 for s in series.scores]


def token_logprob_series(lm: NgramLM, doc: Document) -> TokenScoreSeries:
    words = doc.token_texts
    scores = [
        math.log(lm.prob(w, lm.context_of(words[:i]))) for i, w in enumerate(words)
    ]
    return TokenScoreSeries(scores, "low_is_ai")


def token_entropy_series(lm: NgramLM, doc: Document) -> TokenScoreSeries:
    words = doc.token_texts
    scores = [lm.entropy(lm.context_of(words[:i])) for i in range(len(words))]
    return TokenScoreSeries(scores, "high_is_ai")


def logp_detect(doc: Document, lm: NgramLM, pct: float = 25.0) -> list[int]:
    """Flag tokens below the per-document log-probability percentile."""
    if not doc.tokens:
        return []
    return flag_by_percentile(token_logprob_series(lm, doc), pct)


def entropy_detect(doc: Document, lm: NgramLM, pct: float = 75.0) -> list[int]:
    """Flag tokens above the per-document next-token-entropy percentile."""
    if not doc.tokens:
        return []
    return flag_by_percentile(token_entropy_series(lm, doc), pct)


# ---------------------------------------------------------------------------
# Span-scoring adapter for document-level external detectors
# ---------------------------------------------------------------------------

def partition_sentences(doc: Document) -> list[Span]:
    from .stylometry import sentence_slices

    return [Span(a, b) for a, b in sentence_slices(doc)]


def partition_fixed(doc: Document, k: int) -> list[Span]:
    n = len(doc.tokens)
    return [Span(i, min(n, i + k)) for i in range(0, n, k)]


def span_score_adapt(
    doc: Document,
    scorer: Callable[[str], float],
    partition: str = "sentence",
    fixed_k: int = 16,
    threshold: float = 0.5,
) -> list[int]:
    """Score each partition cell with an external detector and broadcast the
    thresholded score to the cell's tokens. A scorer failure labels the cell
    0 and is logged."""
    if not doc.tokens:
        return []
    if partition == "sentence":
        cells = partition_sentences(doc)
    elif partition == "fixed-k":
        cells = partition_fixed(doc, fixed_k)
    else:
        raise ValueError(f"unknown partition {partition!r}")
    labels = [0] * len(doc.tokens)
    for cell in cells:
        text = " ".join(doc.token_texts[cell.start : cell.end])
        try:
            score = scorer(text)
        except Exception:
            logger.exception("span scorer failed on %s[%d:%d]", doc.id, cell.start, cell.end)
            continue
        lab = 1 if score >= threshold else 0
        for i in range(cell.start, cell.end):
            labels[i] = lab
    return labels


def mock_gold_fraction_scorer(doc: Document) -> Callable[[str], float]:
    """Deterministic stand-in scorer: fraction of a cell's tokens that are
    gold-labeled AI, located by exact token-sequence match."""
    words = doc.token_texts

    def score(text: str) -> float:
        cell = text.split()
        for i in range(len(words) - len(cell) + 1):
            if words[i : i + len(cell)] == cell:
                labs = doc.labels[i : i + len(cell)]
                return sum(labs) / len(labs) if labs else 0.0
        raise ValueError("cell not found in document")

    return score
