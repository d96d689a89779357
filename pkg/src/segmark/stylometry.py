"""Per-token style features: surprisal, POS density, punctuation density,
lexical diversity, readability.

The feature matrix has one row per token and five columns in the order of
FEATURE_NAMES. After `build_style_matrix` every entry lies in [0, 1]:
surprisal is squashed by x / (x + b) with b the LM's median training-corpus
surprisal, the other four channels are ratios by construction.
"""

from __future__ import annotations

import json
import math
import re
import statistics
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .corpus import Document

FEATURE_NAMES = (
    "perplexity",
    "pos_density",
    "punct_density",
    "lexical_diversity",
    "readability",
)

UNK = "<unk>"
BOS = "<s>"

COARSE_TAGS = (
    "DET", "PRON", "ADP", "CONJ", "AUX", "PART",
    "NOUN", "VERB", "ADJ", "ADV", "NUM", "PUNCT",
)
FUNCTION_TAGS = frozenset({"DET", "PRON", "ADP", "CONJ", "AUX", "PART"})

_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_SENT_END = (".", "!", "?")


def _load_lexicon() -> dict[str, str]:
    with resources.files("segmark.data").joinpath("function_words.json").open(
        encoding="utf-8"
    ) as f:
        raw = json.load(f)
    lex = {}
    for tag, words in raw.items():
        if tag == "comment":
            continue
        for w in words:
            lex[w] = tag
    return lex


_LEXICON = _load_lexicon()


def _is_punct_char(c: str) -> bool:
    return unicodedata.category(c).startswith("P")


def _strip_outer_punct(word: str) -> str:
    return word.strip("".join(c for c in word if _is_punct_char(c)) or " ")


def coarse_tag(word: str) -> str:
    """Closed-class lexicon lookup, then suffix heuristics over 12 tags."""
    core = _strip_outer_punct(word).lower()
    if not core:
        return "PUNCT"
    if core in _LEXICON:
        return _LEXICON[core]
    if re.fullmatch(r"[\d.,:%-]+", core):
        return "NUM"
    if core.endswith("ly"):
        return "ADV"
    if core.endswith(("ing", "ize", "ise", "ified")):
        return "VERB"
    if core.endswith(("ous", "ful", "ive", "ical", "able", "ible", "less", "ish")):
        return "ADJ"
    return "NOUN"


# ---------------------------------------------------------------------------
# Add-k n-gram language model
# ---------------------------------------------------------------------------

@dataclass
class NgramLM:
    order: int = 3
    smoothing_k: float = 1.0
    vocab: set = field(default_factory=set)  # includes UNK, excludes BOS
    counts: dict = field(default_factory=dict)  # context tuple -> Counter
    context_totals: dict = field(default_factory=dict)
    median_surprisal: float = 1.0

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def _norm(self, word: str) -> str:
        return word if word in self.vocab else UNK

    def context_of(self, history: list[str]) -> tuple:
        ctx = [BOS] * (self.order - 1) + [self._norm(w) for w in history]
        return tuple(ctx[-(self.order - 1) :]) if self.order > 1 else ()

    def prob(self, word: str, context: tuple) -> float:
        """Add-k smoothed p(word | context); unknown words hit UNK."""
        w = self._norm(word)
        k, v = self.smoothing_k, self.vocab_size
        c = self.counts.get(context, {}).get(w, 0)
        total = self.context_totals.get(context, 0)
        denom = total + k * v
        if denom == 0:
            return 1.0 / v  # unseen context with k=0: fall back to uniform
        return (c + k) / denom

    def distribution(self, context: tuple) -> dict[str, float]:
        return {w: self.prob(w, context) for w in self.vocab}

    def entropy(self, context: tuple) -> float:
        """Natural-log entropy of p(. | context), in closed form over counts."""
        k, v = self.smoothing_k, self.vocab_size
        ctr = self.counts.get(context, {})
        total = self.context_totals.get(context, 0)
        denom = total + k * v
        if denom == 0:
            return math.log(v)
        h = 0.0
        for c in ctr.values():
            p = (c + k) / denom
            h -= p * math.log(p)
        n_unseen = v - len(ctr)
        if n_unseen and k > 0:
            p0 = k / denom
            h -= n_unseen * p0 * math.log(p0)
        return h

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "vocab": sorted(self.vocab),
            "counts": [
                [list(ctx), dict(ctr)] for ctx, ctr in sorted(self.counts.items())
            ],
            "median_surprisal": self.median_surprisal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NgramLM":
        lm = cls(order=d["order"], smoothing_k=d["smoothing_k"])
        lm.vocab = set(d["vocab"])
        for ctx, ctr in d["counts"]:
            lm.counts[tuple(ctx)] = Counter(ctr)
        lm.context_totals = {c: sum(ctr.values()) for c, ctr in lm.counts.items()}
        lm.median_surprisal = d["median_surprisal"]
        return lm

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "NgramLM":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def train_lm(docs: list[Document], order: int = 3,
             smoothing_k: float = 1.0) -> NgramLM:
    """Train an add-k word LM; the UNK symbol is reserved in the vocabulary."""
    if not docs:
        raise ValueError("empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    lm = NgramLM(order=order, smoothing_k=smoothing_k)
    for doc in docs:
        lm.vocab.update(doc.token_texts)
    lm.vocab.add(UNK)
    for doc in docs:
        words = doc.token_texts
        for i, w in enumerate(words):
            ctx = lm.context_of(words[:i])
            ctr = lm.counts.setdefault(ctx, Counter())
            ctr[w] += 1
            lm.context_totals[ctx] = lm.context_totals.get(ctx, 0) + 1
    surps = [s for doc in docs for s in token_surprisal(lm, doc)]
    med = statistics.median(surps) if surps else 1.0
    lm.median_surprisal = med if med > 0 else 1.0
    return lm


def token_surprisal(lm: NgramLM, doc: Document) -> list[float]:
    """-log2 p(token | context), BOS-padded at document start."""
    words = doc.token_texts
    out = []
    for i, w in enumerate(words):
        p = lm.prob(w, lm.context_of(words[:i]))
        out.append(-math.log2(p))
    return out


# ---------------------------------------------------------------------------
# Window features
# ---------------------------------------------------------------------------

def _window_fraction(flags: list[bool], window: int) -> list[float]:
    n = len(flags)
    out = []
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        out.append(sum(flags[lo:hi]) / (hi - lo))
    return out


def pos_density(doc: Document, window: int = 5) -> list[float]:
    """Fraction of function-word-tagged tokens in the centered window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    flags = [coarse_tag(w) in FUNCTION_TAGS for w in doc.token_texts]
    return _window_fraction(flags, window)


def punct_density(doc: Document, window: int = 5) -> list[float]:
    """Fraction of window tokens containing at least one punctuation char."""
    flags = [any(_is_punct_char(c) for c in w) for w in doc.token_texts]
    return _window_fraction(flags, window)


def lexical_diversity(doc: Document, window: int = 5) -> list[float]:
    """Case-folded type-token ratio within the centered window."""
    words = [w.casefold() for w in doc.token_texts]
    n = len(words)
    out = []
    for i in range(n):
        lo, hi = max(0, i - window), min(n, i + window + 1)
        cell = words[lo:hi]
        out.append(len(set(cell)) / len(cell))
    return out


def syllable_count(word: str) -> int:
    alpha = "".join(c for c in word.lower() if c.isalpha())
    return max(1, len(_VOWEL_GROUP_RE.findall(alpha)))


def sentence_slices(doc: Document) -> list[tuple[int, int]]:
    """Token-index sentence ranges; a sentence ends at a token ending .!? ."""
    bounds = []
    start = 0
    for i, w in enumerate(doc.token_texts):
        if w.endswith(_SENT_END):
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(doc.tokens):
        bounds.append((start, len(doc.tokens)))
    return bounds


def flesch_reading_ease(words: list[str]) -> float:
    n = len(words)
    syl = sum(syllable_count(w) for w in words)
    return 206.835 - 1.015 * n - 84.6 * (syl / n)


def readability(doc: Document) -> list[float]:
    """Clamped, rescaled Flesch Reading Ease broadcast over each sentence."""
    out = [0.0] * len(doc.tokens)
    for a, b in sentence_slices(doc):
        words = doc.token_texts[a:b]
        score = min(100.0, max(0.0, flesch_reading_ease(words))) / 100.0
        for i in range(a, b):
            out[i] = score
    return out


# ---------------------------------------------------------------------------
# Feature matrix
# ---------------------------------------------------------------------------

@dataclass
class StyleMatrix:
    values: np.ndarray  # T x 5, all entries in [0, 1]
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(FEATURE_NAMES):
            raise ValueError(f"bad style matrix shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("non-finite style feature")


def build_style_matrix(doc: Document, lm: NgramLM, window: int = 5) -> StyleMatrix:
    surp = np.asarray(token_surprisal(lm, doc), dtype=np.float64)
    b = lm.median_surprisal
    squashed = surp / (surp + b)
    cols = [
        squashed,
        np.asarray(pos_density(doc, window)),
        np.asarray(punct_density(doc, window)),
        np.asarray(lexical_diversity(doc, window)),
        np.asarray(readability(doc)),
    ]
    values = np.column_stack(cols) if len(doc.tokens) else np.zeros((0, 5))
    return StyleMatrix(values=values)
