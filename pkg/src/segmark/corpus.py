"""Documents, tokenization, span tags, and corpus splitting.

A document is a whitespace-tokenized text with one {0,1} authorship label
per token (0 = human, 1 = AI). Gold spans are always recomputable from the
labels as maximal runs of 1s; they are stored redundantly for convenience
but validated on construction.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Iterator

OPEN_TAG = "<AI_Start>"
CLOSE_TAG = "</AI_End>"

_TOKEN_RE = re.compile(r"\S+")
_TAG_RE = re.compile(re.escape(OPEN_TAG) + "|" + re.escape(CLOSE_TAG))


class ParseError(ValueError):
    """Malformed tagged text. `position` is a character offset into the input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at char {position})")
        self.position = position


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token-index interval [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass
class DocMeta:
    domain: str = ""
    generator: str = ""
    attack: str | None = None
    split: str = ""


@dataclass
class Document:
    id: str
    raw_text: str
    tokens: list[Token]
    labels: list[int]
    gold_spans: list[Span]
    meta: DocMeta = field(default_factory=DocMeta)

    def validate(self) -> None:
        if len(self.labels) != len(self.tokens):
            raise ValueError(
                f"{self.id}: {len(self.labels)} labels vs {len(self.tokens)} tokens"
            )
        if any(l not in (0, 1) for l in self.labels):
            raise ValueError(f"{self.id}: labels must be 0 or 1")
        for tok in self.tokens:
            if self.raw_text[tok.char_start : tok.char_end] != tok.text:
                raise ValueError(f"{self.id}: token offsets do not match raw_text")
        if self.gold_spans != spans_from_labels(self.labels):
            raise ValueError(f"{self.id}: gold_spans inconsistent with labels")

    @property
    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]


def tokenize(raw_text: str) -> list[Token]:
    """Split on Unicode whitespace; zero-width characters stay inside tokens."""
    return [
        Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(raw_text)
    ]


def spans_from_labels(labels: list[int]) -> list[Span]:
    """Maximal runs of label 1, sorted and disjoint."""
    spans = []
    start = None
    for i, lab in enumerate(labels):
        if lab == 1 and start is None:
            start = i
        elif lab != 1 and start is not None:
            spans.append(Span(start, i))
            start = None
    if start is not None:
        spans.append(Span(start, len(labels)))
    return spans


def labels_from_spans(spans: list[Span], n_tokens: int) -> list[int]:
    labels = [0] * n_tokens
    for s in spans:
        for i in range(s.start, s.end):
            labels[i] = 1
    return labels


def _default_id(text: str) -> str:
    return "doc-" + hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


def parse_tagged(text_with_tags: str, doc_id: str | None = None,
                 meta: DocMeta | None = None) -> Document:
    """Parse <AI_Start>...</AI_End> tagged text into a labeled Document.

    Tags must be balanced, non-nested, and sit at token boundaries.
    Character offsets in the result refer to the de-tagged text.
    """
    pieces: list[str] = []
    regions: list[tuple[int, int]] = []  # AI char ranges in de-tagged coords
    tag_positions: list[int] = []  # de-tagged char offsets where a tag sat
    open_at: int | None = None
    cursor = 0
    out_len = 0
    for m in _TAG_RE.finditer(text_with_tags):
        chunk = text_with_tags[cursor : m.start()]
        pieces.append(chunk)
        out_len += len(chunk)
        tag_positions.append(out_len)
        if m.group() == OPEN_TAG:
            if open_at is not None:
                raise ParseError("nested <AI_Start>", m.start())
            open_at = out_len
        else:
            if open_at is None:
                raise ParseError("unmatched </AI_End>", m.start())
            regions.append((open_at, out_len))
            open_at = None
        cursor = m.end()
    if open_at is not None:
        raise ParseError("unclosed <AI_Start>", len(text_with_tags))
    pieces.append(text_with_tags[cursor:])
    raw_text = "".join(pieces)

    for pos in tag_positions:
        before = raw_text[pos - 1] if pos > 0 else " "
        after = raw_text[pos] if pos < len(raw_text) else " "
        if not before.isspace() and not after.isspace():
            raise ParseError("tag inside a word", pos)

    tokens = tokenize(raw_text)
    labels = []
    for tok in tokens:
        inside = any(a <= tok.char_start and tok.char_end <= b for a, b in regions)
        labels.append(1 if inside else 0)
    doc = Document(
        id=doc_id or _default_id(text_with_tags),
        raw_text=raw_text,
        tokens=tokens,
        labels=labels,
        gold_spans=spans_from_labels(labels),
        meta=meta or DocMeta(),
    )
    doc.validate()
    return doc


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------

def to_record(doc: Document) -> dict:
    return {
        "id": doc.id,
        "text": doc.raw_text,
        "labels": list(doc.labels),
        "spans": [[s.start, s.end] for s in doc.gold_spans],
        "meta": asdict(doc.meta),
    }


def from_record(rec: dict) -> Document:
    meta = DocMeta(**rec.get("meta", {}))
    tokens = tokenize(rec["text"])
    doc = Document(
        id=rec["id"],
        raw_text=rec["text"],
        tokens=tokens,
        labels=[int(x) for x in rec["labels"]],
        gold_spans=[Span(a, b) for a, b in rec.get("spans", [])],
        meta=meta,
    )
    doc.validate()
    return doc


def write_jsonl(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(json.dumps(to_record(doc), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                docs.append(from_record(json.loads(line)))
    return docs


def iter_jsonl(path: str | Path) -> Iterator[Document]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield from_record(json.loads(line))


# ---------------------------------------------------------------------------
# Corpus splitting with n-gram leakage control
# ---------------------------------------------------------------------------

@dataclass
class SplitResult:
    train: list[Document]
    valid: list[Document]
    test: list[Document]
    dropped: list[dict]  # {"id", "split", "conflicts_with", "jaccard"}

    def __iter__(self):
        return iter((self.train, self.valid, self.test))


def _ngram_set(doc: Document, n: int) -> frozenset[tuple[str, ...]]:
    words = doc.token_texts
    return frozenset(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def ngram_jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def split_corpus(
    docs: list[Document],
    ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
    ngram_n: int = 3,
    overlap_threshold: float = 0.3,
    seed: int = 0,
    stratify_key=None,
) -> SplitResult:
    """Deterministic shuffled split with cross-split n-gram hygiene.

    Any document in a later split (test > valid > train) whose word-n-gram
    Jaccard overlap with an earlier-split document exceeds
    `overlap_threshold` is dropped and reported.
    """
    if not docs:
        raise ValueError("empty corpus")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    if not (0 < overlap_threshold <= 1):
        raise ValueError("overlap_threshold must be in (0, 1]")

    rng = random.Random(seed)

    def assign(group: list[Document]) -> tuple[list, list, list]:
        order = sorted(group, key=lambda d: d.id)
        rng.shuffle(order)
        n = len(order)
        n_train = int(n * ratios[0])
        n_valid = int(n * ratios[1])
        return (
            order[:n_train],
            order[n_train : n_train + n_valid],
            order[n_train + n_valid :],
        )

    if stratify_key is None:
        train, valid, test = assign(docs)
    else:
        groups: dict = {}
        for d in docs:
            groups.setdefault(stratify_key(d), []).append(d)
        train, valid, test = [], [], []
        for key in sorted(groups):
            tr, va, te = assign(groups[key])
            train += tr
            valid += va
            test += te

    grams = {d.id: _ngram_set(d, ngram_n) for d in docs}
    dropped: list[dict] = []

    def filter_later(later: list[Document], split_name: str,
                     earlier: list[Document]) -> list[Document]:
        kept = []
        for d in later:
            conflict = None
            for e in earlier:
                j = ngram_jaccard(grams[d.id], grams[e.id])
                if j > overlap_threshold:
                    conflict = (e.id, j)
                    break
            if conflict is None:
                kept.append(d)
            else:
                dropped.append({
                    "id": d.id,
                    "split": split_name,
                    "conflicts_with": conflict[0],
                    "jaccard": conflict[1],
                })
        return kept

    valid = filter_later(valid, "valid", train)
    test = filter_later(test, "test", train + valid)

    for d, name in [(x, "train") for x in train] + \
                   [(x, "valid") for x in valid] + \
                   [(x, "test") for x in test]:
        d.meta.split = name
    return SplitResult(train, valid, test, dropped)
