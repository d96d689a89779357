"""Synthetic mixed-authorship corpus generator.

Human and AI segments share sentence length, punctuation, and function-word
mix; what separates them is lexical diversity. Each document's AI segments
draw content words from a tiny per-document pool (plus a sparse sprinkling
of AI-flavored words), so the windowed type-token ratio carries most of the
signal while token identity alone says little. This is deliberately the
regime where the style gate has information the token encoder does not.
"""

from __future__ import annotations

import random

from .corpus import DocMeta, Document, spans_from_labels, tokenize

_HUMAN_CONTENT = [
    "cat", "dog", "rain", "street", "coffee", "night", "friend", "game",
    "song", "river", "letter", "story", "door", "window", "garden", "moon",
    "train", "shoe", "bread", "smile", "laugh", "walk", "jump", "shout",
    "cloud", "stone", "fire", "grass", "bird", "fish", "chair", "clock",
    "dream", "voice", "road", "hill", "snow", "wind", "light", "shadow",
]
_HUMAN_FUNCTION = ["the", "a", "my", "his", "her", "and", "but", "so",
                   "on", "in", "at", "with", "was", "is", "had"]

_AI_CONTENT = [
    "paradigm", "framework", "synergy", "holistic", "multifaceted",
    "methodology", "furthermore", "consequently", "systematic", "delineate",
]


def _sentence(rng: random.Random, content_pool: list[str],
              ai_word_rate: float = 0.0) -> list[str]:
    """4-8 words, 35% function words, content from `content_pool`."""
    n = rng.randint(4, 8)
    words = []
    for _ in range(n):
        r = rng.random()
        if r < 0.35:
            words.append(rng.choice(_HUMAN_FUNCTION))
        elif r < 0.35 + ai_word_rate:
            words.append(rng.choice(_AI_CONTENT))
        else:
            words.append(rng.choice(content_pool))
    words[-1] += "."
    return words


def generate_document(rng: random.Random, doc_id: str) -> Document:
    """One document: mostly human prose with zero, one, or two short AI
    spans. AI spans stay well under a third of the document so a trivial
    label-everything predictor cannot clear IoU-based span matching."""
    kind = rng.random()
    # the whole document's AI text recycles the same two content words
    ai_pool = rng.sample(_HUMAN_CONTENT, k=2)

    def human_block(n_sent=None):
        words = []
        for _ in range(n_sent or rng.randint(3, 4)):
            words += _sentence(rng, _HUMAN_CONTENT)
        return words, 0

    def ai_block(n_sent=None):
        words = []
        for _ in range(n_sent or rng.randint(2, 3)):
            words += _sentence(rng, ai_pool, ai_word_rate=0.2)
        return words, 1

    if kind < 0.10:  # pure human
        segments = [human_block(rng.randint(6, 8))]
    elif kind < 0.45:  # sandwiched single AI span
        segments = [human_block(), ai_block(), human_block()]
    elif kind < 0.65:  # AI span at the end
        segments = [human_block(rng.randint(6, 8)), ai_block()]
    elif kind < 0.85:  # AI span at the start
        segments = [ai_block(), human_block(rng.randint(6, 8))]
    else:  # two AI spans
        segments = [
            human_block(),
            ai_block(2),
            human_block(),
            ai_block(2),
            human_block(rng.randint(2, 3)),
        ]

    words, labels = [], []
    for seg_words, lab in segments:
        words += seg_words
        labels += [lab] * len(seg_words)
    text = " ".join(words)
    tokens = tokenize(text)
    return Document(
        id=doc_id,
        raw_text=text,
        tokens=tokens,
        labels=labels,
        gold_spans=spans_from_labels(labels),
        meta=DocMeta(domain="synthetic", generator="synth-v1"),
    )


def generate_corpus(n_docs: int = 2000, seed: int = 0) -> list[Document]:
    rng = random.Random(seed)
    return [generate_document(rng, f"synth-{seed}-{i:05d}") for i in range(n_docs)]
