"""Seeded, label-preserving syntactic perturbations of documents.

All six attack kinds modify token text in place (no whitespace touched), so
token count, labels, and gold spans are invariant. Output is a pure function
of (doc.id, seed, kind, rate).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, replace
from importlib import resources

from .corpus import Document, Token

BASE_KINDS = (
    "misspelling",
    "char_substitution",
    "invisible_char",
    "punct_substitution",
    "case_swap",
)
ATTACK_KINDS = BASE_KINDS + ("all_mixed",)

INVISIBLE_CHARS = ("​", "‌", "‍", "⁠")

# Last mapped punctuation char of the token is replaced.
PUNCT_MAP = {
    ".": ";",
    ";": ".",
    ",": ";",
    "!": ".",
    "?": ".",
    ":": ";",
    '"': "'",
}

_QWERTY_ROWS = ["qwertyuiop", "asdfghjkl", "zxcvbnm"]


def _qwerty_neighbors() -> dict[str, str]:
    nbr: dict[str, str] = {}
    for row in _QWERTY_ROWS:
        for i, ch in enumerate(row):
            cands = ""
            if i > 0:
                cands += row[i - 1]
            if i + 1 < len(row):
                cands += row[i + 1]
            nbr[ch] = cands
    return nbr


QWERTY_NEIGHBORS = _qwerty_neighbors()


def _load_homoglyphs() -> dict[str, str]:
    with resources.files("segmark.data").joinpath("homoglyphs.json").open(
        encoding="utf-8"
    ) as f:
        return json.load(f)["map"]


HOMOGLYPHS = _load_homoglyphs()


@dataclass(frozen=True)
class AttackConfig:
    kind: str
    rate: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if not (0.0 <= self.rate <= 1.0):
            raise ValueError("rate must be in [0, 1]")


# ---------------------------------------------------------------------------
# Per-token perturbation operators: str -> str | None (None = no valid site)
# ---------------------------------------------------------------------------

def _misspell(text: str, rng: random.Random) -> str | None:
    alpha = [i for i, c in enumerate(text) if c.isalpha()]
    if not alpha:
        return None
    ops = []
    if len(text) >= 2:
        ops.append("transpose")
    if len(text) > 2:
        ops.append("delete")
    ops.append("duplicate")
    if any(text[i].lower() in QWERTY_NEIGHBORS for i in alpha):
        ops.append("qwerty")
    op = rng.choice(ops)
    if op == "transpose":
        i = rng.randrange(len(text) - 1)
        return text[:i] + text[i + 1] + text[i] + text[i + 2 :]
    if op == "delete":
        i = rng.choice(alpha)
        return text[:i] + text[i + 1 :]
    if op == "duplicate":
        i = rng.choice(alpha)
        return text[: i + 1] + text[i] + text[i + 1 :]
    # qwerty-neighbor replace, case-preserving
    sites = [i for i in alpha if text[i].lower() in QWERTY_NEIGHBORS]
    i = rng.choice(sites)
    repl = rng.choice(QWERTY_NEIGHBORS[text[i].lower()])
    if text[i].isupper():
        repl = repl.upper()
    return text[:i] + repl + text[i + 1 :]


def _substitute_char(text: str, rng: random.Random) -> str | None:
    sites = [i for i, c in enumerate(text) if c in HOMOGLYPHS]
    if not sites:
        return None
    i = rng.choice(sites)
    return text[:i] + HOMOGLYPHS[text[i]] + text[i + 1 :]


def _insert_invisible(text: str, rng: random.Random) -> str | None:
    if len(text) < 2:
        return None
    pos = rng.randrange(1, len(text))
    return text[:pos] + rng.choice(INVISIBLE_CHARS) + text[pos:]


def _swap_punct(text: str, rng: random.Random) -> str | None:
    sites = [i for i, c in enumerate(text) if c in PUNCT_MAP]
    if not sites:
        return None
    i = sites[-1]
    return text[:i] + PUNCT_MAP[text[i]] + text[i + 1 :]


def _swap_case(text: str, rng: random.Random) -> str | None:
    alpha = [i for i, c in enumerate(text) if c.isalpha()]
    if not alpha:
        return None
    flips = [i for i in alpha if rng.random() < 0.5]
    if not flips:
        flips = [rng.choice(alpha)]
    chars = list(text)
    for i in flips:
        chars[i] = chars[i].swapcase()
    out = "".join(chars)
    if out == text:  # swapcase can be identity for caseless alphabetics
        return None
    return out


_OPERATORS = {
    "misspelling": _misspell,
    "char_substitution": _substitute_char,
    "invisible_char": _insert_invisible,
    "punct_substitution": _swap_punct,
    "case_swap": _swap_case,
}


def _is_eligible(text: str, kind: str) -> bool:
    if kind in ("misspelling", "char_substitution", "case_swap"):
        return any(c.isalpha() for c in text)
    if kind == "punct_substitution":
        return any(c in PUNCT_MAP for c in text)
    if kind == "invisible_char":
        return len(text) >= 2
    raise ValueError(kind)


def _eligible_any(text: str) -> list[str]:
    return [k for k in BASE_KINDS if _is_eligible(text, k)]


def _doc_rng(doc: Document, cfg: AttackConfig) -> random.Random:
    material = f"{doc.id}|{cfg.seed}|{cfg.kind}|{cfg.rate}".encode("utf-8")
    digest = hashlib.blake2b(material, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _rebuild(doc: Document, new_texts: list[str], kind: str) -> Document:
    """Splice perturbed token texts back into raw_text, preserving gaps."""
    out = []
    cursor = 0
    new_tokens: list[Token] = []
    pos = 0
    for tok, text in zip(doc.tokens, new_texts):
        gap = doc.raw_text[cursor : tok.char_start]
        out.append(gap)
        pos += len(gap)
        out.append(text)
        new_tokens.append(Token(text, pos, pos + len(text)))
        pos += len(text)
        cursor = tok.char_end
    out.append(doc.raw_text[cursor:])
    return Document(
        id=doc.id,
        raw_text="".join(out),
        tokens=new_tokens,
        labels=list(doc.labels),
        gold_spans=list(doc.gold_spans),
        meta=replace(doc.meta, attack=kind),
    )


def apply_attack(doc: Document, cfg: AttackConfig) -> Document:
    """Perturb floor(rate * eligible) tokens; labels and token count unchanged.

    A selected token whose text offers no valid modification site is skipped
    and a replacement is drawn from the remaining eligible pool.
    """
    rng = _doc_rng(doc, cfg)
    texts = [t.text for t in doc.tokens]

    if cfg.kind == "all_mixed":
        eligible = [i for i, t in enumerate(texts) if _eligible_any(t)]
    else:
        eligible = [i for i, t in enumerate(texts) if _is_eligible(texts[i], cfg.kind)]

    target = int(cfg.rate * len(eligible))
    pool = list(eligible)
    rng.shuffle(pool)
    modified = 0
    for idx in pool:
        if modified >= target:
            break
        if cfg.kind == "all_mixed":
            kinds = _eligible_any(texts[idx])
            op = _OPERATORS[kinds[rng.randrange(len(kinds))]]
        else:
            op = _OPERATORS[cfg.kind]
        new = op(texts[idx], rng)
        if new is not None and new != texts[idx]:
            texts[idx] = new
            modified += 1
        # else: skipped; loop continues drawing replacements from the pool

    return _rebuild(doc, texts, cfg.kind)


def all_mixed(doc: Document, rate: float = 0.15, seed: int = 0) -> Document:
    return apply_attack(doc, AttackConfig("all_mixed", rate, seed))
