import random

import pytest
from hypothesis import given, settings, strategies as st

from segmark.attacks import (
    ATTACK_KINDS,
    BASE_KINDS,
    HOMOGLYPHS,
    INVISIBLE_CHARS,
    PUNCT_MAP,
    AttackConfig,
    all_mixed,
    apply_attack,
)
from segmark.corpus import DocMeta, Document, parse_tagged, tokenize


def make_doc(text, doc_id="d0", labels=None):
    toks = tokenize(text)
    labels = labels or [0] * len(toks)
    from segmark.corpus import spans_from_labels

    return Document(doc_id, text, toks, labels, spans_from_labels(labels), DocMeta())


SAMPLE = parse_tagged(
    "The quick brown fox jumps, over the <AI_Start>lazy dog today.</AI_End>",
    doc_id="g1",
)


class TestConfig:
    def test_bad_kind(self):
        with pytest.raises(ValueError):
            AttackConfig("emoji")

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            AttackConfig("misspelling", rate=1.5)


class TestGoldenOutputs:
    # Pinned once from the generator itself at seed 7, rate 0.5.
    def test_misspelling_golden(self):
        out = apply_attack(SAMPLE, AttackConfig("misspelling", 0.5, 7))
        assert out.raw_text == "TThe quick rbown fox ujmps, over th lazy dof today."
        assert out.labels == SAMPLE.labels

    def test_punct_golden(self):
        out = apply_attack(SAMPLE, AttackConfig("punct_substitution", 0.5, 7))
        assert out.raw_text == "The quick brown fox jumps; over the lazy dog today."


class TestDefinitionalExamples:
    def test_invisible_char_inserted(self):
        doc = make_doc("cat")
        out = apply_attack(doc, AttackConfig("invisible_char", 1.0, 3))
        text = out.tokens[0].text
        assert len(text) == 4
        inserted = [c for c in text if c in INVISIBLE_CHARS]
        assert len(inserted) == 1
        assert text.replace(inserted[0], "") == "cat"
        # insertion is interior
        assert text[0] != inserted[0] and text[-1] != inserted[0]

    def test_case_swap_is_case_inversion(self):
        doc = make_doc("Hello")
        out = apply_attack(doc, AttackConfig("case_swap", 1.0, 0))
        swapped = out.tokens[0].text
        assert swapped != "Hello"
        assert swapped.lower() == "hello"

    def test_rate_zero_identity(self):
        for kind in ATTACK_KINDS:
            out = apply_attack(SAMPLE, AttackConfig(kind, 0.0, 9))
            assert out.raw_text == SAMPLE.raw_text
            assert out.meta.attack == kind

    def test_homoglyph_only_through_table(self):
        doc = make_doc("peace apple oxcart expose sock pox")
        out = apply_attack(doc, AttackConfig("char_substitution", 1.0, 1))
        for orig, new in zip(doc.tokens, out.tokens):
            if orig.text != new.text:
                diffs = [
                    (a, b) for a, b in zip(orig.text, new.text) if a != b
                ]
                assert len(diffs) == 1
                a, b = diffs[0]
                assert HOMOGLYPHS[a] == b

    def test_homoglyph_table_involution_free(self):
        # no substituted character maps back into the key set
        assert not set(HOMOGLYPHS.values()) & set(HOMOGLYPHS)

    def test_punct_map_on_last_punct(self):
        doc = make_doc("wait... what?!")
        out = apply_attack(doc, AttackConfig("punct_substitution", 1.0, 5))
        assert out.tokens[0].text == "wait..;"
        assert out.tokens[1].text == "what?."


class TestAllMixed:
    def test_full_coverage_at_rate_one(self):
        doc = make_doc("alpha bravo charlie delta echo")
        out = all_mixed(doc, rate=1.0, seed=11)
        changed = sum(
            1 for a, b in zip(doc.tokens, out.tokens) if a.text != b.text
        )
        assert changed == 5

    def test_same_seed_identical(self):
        a = all_mixed(SAMPLE, rate=0.4, seed=123)
        b = all_mixed(SAMPLE, rate=0.4, seed=123)
        assert a == b

    def test_sampler_cardinality(self):
        doc = make_doc(" ".join(f"token{i}" for i in range(10)))
        out = all_mixed(doc, rate=0.2, seed=2)
        changed = sum(
            1 for a, b in zip(doc.tokens, out.tokens) if a.text != b.text
        )
        assert changed == 2


@st.composite
def random_docs(draw):
    n = draw(st.integers(1, 30))
    rng = random.Random(draw(st.integers(0, 10**6)))
    words = []
    for _ in range(n):
        w = "".join(
            rng.choice("abcdefghijklmnop.!?,XYZ") for _ in range(rng.randint(1, 8))
        )
        words.append(w)
    labels = [draw(st.integers(0, 1)) for _ in range(n)]
    return make_doc(" ".join(words), doc_id=f"h{draw(st.integers(0, 999))}", labels=labels)


class TestInvariants:
    @settings(max_examples=150, deadline=None)
    @given(random_docs(), st.sampled_from(ATTACK_KINDS), st.integers(0, 2**32))
    def test_label_and_count_preservation(self, doc, kind, seed):
        cfg = AttackConfig(kind, rate=0.5, seed=seed)
        out = apply_attack(doc, cfg)
        assert len(out.tokens) == len(doc.tokens)
        assert out.labels == doc.labels
        assert out.gold_spans == doc.gold_spans
        out.validate()
        # determinism
        assert apply_attack(doc, cfg) == out

    @settings(max_examples=50, deadline=None)
    @given(random_docs(), st.sampled_from(BASE_KINDS))
    def test_no_whitespace_introduced(self, doc, kind):
        out = apply_attack(doc, AttackConfig(kind, rate=1.0, seed=0))
        for tok in out.tokens:
            assert not any(c.isspace() for c in tok.text)
