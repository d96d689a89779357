import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from segmark.corpus import Span
from segmark.evalkit import (
    BOUNDARY_BUCKETS,
    boundary_error_hist,
    brier,
    corpus_match_rate,
    ece,
    fit_temperature,
    apply_temperature,
    iou,
    relaxed_span_acc,
    sbda,
    segprec,
    token_metrics,
)


# independent brute-force matcher over explicit token sets
def oracle_iou(a: Span, b: Span) -> float:
    sa = set(range(a.start, a.end))
    sb = set(range(b.start, b.end))
    return len(sa & sb) / len(sa | sb)


def oracle_sbda(gold, pred, tau):
    if not gold:
        return 1.0 if not pred else 0.0
    hits = 0
    for g in gold:
        if any(oracle_iou(g, p) >= tau for p in pred):
            hits += 1
    return hits / len(gold)


def random_span_config(rng, max_spans=10, length=60):
    def spans():
        out = []
        pos = 0
        for _ in range(rng.randint(0, max_spans)):
            start = pos + rng.randint(0, 5)
            end = start + rng.randint(1, 8)
            if end > length:
                break
            out.append(Span(start, end))
            pos = end + 1
        return out

    return spans(), spans()


class TestIou:
    def test_identical(self):
        assert iou(Span(2, 7), Span(2, 7)) == 1.0

    def test_disjoint(self):
        assert iou(Span(0, 3), Span(5, 9)) == 0.0

    def test_partial(self):
        assert iou(Span(0, 5), Span(2, 7)) == pytest.approx(3 / 7)

    @given(
        st.tuples(st.integers(0, 30), st.integers(1, 10)),
        st.tuples(st.integers(0, 30), st.integers(1, 10)),
    )
    def test_matches_set_oracle_and_symmetry(self, a, b):
        sa, sb = Span(a[0], a[0] + a[1]), Span(b[0], b[0] + b[1])
        assert iou(sa, sb) == pytest.approx(oracle_iou(sa, sb))
        assert iou(sa, sb) == iou(sb, sa)
        assert 0 <= iou(sa, sb) <= 1


class TestSpanMetrics:
    def test_perfect_prediction(self):
        gold = [Span(0, 5), Span(8, 12)]
        for tau in (0.3, 0.5, 0.7, 0.9):
            assert sbda(gold, gold, tau) == 1.0
            assert segprec(gold, gold, tau) == 1.0

    def test_empty_pred(self):
        assert sbda([Span(0, 3)], [], 0.5) == 0.0
        assert segprec([Span(0, 3)], [], 0.5) == 0.0

    def test_empty_conventions(self):
        assert sbda([], [], 0.5) == 1.0
        assert segprec([], [], 0.5) == 1.0
        assert sbda([], [Span(0, 1)], 0.5) == 0.0
        assert segprec([], [Span(0, 1)], 0.5) == 0.0

    def test_half_iou_thresholds(self):
        gold, pred = [Span(0, 10)], [Span(0, 5)]
        assert sbda(gold, pred, 0.3) == 1.0
        assert sbda(gold, pred, 0.5) == 1.0
        assert sbda(gold, pred, 0.7) == 0.0
        assert sbda(gold, pred, 0.9) == 0.0

    def test_segprec_partial(self):
        gold = [Span(0, 2)]
        pred = [Span(0, 2), Span(8, 9)]
        assert segprec(gold, pred, 0.5) == 0.5

    def test_relaxed_is_sbda_at_half(self):
        gold, pred = [Span(0, 10)], [Span(2, 9)]
        assert relaxed_span_acc(gold, pred) == sbda(gold, pred, 0.5)

    def test_randomized_vs_bruteforce(self):
        rng = random.Random(7)
        for _ in range(300):
            gold, pred = random_span_config(rng)
            for tau in (0.3, 0.5, 0.7, 0.9):
                assert sbda(gold, pred, tau) == oracle_sbda(gold, pred, tau)
                assert segprec(gold, pred, tau) == oracle_sbda(pred, gold, tau)

    def test_swap_symmetry_and_tau_monotonicity(self):
        rng = random.Random(8)
        for _ in range(100):
            gold, pred = random_span_config(rng)
            taus = (0.3, 0.5, 0.7, 0.9)
            vals = [sbda(gold, pred, t) for t in taus]
            assert vals == sorted(vals, reverse=True)
            for t in taus:
                assert sbda(gold, pred, t) == segprec(pred, gold, t)


class TestTokenMetrics:
    def test_perfect(self):
        m = token_metrics([0, 1, 1, 0], [0, 1, 1, 0])
        assert all(v == 1.0 for v in m.values())

    def test_all_zero_prediction(self):
        m = token_metrics([0, 1, 1, 0], [0, 0, 0, 0])
        assert m["recall"] == 0.0 and m["precision"] == 0.0

    def test_confusion_matrix_oracle(self):
        rng = random.Random(9)
        for _ in range(100):
            n = rng.randint(1, 40)
            g = [rng.randint(0, 1) for _ in range(n)]
            p = [rng.randint(0, 1) for _ in range(n)]
            m = token_metrics(g, p)
            tp = sum(gi and pi for gi, pi in zip(g, p))
            fp = sum((not gi) and pi for gi, pi in zip(g, p))
            fn = sum(gi and (not pi) for gi, pi in zip(g, p))
            tn = n - tp - fp - fn
            assert m["accuracy"] == pytest.approx((tp + tn) / n)
            assert m["precision"] == pytest.approx(tp / (tp + fp) if tp + fp else 0.0)
            assert m["recall"] == pytest.approx(tp / (tp + fn) if tp + fn else 0.0)


class TestBoundaryErrors:
    def test_off_by_one(self):
        rep = boundary_error_hist([Span(11, 20)], [Span(10, 20)])
        assert rep.hist["off_by_1"] == 1.0
        assert rep.exact_matches == 1  # the end boundary

    def test_exact_prediction(self):
        gold = [Span(0, 4), Span(8, 10)]
        rep = boundary_error_hist(gold, gold)
        assert rep.exact_matches == 4
        assert all(v == 0.0 for v in rep.hist.values())

    def test_hand_counted_multispan(self):
        gold = [Span(0, 10), Span(20, 30)]
        pred = [Span(2, 10), Span(24, 36)]
        rep = boundary_error_hist(gold, pred)
        # starts: 0 vs {2,24} -> 2; 20 vs {2,24} -> 4
        # ends: 10 vs {10,36} -> exact; 30 vs {10,36} -> 6
        assert rep.exact_matches == 1
        assert rep.total_boundaries == 4
        assert rep.hist["off_by_3"] == pytest.approx(1 / 3)
        assert rep.hist["off_by_5"] == pytest.approx(1 / 3)
        assert rep.hist["off_by_10"] == pytest.approx(1 / 3)

    def test_fractions_sum_to_one(self):
        rng = random.Random(10)
        for _ in range(100):
            gold, pred = random_span_config(rng)
            rep = boundary_error_hist(gold, pred)
            if rep.inexact:
                assert sum(rep.hist.values()) == pytest.approx(1.0, abs=1e-9)


class TestCalibration:
    def test_perfect_probs(self):
        probs = np.array([0.999, 0.001, 0.999, 0.001])
        labels = np.array([1, 0, 1, 0])
        assert ece(probs, labels) < 2e-3
        assert brier(probs, labels) < 1e-5

    def test_constant_half_balanced(self):
        probs = np.full(1000, 0.5)
        labels = np.array([0, 1] * 500)
        assert ece(probs, labels) == pytest.approx(0.0, abs=1e-9)
        assert brier(probs, labels) == pytest.approx(0.25)

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(11)
        probs = rng.uniform(0.01, 0.99, 500)
        labels = rng.integers(0, 2, 500)
        # brute-force 15-bin ECE
        conf = np.maximum(probs, 1 - probs)
        pred = (probs >= 0.5).astype(int)
        ok = (pred == labels).astype(float)
        total = 0.0
        for b in range(15):
            lo, hi = b / 15, (b + 1) / 15
            sel = (conf >= lo) & (conf < hi) if b < 14 else (conf >= lo)
            if sel.any():
                total += sel.mean() * abs(ok[sel].mean() - conf[sel].mean())
        assert ece(probs, labels, 15) == pytest.approx(total, abs=1e-12)
        assert brier(probs, labels) == pytest.approx(
            np.mean((probs - labels) ** 2), abs=1e-12
        )

    def test_permutation_invariance(self):
        rng = np.random.default_rng(12)
        probs = rng.uniform(0.01, 0.99, 200)
        labels = rng.integers(0, 2, 200)
        perm = rng.permutation(200)
        assert ece(probs, labels) == pytest.approx(ece(probs[perm], labels[perm]))
        assert brier(probs, labels) == pytest.approx(brier(probs[perm], labels[perm]))


class TestTemperature:
    def _calibrated_set(self, n=20000, seed=13):
        rng = np.random.default_rng(seed)
        probs = rng.uniform(0.02, 0.98, n)
        labels = (rng.uniform(0, 1, n) < probs).astype(int)
        return probs, labels

    def test_calibrated_inputs_give_unit_temperature(self):
        probs, labels = self._calibrated_set()
        t = fit_temperature(probs, labels)
        assert t == pytest.approx(1.0, abs=0.05)

    def test_doubled_logits_recovered(self):
        probs, labels = self._calibrated_set(seed=14)
        logits = np.log(probs / (1 - probs)) * 2.0
        sharp = 1 / (1 + np.exp(-logits))
        t = fit_temperature(sharp, labels)
        assert t == pytest.approx(2.0, abs=0.1)

    def test_never_worse_than_unit(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            probs = rng.uniform(0.05, 0.95, 300)
            labels = rng.integers(0, 2, 300)
            t = fit_temperature(probs, labels)
            logits = np.log(probs / (1 - probs))

            def nll(temp):
                p = 1 / (1 + np.exp(-logits / temp))
                return -np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p))

            assert nll(t) <= nll(1.0) + 1e-12

    def test_degenerate_labels_rejected(self):
        with pytest.raises(ValueError):
            fit_temperature(np.array([0.3, 0.6]), np.array([1, 1]))

    def test_apply_temperature_identity(self):
        probs = np.array([0.2, 0.7])
        assert np.allclose(apply_temperature(probs, 1.0), probs)


class TestCorpusMatchRate:
    def test_pooled_counting(self):
        pairs = [
            ([Span(0, 4)], [Span(0, 4)]),
            ([Span(0, 4), Span(6, 8)], [Span(20, 22)]),
        ]
        assert corpus_match_rate(pairs, 0.5) == pytest.approx(1 / 3)

    def test_all_empty(self):
        assert corpus_match_rate([([], []), ([], [])], 0.5) == 1.0
        assert corpus_match_rate([([], [Span(0, 1)])], 0.5) == 0.0
