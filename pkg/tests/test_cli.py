"""End-to-end command-line workflows on a small synthetic corpus."""

import json

import pytest
from click.testing import CliRunner

from segmark.cli import main
from segmark.corpus import read_jsonl, write_jsonl


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def corpus_file(tiny_corpus, tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(tiny_corpus, path)
    return path


def _ok(result):
    assert result.exit_code == 0, result.output
    return result


def test_synth_and_split(runner, tmp_path):
    corpus = tmp_path / "c.jsonl"
    _ok(runner.invoke(main, ["synth", "--n", "30", "--seed", "1", "--out", str(corpus)]))
    assert len(list(read_jsonl(corpus))) == 30
    _ok(runner.invoke(main, [
        "split", "--in", str(corpus), "--seed", "3", "--out-dir", str(tmp_path / "sp"),
    ]))
    train = list(read_jsonl(tmp_path / "sp" / "train.jsonl"))
    valid = list(read_jsonl(tmp_path / "sp" / "valid.jsonl"))
    test = list(read_jsonl(tmp_path / "sp" / "test.jsonl"))
    assert len(train) == 21 and len(valid) == 6 and len(test) == 3
    assert all(d.meta.split == "train" for d in train)


def test_ingest_tagged(runner, tmp_path):
    raw = tmp_path / "raw.txt"
    raw.write_text(
        "plain human words here\n"
        "human start <AI_Start>machine made middle</AI_End> human end\n"
    )
    out = tmp_path / "out.jsonl"
    _ok(runner.invoke(main, [
        "ingest", "--in", str(raw), "--format", "tagged", "--out", str(out),
    ]))
    docs = list(read_jsonl(out))
    assert [d.labels for d in docs] == [[0, 0, 0, 0], [0, 0, 1, 1, 1, 0, 0]]


def test_ingest_tagged_error_reports_line(runner, tmp_path):
    raw = tmp_path / "raw.txt"
    raw.write_text("fine line\nbad <AI_Start>unclosed\n")
    result = runner.invoke(main, [
        "ingest", "--in", str(raw), "--format", "tagged",
        "--out", str(tmp_path / "o.jsonl"),
    ])
    assert result.exit_code != 0
    assert "line 2" in result.output


def test_attack_all_emits_seven_variants(runner, corpus_file, tmp_path):
    out = tmp_path / "attacked.jsonl"
    _ok(runner.invoke(main, [
        "attack", "--in", str(corpus_file), "--kind", "all",
        "--rate", "0.15", "--seed", "9", "--out", str(out),
    ]))
    docs = list(read_jsonl(out))
    originals = list(read_jsonl(corpus_file))
    assert len(docs) == 7 * len(originals)
    first = docs[:7]
    assert first[0].id == originals[0].id
    assert {d.id.split("#")[-1] for d in first[1:]} == {
        "misspelling", "char_substitution", "invisible_char",
        "punct_substitution", "case_swap", "all_mixed",
    }
    # labels survive every variant
    assert all(d.labels == originals[0].labels for d in first)


def test_featurize(runner, corpus_file, tmp_path):
    out = tmp_path / "feat.jsonl"
    _ok(runner.invoke(main, [
        "featurize", "--in", str(corpus_file), "--lm", str(tmp_path / "lm.json"),
        "--train-lm", "--out", str(out),
    ]))
    docs = list(read_jsonl(corpus_file))
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(recs) == len(docs)
    assert len(recs[0]["features"]) == len(docs[0].tokens)
    assert len(recs[0]["features"][0]) == 5


def test_train_predict_evaluate_calibrate_roundtrip(runner, tiny_split, tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    write_jsonl(tiny_split.train, data / "train.jsonl")
    write_jsonl(tiny_split.valid, data / "valid.jsonl")
    write_jsonl(tiny_split.test, data / "test.jsonl")
    cfg = tmp_path / "train.toml"
    cfg.write_text(
        'epochs = 1\nbatch_size = 8\nlr_ladder = [3e-4, 1e-3, 1e-3, 1e-2]\n'
        'gate_internal = true\nseed = 0\n'
    )
    ckpt = tmp_path / "model.ckpt"
    _ok(runner.invoke(main, [
        "train", "--config", str(cfg), "--data", str(data), "--out", str(ckpt),
    ]))
    assert ckpt.exists()

    preds = tmp_path / "pred.jsonl"
    _ok(runner.invoke(main, [
        "predict", "--model", str(ckpt), "--in", str(data / "test.jsonl"),
        "--out", str(preds),
    ]))
    recs = [json.loads(l) for l in preds.read_text().splitlines()]
    assert len(recs) == len(tiny_split.test)

    report = tmp_path / "out" / "report.json"
    _ok(runner.invoke(main, [
        "evaluate", "--gold", str(data / "test.jsonl"), "--pred", str(preds),
        "--out", str(report),
    ]))
    body = json.loads(report.read_text())
    assert "sbda" in body and "0.3" in body["sbda"]
    assert (report.parent / "report.csv").exists()
    assert (report.parent / "boundary_errors.png").exists()
    assert (report.parent / "sbda_vs_tau.png").exists()
    assert (report.parent / "reliability.png").exists()

    result = _ok(runner.invoke(main, [
        "calibrate", "--model", str(ckpt), "--valid", str(data / "valid.jsonl"),
    ]))
    out = json.loads(result.output)
    assert 0.05 <= out["temperature"] <= 5.0
    assert out["ece_after"] <= out["ece_before"] + 1e-9

    hia_dir = tmp_path / "hia"
    _ok(runner.invoke(main, [
        "hia", "--in", str(data / "test.jsonl"), "--model", str(ckpt),
        "--out", str(hia_dir),
    ]))
    files = list(hia_dir.glob("*.hia.json"))
    assert len(files) == len(tiny_split.test)
    rec = json.loads(files[0].read_text())
    assert {"doc_id", "tokens", "mask", "attention_x_mask", "style_heatmap",
            "pred_spans", "pred_marginals"} <= set(rec)


def test_baseline_methods(runner, corpus_file, tmp_path):
    for method in ("logp", "entropy", "spanscore"):
        out = tmp_path / f"{method}.jsonl"
        _ok(runner.invoke(main, [
            "baseline", "--method", method, "--in", str(corpus_file),
            "--out", str(out),
        ]))
        recs = [json.loads(l) for l in out.read_text().splitlines()]
        assert recs and all(
            set(r["labels"]) <= {0, 1} for r in recs
        )
