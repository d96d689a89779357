"""Command-line interface: data preparation, training, evaluation, review."""

from __future__ import annotations

import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click
import numpy as np

from . import attacks as atk
from . import corpus as cp
from . import evalkit as ev
from .baselines import entropy_detect, logp_detect, span_score_adapt
from .model import ModelConfig, TrainConfig, TrainedModel, train_model
from .stylometry import build_style_matrix, train_lm
from .synth import generate_corpus


@click.group()
def main():
    """Segment mixed human/AI-authored text and audit the predictions."""


# ---------------------------------------------------------------------------
# data


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["tagged", "jsonl"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def ingest(in_path, fmt, out_path):
    """Normalize tagged text or JSONL records into the corpus JSONL format."""
    if fmt == "jsonl":
        docs = list(cp.read_jsonl(in_path))
    else:
        docs = []
        with open(in_path, encoding="utf-8") as f:
            for i, line in enumerate(f):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    docs.append(cp.parse_tagged(line, doc_id=f"doc-{i:06d}"))
                except cp.ParseError as e:
                    raise click.ClickException(f"line {i + 1}: {e}")
    cp.write_jsonl(docs, out_path)
    click.echo(f"wrote {len(docs)} documents to {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, type=int)
@click.option("--ngram", default=3, type=int)
@click.option("--overlap", default=0.3, type=float)
@click.option("--ratios", default="0.7,0.2,0.1")
@click.option("--out-dir", required=True, type=click.Path())
def split(in_path, seed, ngram, overlap, ratios, out_dir):
    """Deterministic train/valid/test split with cross-split de-duplication."""
    docs = list(cp.read_jsonl(in_path))
    r = tuple(float(x) for x in ratios.split(","))
    result = cp.split_corpus(docs, ratios=r, seed=seed, ngram_n=ngram,
                             overlap_threshold=overlap)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", result.train), ("valid", result.valid),
                       ("test", result.test)):
        cp.write_jsonl(part, out / f"{name}.jsonl")
        click.echo(f"{name}: {len(part)} documents")
    click.echo(f"dropped for cross-split overlap: {len(result.dropped)}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True,
              type=click.Choice(sorted(atk.ATTACK_KINDS) + ["all"]))
@click.option("--rate", default=0.15, type=float)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def attack(in_path, kind, rate, seed, out_path):
    """Perturb documents; --kind all emits 7 variants (original + 6 attacks)."""
    docs = list(cp.read_jsonl(in_path))
    out = []
    for doc in docs:
        if kind == "all":
            out.append(doc)
            for k in sorted(atk.ATTACK_KINDS):
                var = atk.apply_attack(doc, atk.AttackConfig(k, rate, seed))
                var.id = f"{doc.id}#{k}"
                out.append(var)
        else:
            out.append(atk.apply_attack(doc, atk.AttackConfig(kind, rate, seed)))
    cp.write_jsonl(out, out_path)
    click.echo(f"wrote {len(out)} documents to {out_path}")


@main.command()
@click.option("--n", default=2000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def synth(n, seed, out_path):
    """Generate the synthetic mixed-authorship corpus."""
    cp.write_jsonl(generate_corpus(n, seed), out_path)
    click.echo(f"wrote {n} synthetic documents to {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--lm", "lm_path", required=True, type=click.Path())
@click.option("--window", default=5, type=int)
@click.option("--train-lm/--no-train-lm", "do_train", default=False,
              help="fit the LM on the human-labeled tokens first")
@click.option("--out", "out_path", required=True, type=click.Path())
def featurize(in_path, lm_path, window, do_train, out_path):
    """Write the per-token style feature matrix for each document."""
    from .model import human_only_view
    from .stylometry import NgramLM

    docs = list(cp.read_jsonl(in_path))
    if do_train:
        lm = train_lm([human_only_view(d) for d in docs])
        lm.save(lm_path)
    else:
        lm = NgramLM.load(lm_path)
    with open(out_path, "w", encoding="utf-8") as f:
        for doc in docs:
            mat = build_style_matrix(doc, lm, window)
            f.write(json.dumps({"id": doc.id, "features": mat.values.tolist()}))
            f.write("\n")
    click.echo(f"wrote features for {len(docs)} documents to {out_path}")


# ---------------------------------------------------------------------------
# model


def _load_train_config(path) -> tuple[TrainConfig, ModelConfig, int]:
    cfg = {}
    if path:
        with open(path, "rb") as f:
            cfg = tomllib.load(f)
    seed = cfg.pop("seed", 0)
    model_keys = {f.name for f in ModelConfig.__dataclass_fields__.values()}
    mc = {k: v for k, v in cfg.items() if k in model_keys}
    tc = {k: v for k, v in cfg.items() if k not in model_keys}
    if "lr_ladder" in tc:
        tc["lr_ladder"] = tuple(tc["lr_ladder"])
    return TrainConfig(**tc), ModelConfig(**mc), seed


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              help="directory holding train.jsonl and valid.jsonl")
@click.option("--out", "out_path", required=True, type=click.Path())
def train(config_path, data_dir, out_path):
    """Train a segmenter; config is a flat TOML of hyperparameters."""
    tcfg, mcfg, seed = _load_train_config(config_path)
    data = Path(data_dir)
    train_docs = list(cp.read_jsonl(data / "train.jsonl"))
    valid_docs = list(cp.read_jsonl(data / "valid.jsonl"))
    trained, log = train_model(
        train_docs, valid_docs, tcfg, mcfg, seed=seed,
        log_fn=lambda e: click.echo(json.dumps(e)),
    )
    trained.save(out_path)
    click.echo(f"saved checkpoint to {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def predict(model_path, in_path, out_path):
    """Write predicted labels, spans, and marginals per document."""
    trained = TrainedModel.load(model_path)
    docs = list(cp.read_jsonl(in_path))
    with open(out_path, "w", encoding="utf-8") as f:
        for doc in docs:
            p = trained.predict(doc)
            f.write(json.dumps({
                "id": doc.id,
                "labels": p.labels,
                "spans": [[s.start, s.end] for s in p.spans],
                "marginals": p.marginals[:, 1].tolist() if p.marginals.size else [],
            }))
            f.write("\n")
    click.echo(f"wrote predictions for {len(docs)} documents to {out_path}")


@main.command()
@click.option("--method", required=True,
              type=click.Choice(["logp", "entropy", "spanscore"]))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--lm", "lm_path", type=click.Path(exists=True),
              help="LM for logp/entropy; fitted on the fly when omitted")
@click.option("--pct", default=None, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
def baseline(method, in_path, lm_path, pct, out_path):
    """Detector baselines: percentile flags or span-scored partitions."""
    from .model import human_only_view
    from .stylometry import NgramLM

    docs = list(cp.read_jsonl(in_path))
    if method in ("logp", "entropy"):
        if lm_path:
            lm = NgramLM.load(lm_path)
        else:
            lm = train_lm([human_only_view(d) for d in docs])

    with open(out_path, "w", encoding="utf-8") as f:
        for doc in docs:
            if method == "logp":
                labels = logp_detect(doc, lm, pct if pct is not None else 25.0)
            elif method == "entropy":
                labels = entropy_detect(doc, lm, pct if pct is not None else 75.0)
            else:
                # offline stand-in scorer: fraction of repeated words per cell
                def scorer(text: str) -> float:
                    ws = text.lower().split()
                    return 1 - len(set(ws)) / len(ws) if ws else 0.0

                labels = span_score_adapt(doc, scorer, threshold=0.25)
            spans = cp.spans_from_labels(labels)
            f.write(json.dumps({
                "id": doc.id,
                "labels": labels,
                "spans": [[s.start, s.end] for s in spans],
            }))
            f.write("\n")
    click.echo(f"wrote {method} baseline for {len(docs)} documents to {out_path}")


# ---------------------------------------------------------------------------
# evaluation


def _read_predictions(path) -> dict[str, dict]:
    preds = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rec = json.loads(line)
                preds[rec["id"]] = rec
    return preds


@main.command()
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--taus", default="0.3,0.5,0.7,0.9")
@click.option("--out", "out_path", required=True, type=click.Path())
def evaluate(gold_path, pred_path, taus, out_path):
    """Aggregate metrics into report.json, a CSV, and rendered figures."""
    from .plots import render_report_figures

    docs = list(cp.read_jsonl(gold_path))
    preds = _read_predictions(pred_path)
    tau_list = tuple(float(t) for t in taus.split(","))
    labels, probs = [], []
    for d in docs:
        rec = preds.get(d.id)
        if rec is None:
            raise click.ClickException(f"no prediction for document {d.id!r}")
        labels.append(rec["labels"])
        probs.append(np.asarray(rec.get("marginals", []), dtype=np.float64))
    have_probs = all(len(p) == len(d.tokens) for p, d in zip(probs, docs))
    report = ev.build_report(docs, labels, probs if have_probs else None,
                             taus=tau_list)

    out_path = Path(out_path)
    out_dir = out_path.parent if out_path.parent != Path("") else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report.to_dict(), indent=2))

    # delimited summary next to the JSON
    csv_path = out_path.with_suffix(".csv")
    rows = [("metric", "value")]
    for t in tau_list:
        rows.append((f"sbda@{t}", f"{report.sbda[t]:.6f}"))
        rows.append((f"segprec@{t}", f"{report.segprec[t]:.6f}"))
    for name in ("token_accuracy", "token_precision", "token_recall",
                 "token_f1", "ece", "brier", "relaxed_span_acc"):
        rows.append((name, f"{getattr(report, name):.6f}"))
    csv_path.write_text("\n".join(",".join(r) for r in rows) + "\n")

    flat_probs = np.concatenate(probs) if have_probs and probs else None
    flat_labels = (np.concatenate([d.labels for d in docs])
                   if have_probs else None)
    figures = render_report_figures(report, out_dir, flat_probs, flat_labels)
    click.echo(f"report: {out_path}")
    click.echo(f"summary: {csv_path}")
    for p in figures:
        click.echo(f"figure: {p}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--valid", "valid_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path())
def calibrate(model_path, valid_path, out_path):
    """Fit a temperature on validation marginals; report ECE/Brier deltas."""
    trained = TrainedModel.load(model_path)
    docs = list(cp.read_jsonl(valid_path))
    probs, labels = [], []
    for d in docs:
        p = trained.predict(d)
        if p.marginals.size:
            probs.append(p.marginals[:, 1])
            labels.append(np.asarray(d.labels))
    probs = np.clip(np.concatenate(probs), 1e-12, 1 - 1e-12)
    labels = np.concatenate(labels)
    t_star = ev.fit_temperature(probs, labels)
    scaled = ev.apply_temperature(probs, t_star)
    result = {
        "temperature": t_star,
        "ece_before": ev.ece(probs, labels),
        "ece_after": ev.ece(scaled, labels),
        "brier_before": ev.brier(probs, labels),
        "brier_after": ev.brier(scaled, labels),
        "n_tokens": int(len(labels)),
    }
    click.echo(json.dumps(result, indent=2))
    if out_path:
        Path(out_path).write_text(json.dumps(result, indent=2))


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=0.10, type=float)
@click.option("--mode", default="mask", type=click.Choice(["mask", "shuffle"]))
def faithfulness(model_path, in_path, k, mode):
    """Compare degradation from perturbing top- vs bottom-gated tokens."""
    trained = TrainedModel.load(model_path)
    docs = list(cp.read_jsonl(in_path))
    preds = [trained.predict(d) for d in docs]
    base = ev.build_report(docs, [p.labels for p in preds])
    top = ev.faithfulness(docs, trained, k_fraction=k, mode=mode, which="top")
    bottom = ev.faithfulness(docs, trained, k_fraction=k, mode=mode, which="bottom")
    out = {
        "k_fraction": k,
        "mode": mode,
        "sbda@0.3": {
            "clean": base.sbda[0.3],
            "perturb_top": top.sbda[0.3],
            "perturb_bottom": bottom.sbda[0.3],
        },
    }
    click.echo(json.dumps(out, indent=2))


# ---------------------------------------------------------------------------
# review artifacts


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def hia(in_path, model_path, out_dir):
    """Export per-document attribution JSON for offline inspection."""
    from .hia import checkpoint_hash, export_corpus_hia

    trained = TrainedModel.load(model_path)
    docs = list(cp.read_jsonl(in_path))
    paths = export_corpus_hia(docs, trained, out_dir, checkpoint_hash(model_path))
    click.echo(f"wrote {len(paths)} attribution files to {out_dir}")


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--journal", "journal_path", default="corrections.jsonl",
              type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(data_path, model_path, journal_path, host, port):
    """Serve documents, predictions, and attributions to the review UI."""
    from .hia import serve as run_serve

    run_serve(data_path, model_path, journal_path, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
