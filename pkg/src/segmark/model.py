"""Trainable segmenter: hash embedding -> BiGRU -> style gate -> CRF.

Everything runs in float64 on CPU. Training is deterministic for a fixed
seed. Long documents are chunked at `max_seq_len` with a 64-token overlap;
overlapping label votes are stitched by majority.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from torch import nn

from .corpus import Document, DocMeta, Span, spans_from_labels, tokenize
from .crf import LinearChainCRF
from .infomask import InfoMask, gate
from .stylometry import NgramLM, build_style_matrix, train_lm


@dataclass
class ModelConfig:
    vocab_buckets: int = 2**16
    d_emb: int = 64
    d_enc: int = 64  # 32 per direction
    style_dim: int = 5
    style_hidden: int = 64
    attention_heads: int = 5
    n_labels: int = 2
    max_seq_len: int = 512
    chunk_overlap: int = 64
    window: int = 5
    lm_order: int = 3
    lm_smoothing_k: float = 0.1
    gate_internal: bool = False  # gate embeddings instead of encoder output
    use_infomask: bool = True  # False forces the gate to 1 (ablation)


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 5
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    dropout_start: float = 0.1
    dropout_end: float = 0.3
    warmup_frac: float = 0.1
    patience: int = 2
    # layer-group ladder, shallowest (embedding) to deepest (CRF)
    lr_ladder: tuple = (1e-6, 5e-6, 1e-5, 1e-4)
    lr_depth_decay: float = 0.95
    # scratch-training multiplier; the ladder values target pretrained backbones
    lr_scale: float = 1.0
    # freeze the gate for the first k epochs so the encoder learns before
    # the gate can collapse toward zero on top of uninformative states
    gate_freeze_epochs: int = 0
    # optional lr multiplier for the gate group only; the gate's useful
    # operating range is narrow (the sigmoid saturates quickly when the
    # attention row sums drift), so it often needs a much colder rate
    # than the rest of the ladder
    infomask_lr_scale: float = 1.0
    # data-dependent gate init: before training, rescale and recenter the
    # attention output projection so the row sums over a sample of real
    # training tokens land at mean `gate_calibrate_mean` with unit-order
    # spread, keeping the sigmoid in its responsive range. Off by default
    # (pretrained backbones keep the gate responsive without it).
    gate_calibrate: bool = False
    gate_calibrate_mean: float = 2.0
    gate_calibrate_std: float = 1.0
    # re-run the calibration at every epoch boundary. Training pushes the
    # row sums' common mode up monotonically (amplifying states through
    # the gate always lowers the loss a little) until the sigmoid
    # saturates and the gate stops learning; recalibrating each epoch
    # strips the common mode again and keeps only the token-specific
    # shape the gate has learned.
    gate_recalibrate: bool = False

    def __post_init__(self):
        if not (0 <= self.dropout_start < 1 and 0 <= self.dropout_end < 1):
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size <= 0 or self.epochs <= 0 or self.grad_clip <= 0:
            raise ValueError("batch_size, epochs, grad_clip must be positive")


def hash_token(text: str, buckets: int) -> int:
    return zlib.crc32(text.encode("utf-8")) % buckets


def clip_grad_norm(parameters, max_norm: float) -> float:
    """Exact global-norm clipping (no epsilon fudge in the scale factor)."""
    grads = [p.grad for p in parameters if p.grad is not None]
    if not grads:
        return 0.0
    total = torch.sqrt(sum((g**2).sum() for g in grads))
    if total > max_norm:
        scale = max_norm / total
        for g in grads:
            g.mul_(scale)
    return float(total)


class Segmenter(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embedding = nn.Embedding(cfg.vocab_buckets, cfg.d_emb)
        self.gru = nn.GRU(
            cfg.d_emb, cfg.d_enc // 2, bidirectional=True, batch_first=True
        )
        self.infomask = InfoMask(cfg.style_dim, cfg.style_hidden, cfg.attention_heads)
        self.emission = nn.Linear(cfg.d_enc, cfg.n_labels)
        self.crf = LinearChainCRF(cfg.n_labels)
        self.dropout = nn.Dropout(0.0)
        self.double()
        self._xavier_init()

    def _xavier_init(self):
        nn.init.xavier_uniform_(self.embedding.weight)
        for name, p in self.gru.named_parameters():
            if "weight" in name:
                nn.init.xavier_uniform_(p)
        nn.init.xavier_uniform_(self.emission.weight)

    def token_ids(self, doc: Document) -> torch.Tensor:
        return torch.tensor(
            [hash_token(t.text, self.cfg.vocab_buckets) for t in doc.tokens],
            dtype=torch.long,
        )

    def forward(
        self,
        token_ids: torch.Tensor,
        styles: torch.Tensor,
        perturb_idx: list[int] | None = None,
        perturb_mode: str = "mask",
        perturb_seed: int = 0,
    ) -> dict:
        """Emissions plus the gate intermediates for one document (length T).

        `perturb_idx` supports the faithfulness protocol: the selected token
        rows of the embedding and style inputs are zeroed ("mask") or
        permuted among themselves ("shuffle") before the forward pass.
        """
        emb = self.embedding(token_ids)
        if perturb_idx:
            emb = emb.clone()
            styles = styles.clone()
            if perturb_mode == "mask":
                emb[perturb_idx] = 0.0
                styles[perturb_idx] = 0.0
            elif perturb_mode == "shuffle":
                g = torch.Generator().manual_seed(perturb_seed)
                perm = torch.tensor(perturb_idx)[
                    torch.randperm(len(perturb_idx), generator=g)
                ]
                emb[perturb_idx] = emb[perm]
                styles[perturb_idx] = styles[perm]
            else:
                raise ValueError(f"unknown perturb mode {perturb_mode!r}")

        if self.cfg.use_infomask:
            mask, attended = self.infomask(styles)
        else:
            mask = torch.ones(len(token_ids), dtype=torch.float64)
            attended = torch.zeros(
                len(token_ids), self.cfg.style_hidden, dtype=torch.float64
            )

        if self.cfg.gate_internal:
            emb = gate(emb, mask)
        enc, _ = self.gru(emb.unsqueeze(0))
        enc = self.dropout(enc.squeeze(0))
        gated = enc if self.cfg.gate_internal else gate(enc, mask)
        emissions = self.emission(gated)
        return {
            "emissions": emissions,
            "mask": mask,
            "attended": attended,
            "gated": gated,
        }

    def param_groups(self) -> list[dict]:
        """Four depth-ordered groups: embedding, recurrence, style gate, CRF."""
        return [
            {"params": list(self.embedding.parameters()), "name": "embedding"},
            {"params": list(self.gru.parameters()), "name": "recurrence"},
            {"params": list(self.infomask.parameters()), "name": "infomask"},
            {
                "params": list(self.emission.parameters())
                + list(self.crf.parameters()),
                "name": "crf",
            },
        ]


# ---------------------------------------------------------------------------
# Trained bundle: model + LM + config
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


@dataclass
class Prediction:
    labels: list[int]
    spans: list[Span]
    marginals: np.ndarray  # T x L
    mask: np.ndarray  # T


class TrainedModel:
    """A Segmenter plus the style LM it was trained with."""

    def __init__(self, model: Segmenter, lm: NgramLM):
        self.model = model
        self.lm = lm

    @property
    def cfg(self) -> ModelConfig:
        return self.model.cfg

    def styles(self, doc: Document) -> torch.Tensor:
        sm = build_style_matrix(doc, self.lm, self.cfg.window)
        return torch.from_numpy(sm.values)

    def _chunks(self, t_len: int) -> list[tuple[int, int]]:
        ms = self.cfg.max_seq_len
        if t_len <= ms:
            return [(0, t_len)]
        step = ms - self.cfg.chunk_overlap
        out = []
        start = 0
        while start < t_len:
            out.append((start, min(t_len, start + ms)))
            if start + ms >= t_len:
                break
            start += step
        return out

    def predict(
        self,
        doc: Document,
        perturb_idx: list[int] | None = None,
        perturb_mode: str = "mask",
        perturb_seed: int = 0,
    ) -> Prediction:
        t_len = len(doc.tokens)
        if t_len == 0:
            return Prediction([], [], np.zeros((0, self.cfg.n_labels)), np.zeros(0))
        self.model.eval()
        ids = self.model.token_ids(doc)
        styles = self.styles(doc)
        votes = [[] for _ in range(t_len)]
        marg_sum = np.zeros((t_len, self.cfg.n_labels))
        marg_cnt = np.zeros(t_len)
        mask_out = np.zeros(t_len)
        with torch.no_grad():
            for a, b in self._chunks(t_len):
                sub_perturb = (
                    [i - a for i in perturb_idx if a <= i < b] if perturb_idx else None
                )
                out = self.model(
                    ids[a:b], styles[a:b], sub_perturb, perturb_mode, perturb_seed
                )
                labels = self.model.crf.viterbi(out["emissions"])
                marg = self.model.crf.marginals(out["emissions"]).numpy()
                for t in range(a, b):
                    votes[t].append(labels[t - a])
                marg_sum[a:b] += marg
                marg_cnt[a:b] += 1
                mask_out[a:b] = out["mask"].numpy()
        labels = [
            0 if v.count(0) >= v.count(1) else 1 for v in votes
        ]  # majority, ties to human
        marginals = marg_sum / marg_cnt[:, None]
        return Prediction(labels, spans_from_labels(labels), marginals, mask_out)

    def export_intermediates(self, doc: Document) -> dict:
        """Single-pass forward with all gate internals (no chunk stitching)."""
        self.model.eval()
        with torch.no_grad():
            out = self.model(self.model.token_ids(doc), self.styles(doc))
            out["marginals"] = self.model.crf.marginals(out["emissions"])
            out["labels"] = self.model.crf.viterbi(out["emissions"])
        return out

    def save(self, path) -> None:
        torch.save(
            {
                "version": CHECKPOINT_VERSION,
                "model_cfg": asdict(self.cfg),
                "state_dict": self.model.state_dict(),
                "lm": self.lm.to_dict(),
            },
            path,
        )

    @classmethod
    def load(cls, path) -> "TrainedModel":
        blob = torch.load(path, weights_only=False)
        if blob.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {blob.get('version')}")
        model = Segmenter(ModelConfig(**blob["model_cfg"]))
        model.load_state_dict(blob["state_dict"])
        return cls(model, NgramLM.from_dict(blob["lm"]))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def human_only_view(doc: Document) -> Document:
    """Document containing only the human-labeled tokens (LM training input)."""
    words = [t.text for t, lab in zip(doc.tokens, doc.labels) if lab == 0]
    text = " ".join(words)
    toks = tokenize(text)
    return Document(doc.id + "#human", text, toks, [0] * len(toks), [], DocMeta())


def _calibrate_gate(model: "Segmenter", examples, cfg: TrainConfig, sample: int = 64):
    """Data-dependent rescale/recenter of the gate's attention row sums.

    The gate is sigmoid(rowsum(A)); rowsum decomposes into a common-mode
    term (the output-projection column sums dotted with the mean context)
    plus a small token-specific term. At random init the common mode
    dominates and the sigmoid saturates, killing the gradient to the
    token-specific part. Scaling the output projection so the row sums
    have unit-order spread over real tokens, then shifting its bias so
    their mean sits at `gate_calibrate_mean`, puts every token in the
    sigmoid's responsive range without changing which tokens attend where.
    """
    rows = []
    with torch.no_grad():
        for _, styles, _ in examples[:sample]:
            _, attended = model.infomask(styles)
            rows.append(attended.sum(dim=-1))
        rows = torch.cat(rows)
        mu, sd = rows.mean().item(), rows.std().item()
        bias_sum = model.infomask.out_proj.bias.sum().item()
        alpha = cfg.gate_calibrate_std / max(sd, 1e-12)
        model.infomask.out_proj.weight.mul_(alpha)
        new_bias_sum = cfg.gate_calibrate_mean - alpha * (mu - bias_sum)
        model.infomask.out_proj.bias.fill_(new_bias_sum / model.infomask.hidden)


def train_model(
    train_docs: list[Document],
    valid_docs: list[Document],
    cfg: TrainConfig | None = None,
    model_cfg: ModelConfig | None = None,
    seed: int = 0,
    log_fn=None,
) -> tuple[TrainedModel, list[dict]]:
    """Full training loop; returns the trained bundle and a per-epoch log.

    AdamW with four depth-ordered parameter groups, linear warmup then
    cosine annealing, global gradient-norm clipping, dropout annealed
    linearly across epochs, early stop on validation SBDA@0.3.
    """
    from .evalkit import sbda  # local import to avoid a module cycle

    cfg = cfg or TrainConfig()
    model_cfg = model_cfg or ModelConfig()
    if not train_docs or not valid_docs:
        raise ValueError("non-empty train and valid splits required")

    torch.manual_seed(seed)
    lm = train_lm(
        [human_only_view(d) for d in train_docs],
        order=model_cfg.lm_order,
        smoothing_k=model_cfg.lm_smoothing_k,
    )
    model = Segmenter(model_cfg)
    trained = TrainedModel(model, lm)

    examples = []
    for doc in train_docs:
        if len(doc.tokens) == 0:
            continue
        ids = model.token_ids(doc)
        styles = trained.styles(doc)
        for a, b in trained._chunks(len(doc.tokens)):
            examples.append((ids[a:b], styles[a:b], doc.labels[a:b]))

    if cfg.gate_calibrate and model_cfg.use_infomask:
        _calibrate_gate(model, examples, cfg)

    n_groups = len(model.param_groups())
    groups = []
    for depth, g in enumerate(model.param_groups()):
        lr = (
            cfg.lr_ladder[depth]
            * cfg.lr_depth_decay ** (n_groups - 1 - depth)
            * cfg.lr_scale
        )
        if g["name"] == "infomask":
            lr *= cfg.infomask_lr_scale
        groups.append({"params": g["params"], "lr": lr})
    opt = torch.optim.AdamW(groups, weight_decay=cfg.weight_decay)

    n_batches = math.ceil(len(examples) / cfg.batch_size)
    total_steps = cfg.epochs * n_batches
    warmup = max(1, int(cfg.warmup_frac * total_steps))

    def lr_lambda(step):
        if step < warmup:
            return (step + 1) / warmup
        frac = (step - warmup) / max(1, total_steps - warmup)
        return 0.5 * (1 + math.cos(math.pi * min(1.0, frac)))

    sched = torch.optim.lr_scheduler.LambdaLR(opt, lr_lambda)

    order = torch.randperm(len(examples)).tolist()
    best_sbda = -1.0
    best_state = None
    epochs_since_best = 0
    log: list[dict] = []
    step = 0

    gate_params = list(model.infomask.parameters())

    for epoch in range(cfg.epochs):
        frozen = epoch < cfg.gate_freeze_epochs
        for p_ in gate_params:
            p_.requires_grad_(not frozen)
        if cfg.epochs > 1:
            p = cfg.dropout_start + (cfg.dropout_end - cfg.dropout_start) * epoch / (
                cfg.epochs - 1
            )
        else:
            p = cfg.dropout_start
        model.dropout.p = p
        model.train()
        epoch_loss = 0.0
        order = [order[i] for i in torch.randperm(len(order)).tolist()]
        for b in range(n_batches):
            batch = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            opt.zero_grad()
            loss = 0.0
            for i in batch:
                ids, styles, labels = examples[i]
                out = model(ids, styles)
                loss = loss + model.crf.nll(out["emissions"], labels) / len(labels)
            loss = loss / len(batch)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch} batch {b}: loss={loss}"
                )
            loss.backward()
            clip_grad_norm(list(model.parameters()), cfg.grad_clip)
            opt.step()
            sched.step()
            step += 1
            epoch_loss += float(loss.detach())

        if cfg.gate_recalibrate and model_cfg.use_infomask:
            _calibrate_gate(model, examples, cfg)

        val = _validation_sbda(trained, valid_docs, sbda)
        entry = {
            "epoch": epoch,
            "train_loss": epoch_loss / n_batches,
            "valid_sbda_0.3": val,
            "dropout": p,
        }
        log.append(entry)
        if log_fn:
            log_fn(entry)
        if val >= best_sbda:
            # ties keep the later (more trained) state; patience still
            # counts a tie as "no improvement"
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
        if val > best_sbda:
            best_sbda = val
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break

    if best_state is not None:
        model.load_state_dict(best_state)
    return trained, log


def _validation_sbda(trained: TrainedModel, docs: list[Document], sbda_fn) -> float:
    vals = []
    for doc in docs:
        pred = trained.predict(doc)
        vals.append(sbda_fn(doc.gold_spans, pred.spans, 0.3))
    return float(np.mean(vals)) if vals else 0.0
