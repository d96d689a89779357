"""Soft attribution gate over encoder states.

Per-token style vectors are projected with a ReLU layer, contextualized by
multi-head self-attention (no positional encoding, so the gate is
permutation-equivariant), reduced to a scalar per token by a sigmoid over
the attended row sum, and multiplied into the encoder output row-wise.

The style hidden size (64) is not divisible by the head count (5); heads
use dim ceil(64/5) = 13 and the 65-wide concatenation is mapped back to 64
by the output projection.
"""

from __future__ import annotations

import math

import torch
from torch import nn


class InfoMask(nn.Module):
    def __init__(self, feat_dim: int = 5, hidden: int = 64, heads: int = 5):
        super().__init__()
        self.feat_dim = feat_dim
        self.hidden = hidden
        self.heads = heads
        self.head_dim = math.ceil(hidden / heads)
        inner = self.heads * self.head_dim
        self.proj = nn.Linear(feat_dim, hidden)
        self.q_proj = nn.Linear(hidden, inner)
        self.k_proj = nn.Linear(hidden, inner)
        self.v_proj = nn.Linear(hidden, inner)
        self.out_proj = nn.Linear(inner, hidden)
        self.double()
        for p in self.parameters():
            if p.dim() > 1:
                nn.init.xavier_uniform_(p)
        with torch.no_grad():
            # Start with the gate open (row sum ~ +2, m ~ 0.88). A gate that
            # starts near 0.5 on top of an untrained encoder gets driven to 0
            # early in training (zeroed emissions are the lowest-variance fit)
            # and never recovers; biasing it open is the same remedy as a
            # positive LSTM forget-gate bias.
            self.out_proj.bias.fill_(2.0 / hidden)
            # Tie query and key projections at init (scaled up from plain
            # Xavier) so attention scores start as style-similarity: tokens
            # attend to stylistically similar tokens, which makes the mask
            # token-specific from the first step. With independent small
            # Q/K the softmax starts uniform, every row of the attended
            # matrix is the same mixture, and the per-token gate sits on a
            # symmetric saddle it cannot leave at this scale.
            tied = torch.empty_like(self.q_proj.weight)
            nn.init.xavier_uniform_(tied, gain=16.0)
            self.q_proj.weight.copy_(tied)
            self.k_proj.weight.copy_(tied)
            self.q_proj.bias.zero_()
            self.k_proj.bias.zero_()

    def project_styles(self, styles: torch.Tensor) -> torch.Tensor:
        """v_i = ReLU(W_s s_i + b_s); styles is T x f."""
        if styles.shape[-1] != self.feat_dim:
            raise ValueError(
                f"expected {self.feat_dim} style features, got {styles.shape[-1]}"
            )
        return torch.relu(self.proj(styles))

    def style_attention(self, v: torch.Tensor) -> torch.Tensor:
        """Scaled dot-product multi-head self-attention over the T positions."""
        t = v.shape[0]
        h, d = self.heads, self.head_dim
        q = self.q_proj(v).reshape(t, h, d).transpose(0, 1)  # H x T x d
        k = self.k_proj(v).reshape(t, h, d).transpose(0, 1)
        val = self.v_proj(v).reshape(t, h, d).transpose(0, 1)
        scores = q @ k.transpose(1, 2) / math.sqrt(d)  # H x T x T
        attn = torch.softmax(scores, dim=-1)
        ctx = attn @ val  # H x T x d
        ctx = ctx.transpose(0, 1).reshape(t, h * d)
        return self.out_proj(ctx)

    def forward(self, styles: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (mask m of shape T, attended matrix A of shape T x hidden)."""
        v = self.project_styles(styles)
        a = self.style_attention(v)
        return compute_mask(a), a


def compute_mask(attended: torch.Tensor) -> torch.Tensor:
    """m_i = sigmoid(sum_j A_ij)."""
    return torch.sigmoid(attended.sum(dim=-1))


def gate(states: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Row-wise scalar scaling of encoder states: z~_i = m_i * z_i."""
    return states * mask.unsqueeze(-1)
