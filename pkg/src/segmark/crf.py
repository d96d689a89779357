"""Linear-chain CRF with explicit start/end states.

The transition matrix is (L+2) x (L+2); index L is the start state and
L+1 the end state. Sequence score = start transition + per-step label
transitions + end transition + emission scores. The partition function is
computed exactly by the forward algorithm in log space; marginals come
from forward-backward.
"""

from __future__ import annotations

import torch
from torch import nn


class LinearChainCRF(nn.Module):
    def __init__(self, n_labels: int = 2):
        super().__init__()
        self.n_labels = n_labels
        self.transitions = nn.Parameter(
            torch.zeros(n_labels + 2, n_labels + 2, dtype=torch.float64)
        )
        nn.init.xavier_uniform_(self.transitions)

    @property
    def start(self) -> int:
        return self.n_labels

    @property
    def end(self) -> int:
        return self.n_labels + 1

    def score(self, emissions: torch.Tensor, labels: list[int]) -> torch.Tensor:
        """Score of one label sequence: transitions (incl. start/end) + emissions."""
        t_len = emissions.shape[0]
        if len(labels) != t_len:
            raise ValueError("label sequence length mismatch")
        tr = self.transitions
        total = tr[self.start, labels[0]] + emissions[0, labels[0]]
        for t in range(1, t_len):
            total = total + tr[labels[t - 1], labels[t]] + emissions[t, labels[t]]
        return total + tr[labels[-1], self.end]

    def partition(self, emissions: torch.Tensor) -> torch.Tensor:
        """log sum over all label sequences, by the forward algorithm."""
        l = self.n_labels
        tr = self.transitions[:l, :l]
        alpha = self.transitions[self.start, :l] + emissions[0]
        for t in range(1, emissions.shape[0]):
            alpha = torch.logsumexp(alpha.unsqueeze(1) + tr, dim=0) + emissions[t]
        return torch.logsumexp(alpha + self.transitions[:l, self.end], dim=0)

    def nll(self, emissions: torch.Tensor, labels: list[int]) -> torch.Tensor:
        """Negative log-likelihood; >= 0, zero iff the gold path has all mass."""
        if not torch.isfinite(emissions).all():
            raise ValueError("non-finite emissions")
        return self.partition(emissions) - self.score(emissions, labels)

    def viterbi(self, emissions: torch.Tensor) -> list[int]:
        """Highest-scoring label sequence; ties resolve toward lower label index."""
        t_len = emissions.shape[0]
        if t_len == 0:
            return []
        l = self.n_labels
        with torch.no_grad():
            tr = self.transitions[:l, :l]
            delta = self.transitions[self.start, :l] + emissions[0]
            back = []
            for t in range(1, t_len):
                cand = delta.unsqueeze(1) + tr  # prev x cur
                best, argbest = cand.max(dim=0)
                back.append(argbest)
                delta = best + emissions[t]
            delta = delta + self.transitions[:l, self.end]
            path = [int(delta.argmax())]
            for argbest in reversed(back):
                path.append(int(argbest[path[-1]]))
        return path[::-1]

    def marginals(self, emissions: torch.Tensor) -> torch.Tensor:
        """Per-position posterior p(label_t | emissions), shape T x L."""
        t_len = emissions.shape[0]
        if t_len == 0:
            return emissions.new_zeros((0, self.n_labels))
        l = self.n_labels
        with torch.no_grad():
            tr = self.transitions[:l, :l]
            alphas = [self.transitions[self.start, :l] + emissions[0]]
            for t in range(1, t_len):
                alphas.append(
                    torch.logsumexp(alphas[-1].unsqueeze(1) + tr, dim=0)
                    + emissions[t]
                )
            betas = [self.transitions[:l, self.end]]
            for t in range(t_len - 1, 0, -1):
                betas.append(
                    torch.logsumexp(tr + (emissions[t] + betas[-1]).unsqueeze(0), dim=1)
                )
            betas.reverse()
            log_z = torch.logsumexp(alphas[-1] + self.transitions[:l, self.end], dim=0)
            post = torch.stack(
                [alphas[t] + betas[t] - log_z for t in range(t_len)]
            )
            return post.exp()
