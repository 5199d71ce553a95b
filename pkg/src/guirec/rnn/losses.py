"""Output-layer losses and their gradients.

Three choices per training step, given a hidden state h and a positive
(next) action, with N a set of sampled negative actions:

  cross_entropy   -log softmax(scores)[positive] over the whole action set
  bpr             -(1/|N|) sum_j log sigmoid(s_pos - s_j)
  top1            (1/|N|) sum_j sigmoid(s_j - s_pos) + sigmoid(s_j^2)

The pairwise losses only touch the positive and negative output columns,
so their w_out/b_out gradients are returned sparsely (unique columns plus
a dense slab); cross-entropy is inherently dense.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ValidationError


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def cross_entropy_loss(scores: np.ndarray, positive: int) -> float:
    """Scalar cross-entropy of one score vector against one positive index."""
    shifted = scores - scores.max()
    return float(np.log(np.sum(np.exp(shifted))) - shifted[positive])


def pairwise_loss(kind: str, s_pos: float, s_neg: Sequence[float]) -> float:
    """Scalar BPR/TOP1 value for one positive score and its negatives."""
    neg = np.asarray(s_neg, dtype=np.float64)
    if neg.size == 0:
        raise ValidationError(f"{kind} loss needs at least one negative")
    if kind == "bpr":
        return float(-np.mean(np.log(_sigmoid(s_pos - neg))))
    if kind == "top1":
        return float(np.mean(_sigmoid(neg - s_pos) + _sigmoid(neg * neg)))
    raise ValidationError(f"unknown pairwise loss {kind!r}")


# w_out/b_out gradient, either dense or restricted to the listed columns.
DenseGrad = tuple[np.ndarray, np.ndarray]
ColumnGrad = tuple[np.ndarray, np.ndarray, np.ndarray]  # (cols, d_w_cols, d_b_cols)
OutputGrad = Union[tuple[str, DenseGrad], tuple[str, ColumnGrad]]


def batch_loss_and_grads(params: dict[str, np.ndarray], h: np.ndarray, loss_kind: str,
                         targets: np.ndarray, negatives: Optional[Sequence[np.ndarray]],
                         active: np.ndarray, strict: bool = True
                         ) -> tuple[float, int, np.ndarray, OutputGrad]:
    """Mean loss over contributing lanes plus gradients.

    ``targets`` and ``negatives`` hold 0-based action indices; ``active``
    marks lanes that have a real (input, target) pair this step.  A lane
    whose negative set is empty contributes nothing; when every lane's set
    is empty that is an error under ``strict`` (the trainer instead skips
    such steps, which can occur at the tail of an epoch).  Returns
    (loss, n_contributing, d_h, output-layer gradient).
    """
    w_out, b_out = params["w_out"], params["b_out"]
    batch = h.shape[0]

    if loss_kind == "cross_entropy":
        contributing = active
        n_contrib = int(contributing.sum())
        if n_contrib == 0:
            return 0.0, 0, np.zeros_like(h), ("dense", (np.zeros_like(w_out),
                                                        np.zeros_like(b_out)))
        scores = h @ w_out + b_out
        shifted = scores - scores.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        z = exp.sum(axis=1)
        rows = np.flatnonzero(contributing)
        per_lane = np.log(z[rows]) - shifted[rows, targets[rows]]
        loss = float(per_lane.mean())

        d_scores = exp / z[:, None]
        d_scores[rows, targets[rows]] -= 1.0
        d_scores[~contributing] = 0.0
        d_scores /= n_contrib
        d_h = d_scores @ w_out.T
        return loss, n_contrib, d_h, ("dense", (h.T @ d_scores, d_scores.sum(axis=0)))

    if negatives is None:
        raise ValidationError(f"{loss_kind} loss requires negative samples")
    for lane in np.flatnonzero(active):
        if targets[lane] in negatives[lane]:
            raise ValidationError("positive action must not appear among its negatives")

    has_negs = np.array([active[i] and len(negatives[i]) > 0 for i in range(batch)])
    n_contrib = int(has_negs.sum())
    if strict and int(active.sum()) > 0 and n_contrib == 0:
        raise ValidationError(f"{loss_kind} loss got an empty negative set for every lane")
    if n_contrib == 0:
        zero = ("cols", (np.zeros(0, dtype=np.int64), np.zeros((h.shape[1], 0)), np.zeros(0)))
        return 0.0, 0, np.zeros_like(h), zero

    cols = np.unique(np.concatenate(
        [targets[has_negs]] + [negatives[i] for i in np.flatnonzero(has_negs)]))
    col_pos = {c: k for k, c in enumerate(cols)}
    s_cols = h @ w_out[:, cols] + b_out[cols]            # (B, |cols|)

    d_s = np.zeros_like(s_cols)
    total = 0.0
    for lane in np.flatnonzero(has_negs):
        neg_idx = np.array([col_pos[c] for c in negatives[lane]], dtype=np.int64)
        pos_idx = col_pos[int(targets[lane])]
        s_pos = s_cols[lane, pos_idx]
        s_neg = s_cols[lane, neg_idx]
        scale = 1.0 / (len(neg_idx) * n_contrib)
        if loss_kind == "bpr":
            sig = _sigmoid(s_pos - s_neg)
            total += -np.log(sig).mean()
            d_s[lane, neg_idx] += (1.0 - sig) * scale
            d_s[lane, pos_idx] -= (1.0 - sig).sum() * scale
        elif loss_kind == "top1":
            sig_rank = _sigmoid(s_neg - s_pos)
            sig_reg = _sigmoid(s_neg * s_neg)
            total += (sig_rank + sig_reg).mean()
            d_s[lane, neg_idx] += (sig_rank * (1.0 - sig_rank)
                                   + sig_reg * (1.0 - sig_reg) * 2.0 * s_neg) * scale
            d_s[lane, pos_idx] -= (sig_rank * (1.0 - sig_rank)).sum() * scale
        else:
            raise ValidationError(f"unknown loss kind {loss_kind!r}")

    loss = total / n_contrib
    d_h = d_s @ w_out[:, cols].T
    return loss, n_contrib, d_h, ("cols", (cols, h.T @ d_s, d_s.sum(axis=0)))
