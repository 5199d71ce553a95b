"""Session-parallel training and inference for the recurrent scorer.

Training keeps B lanes, one session per lane.  Each step, every lane
consumes its session's next action as input and is scored against the
following action as target; when a session runs out the next unstarted
session enters that lane and its hidden state resets to zero.  For the
pairwise losses, the negatives of a lane are exactly the other lanes'
targets in the same step (deduplicated, own target excluded).  Updates
are Adagrad.  By default gradients are truncated at step boundaries
(the carried hidden state is treated as a constant); setting
``bptt_unroll`` > 1 backpropagates through a window of that many recent
steps, never crossing a session reset.

Everything is deterministic given (log, config): the only randomness is
parameter initialization, and batching follows session order.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..catalog import SessionLog
from ..errors import ConfigError, ValidationError
from .cells import CellState, cell_backward, cell_forward
from .losses import batch_loss_and_grads
from .model import NetworkConfig, RecurrentModel, param_shapes, softmax

log = logging.getLogger(__name__)


@dataclass
class Gradients:
    """Per-step gradients; embedding rows and output columns stay sparse."""

    dense: dict[str, np.ndarray]
    embed_rows: tuple[np.ndarray, np.ndarray]                       # (rows, row grads)
    out_cols: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]]   # (cols, dW cols, db cols)


def densify_gradients(grads: Gradients, cfg: NetworkConfig) -> dict[str, np.ndarray]:
    """Expand a Gradients record to full tensors, for the gradient checks."""
    full = {name: np.zeros(shape) for name, shape in param_shapes(cfg).items()}
    for name, g in grads.dense.items():
        full[name] += g
    rows, row_grads = grads.embed_rows
    np.add.at(full["embed"], rows, row_grads)
    if grads.out_cols is not None:
        cols, d_w, d_b = grads.out_cols
        full["w_out"][:, cols] += d_w
        full["b_out"][cols] += d_b
    return full


WindowStep = tuple[np.ndarray, Optional[np.ndarray]]  # (inputs, reset mask before step)


def loss_and_gradients(model: RecurrentModel, state0: CellState,
                       steps: Sequence[WindowStep], targets: np.ndarray,
                       negatives: Optional[Sequence[np.ndarray]], active: np.ndarray,
                       strict: bool = True
                       ) -> tuple[float, int, Gradients, CellState]:
    """Forward a window of steps and backpropagate the final-step loss.

    ``state0`` is the recurrent state before the first window step and is
    treated as a constant (this is where truncation happens).  Lanes whose
    reset mask is set had their state zeroed immediately before that step,
    and gradient flow stops there.  All indices are 0-based.  Returns
    (mean loss, contributing lanes, gradients, state after the window).
    """
    params, cfg = model.params, model.cfg
    state = state0.copy()
    caches = []
    for x, reset in steps:
        if reset is not None and reset.any():
            state.reset_lanes(reset)
        state, cache = cell_forward(params, cfg.cell_kind, x, state, reset)
        caches.append(cache)

    loss, n_contrib, d_h, out_grad = batch_loss_and_grads(
        params, state.h, cfg.loss_kind, targets, negatives, active, strict=strict)

    grads_dense = {name: np.zeros(shape) for name, shape in param_shapes(cfg).items()
                   if name not in ("embed", "w_out", "b_out")}
    if out_grad[0] == "dense":
        d_w_out, d_b_out = out_grad[1]
        grads_dense["w_out"] = d_w_out
        grads_dense["b_out"] = d_b_out
        out_cols = None
    else:
        out_cols = out_grad[1]

    embed_idx, embed_val = [], []
    d_c = None
    for cache in reversed(caches):
        d_e, d_h, d_c = cell_backward(params, cfg.cell_kind, cache, d_h, d_c, grads_dense)
        embed_idx.append(cache.x)
        embed_val.append(d_e)

    rows = np.concatenate(embed_idx)
    vals = np.concatenate(embed_val)
    uniq, inverse = np.unique(rows, return_inverse=True)
    compact = np.zeros((uniq.size, vals.shape[1]))
    np.add.at(compact, inverse, vals)
    grads = Gradients(dense=grads_dense, embed_rows=(uniq, compact), out_cols=out_cols)
    return loss, n_contrib, grads, state


def adagrad_update(model: RecurrentModel, grads: Gradients) -> None:
    """In-place Adagrad step; untouched rows/columns keep their accumulators."""
    lr, eps = model.cfg.learning_rate, model.cfg.adagrad_epsilon
    for name, g in grads.dense.items():
        acc = model.accum[name]
        acc += g * g
        model.params[name] -= lr * g / (np.sqrt(acc) + eps)
    rows, row_grads = grads.embed_rows
    if rows.size:
        acc = model.accum["embed"]
        acc[rows] += row_grads * row_grads
        model.params["embed"][rows] -= lr * row_grads / (np.sqrt(acc[rows]) + eps)
    if grads.out_cols is not None:
        cols, d_w, d_b = grads.out_cols
        if cols.size:
            acc_w = model.accum["w_out"]
            acc_w[:, cols] += d_w * d_w
            model.params["w_out"][:, cols] -= lr * d_w / (np.sqrt(acc_w[:, cols]) + eps)
            acc_b = model.accum["b_out"]
            acc_b[cols] += d_b * d_b
            model.params["b_out"][cols] -= lr * d_b / (np.sqrt(acc_b[cols]) + eps)


@dataclass
class TrainResult:
    model: RecurrentModel
    epoch_losses: list[float] = field(default_factory=list)
    skipped_sessions: int = 0
    converged_epoch: Optional[int] = None
    steps_without_negatives: int = 0


def train(log_: SessionLog, cfg: NetworkConfig,
          progress: Optional[Callable[[int, float], None]] = None,
          stop_tol: Optional[float] = None) -> TrainResult:
    """Train a fresh model on a session log.

    Records the first epoch (>= 2) whose relative epoch-loss improvement
    drops below the convergence tolerance; with ``stop_tol`` set, training
    stops there, otherwise it runs all cfg.epochs.  Sessions of length 1
    cannot form an input/target pair and are skipped with a counted
    warning.
    """
    sequences = [np.asarray(s.action_ids, dtype=np.int64) - 1
                 for s in log_.sessions if len(s) >= 2]
    skipped = len(log_.sessions) - len(sequences)
    if skipped:
        log.warning("skipped %d session(s) of length 1 (no input/target pair)", skipped)
    for seq in sequences:
        if seq.min() < 0 or seq.max() >= cfg.n_actions:
            raise ValidationError(
                f"session contains action ID outside 1..{cfg.n_actions}")
    batch = cfg.batch_size
    if len(sequences) < batch:
        raise ConfigError(
            f"only {len(sequences)} usable sessions (length >= 2) but batch_size={batch}; "
            "use a smaller batch size")

    pairwise = cfg.loss_kind in ("bpr", "top1")
    model = RecurrentModel.init(cfg)
    result = TrainResult(model=model, skipped_sessions=skipped)

    for epoch in range(1, cfg.epochs + 1):
        lane_session = np.arange(batch)
        lane_pos = np.zeros(batch, dtype=np.int64)
        active = np.ones(batch, dtype=bool)
        fresh = np.ones(batch, dtype=bool)
        next_session = batch
        carried = CellState.zeros(cfg.cell_kind, batch, cfg.hidden_size)
        window: deque[WindowStep] = deque(maxlen=cfg.bptt_unroll)
        snapshots: deque[CellState] = deque(maxlen=cfg.bptt_unroll)
        step_losses = []

        while active.any():
            x = np.zeros(batch, dtype=np.int64)
            y = np.zeros(batch, dtype=np.int64)
            for lane in np.flatnonzero(active):
                seq = sequences[lane_session[lane]]
                x[lane] = seq[lane_pos[lane]]
                y[lane] = seq[lane_pos[lane] + 1]

            negatives = None
            if pairwise:
                uniq_targets = np.unique(y[active])
                negatives = [uniq_targets[uniq_targets != y[lane]] for lane in range(batch)]

            snapshots.append(carried.copy())
            window.append((x, fresh.copy()))
            fresh = np.zeros(batch, dtype=bool)

            loss, n_contrib, grads, carried = loss_and_gradients(
                model, snapshots[0], list(window), y, negatives, active, strict=False)
            if n_contrib > 0:
                step_losses.append(loss)
                adagrad_update(model, grads)
            elif pairwise:
                result.steps_without_negatives += 1

            for lane in np.flatnonzero(active):
                lane_pos[lane] += 1
                if lane_pos[lane] >= len(sequences[lane_session[lane]]) - 1:
                    if next_session < len(sequences):
                        lane_session[lane] = next_session
                        next_session += 1
                        lane_pos[lane] = 0
                        fresh[lane] = True
                    else:
                        active[lane] = False

        epoch_loss = float(np.mean(step_losses)) if step_losses else float("nan")
        result.epoch_losses.append(epoch_loss)
        if progress is not None:
            progress(epoch, epoch_loss)
        tol = stop_tol if stop_tol is not None else 1e-3
        if result.converged_epoch is None and epoch >= 2:
            prev, cur = result.epoch_losses[-2], result.epoch_losses[-1]
            improvement = (prev - cur) / abs(prev) if prev != 0 else 0.0
            if improvement < tol:
                result.converged_epoch = epoch
                if stop_tol is not None:
                    break
    return result


class RnnSession:
    """Stateful incremental inference over one session prefix."""

    def __init__(self, model: RecurrentModel):
        self._model = model
        self._state = CellState.zeros(model.cfg.cell_kind, 1, model.cfg.hidden_size)
        self._consumed = 0

    def consume(self, action_id: int) -> None:
        n = self._model.cfg.n_actions
        if not (1 <= action_id <= n):
            raise IndexError(f"action ID {action_id} outside catalog range 1..{n}")
        x = np.array([action_id - 1], dtype=np.int64)
        self._state, _ = cell_forward(self._model.params, self._model.cfg.cell_kind,
                                      x, self._state)
        self._consumed += 1

    def scores(self) -> np.ndarray:
        """Probability over all action IDs for the next action (index k = ID k+1)."""
        h = self._state.h[0]
        s = h @ self._model.params["w_out"] + self._model.params["b_out"]
        return softmax(s)

    def top(self, n: int) -> list[tuple[int, float]]:
        probs = self.scores()
        ids = np.arange(probs.size)
        order = np.lexsort((ids, -probs))
        return [(int(i) + 1, float(probs[i])) for i in order[:n]]


class RnnRecommender:
    """Adapter exposing a trained model to the evaluation protocol."""

    def __init__(self, model: RecurrentModel, name: str = "rnn"):
        self.model = model
        self.name = name

    @property
    def n_actions(self) -> int:
        return self.model.cfg.n_actions

    def open_session(self) -> RnnSession:
        return RnnSession(self.model)


def recommend_next(model: RecurrentModel, prefix: Sequence[int], n: int) -> list[tuple[int, float]]:
    """Top-n (action ID, probability) after running the prefix from a zero state.

    Equivalent to opening a session and consuming the prefix one action at
    a time; ties break by ascending action ID.
    """
    if not prefix:
        raise ValidationError("recommend_next needs a non-empty session prefix")
    session = RnnSession(model)
    for a in prefix:
        session.consume(a)
    return session.top(n)
