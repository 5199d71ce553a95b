"""Recurrent next-action scorer: GRU/LSTM cells, ranking losses,
session-parallel training, incremental inference, persistence."""

from .cells import CellState, cell_backward, cell_forward
from .losses import batch_loss_and_grads, cross_entropy_loss, pairwise_loss
from .model import (CELL_KINDS, LOSS_KINDS, NetworkConfig, RecurrentModel,
                    forward_scores, param_shapes, softmax)
from .train import (Gradients, RnnRecommender, RnnSession, TrainResult, adagrad_update,
                    densify_gradients, loss_and_gradients, recommend_next, train)

__all__ = [
    "CELL_KINDS", "LOSS_KINDS", "CellState", "Gradients", "NetworkConfig",
    "RecurrentModel", "RnnRecommender", "RnnSession", "TrainResult",
    "adagrad_update", "batch_loss_and_grads", "cell_backward", "cell_forward",
    "cross_entropy_loss", "densify_gradients", "forward_scores",
    "loss_and_gradients", "pairwise_loss", "param_shapes", "recommend_next",
    "softmax", "train",
]
