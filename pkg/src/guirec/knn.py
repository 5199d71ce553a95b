"""Item-to-item nearest-neighbour baseline.

Actions that often occur in the same sessions are deemed similar:
``sim[i, j] = |S(i) & S(j)| / sqrt(|S(i)| * |S(j)|)`` where S(a) is the
set of sessions containing action a — cosine over binary session
incidence vectors.  Within-session multiplicity is ignored.  The matrix
is precomputed once; recommendations depend only on the latest action,
which makes the baseline stateless across a session (in contrast to the
recurrent models).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .catalog import SessionLog
from .errors import ValidationError


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense symmetric action-to-action similarity, entries in [0, 1]."""

    n_actions: int
    sim: np.ndarray


def fit_knn(log: SessionLog, zero_diagonal: bool = False) -> SimilarityMatrix:
    """Precompute the co-occurrence cosine matrix from session data.

    Actions in the catalog but absent from every session get all-zero
    rows.  The diagonal is 1 for observed actions (0 with
    ``zero_diagonal``); recommendations exclude self either way.
    """
    if not log.sessions:
        raise ValidationError("cannot fit a similarity matrix on an empty session log")
    n = len(log.catalog)
    incidence = np.zeros((len(log.sessions), n), dtype=np.float64)
    for row, session in enumerate(log.sessions):
        for a in session.action_ids:
            incidence[row, a - 1] = 1.0
    counts = incidence.T @ incidence            # counts[i, j] = |S(i) & S(j)|, exact integers
    occur = np.diag(counts).copy()
    denom = np.sqrt(np.outer(occur, occur))
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, counts / denom, 0.0)
    if zero_diagonal:
        np.fill_diagonal(sim, 0.0)
    return SimilarityMatrix(n_actions=n, sim=sim)


def knn_recommend(matrix: SimilarityMatrix, current_action: int, n: int) -> list[tuple[int, float]]:
    """Top-n most similar actions to the current one, self excluded.

    Ordered by descending similarity, ties by ascending action ID; when
    fewer than n actions have positive similarity the list is padded with
    zero-score actions in ascending-ID order, so it has n entries whenever
    the catalog allows.
    """
    if not (1 <= current_action <= matrix.n_actions):
        raise ValidationError(
            f"action ID {current_action} outside catalog range 1..{matrix.n_actions}")
    if n <= 0:
        return []
    row = matrix.sim[current_action - 1]
    candidates = np.delete(np.arange(matrix.n_actions), current_action - 1)
    order = candidates[np.lexsort((candidates, -row[candidates]))]
    return [(int(i) + 1, float(row[i])) for i in order[:n]]


class KnnRecommender:
    """Session adapter: scores come from the latest consumed action's row."""

    def __init__(self, matrix: SimilarityMatrix):
        self.matrix = matrix

    @property
    def n_actions(self) -> int:
        return self.matrix.n_actions

    def open_session(self) -> "KnnSession":
        return KnnSession(self.matrix)


class KnnSession:
    def __init__(self, matrix: SimilarityMatrix):
        self._matrix = matrix
        self._last: int | None = None

    def consume(self, action_id: int) -> None:
        if not (1 <= action_id <= self._matrix.n_actions):
            raise ValidationError(
                f"action ID {action_id} outside catalog range 1..{self._matrix.n_actions}")
        self._last = action_id

    def scores(self) -> np.ndarray:
        """Similarity row for the latest action, with self forced below all others."""
        if self._last is None:
            raise ValidationError("scores requested before any action was consumed")
        row = self._matrix.sim[self._last - 1].copy()
        row[self._last - 1] = -1.0
        return row


def write_similarity_csv(matrix: SimilarityMatrix, destination) -> None:
    """Dump nonzero upper-triangle entries as ``i,j,score`` for inspection."""
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "score"])
        for i in range(matrix.n_actions):
            for j in range(i + 1, matrix.n_actions):
                value = matrix.sim[i, j]
                if value != 0.0:
                    writer.writerow([i + 1, j + 1, repr(float(value))])
