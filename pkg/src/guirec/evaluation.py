"""Train/test splitting, incremental-reveal evaluation, top-n metrics.

A test session is scored by revealing it one action at a time: the first
action seeds the recommender's session state, and after every revealed
prefix the recommender ranks all actions, scored against the actual next
action.  With this single-relevant-item protocol:

  precision@n  = hit / n        (hit = 1 when the next action ranks <= n)
  recall@n     = hit
  reciprocal rank = 1/rank when rank <= n, else 0

Per-session metrics average over that session's prediction points, and
the report averages over sessions.  An alternative "remaining" relevance
mode (relevant set = everything after the prefix) is available behind a
config switch for comparison; the default next-item mode is the one the
rest of the package is calibrated against.

Recommenders plug in through a tiny protocol: ``open_session()`` returns
an object with ``consume(action_id)`` and ``scores() -> ndarray`` (index
k scores action ID k+1).  Ranking sorts by descending score with
ascending-ID tie-break, so any strictly monotone rescoring leaves every
metric unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .catalog import SessionLog
from .errors import ValidationError
from .rng import generator

DEFAULT_CUTOFFS = (1, 5, 10, 20)


class SessionScorer(Protocol):
    def consume(self, action_id: int) -> None: ...
    def scores(self) -> np.ndarray: ...


class Recommender(Protocol):
    def open_session(self) -> SessionScorer: ...


@dataclass(frozen=True)
class EvalConfig:
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS
    split_ratio: float = 0.8
    seed: int = 0
    relevance: str = "next"  # or "remaining"

    def __post_init__(self):
        if not self.cutoffs or any(c < 1 for c in self.cutoffs):
            raise ValidationError("cutoffs must be >= 1")
        if list(self.cutoffs) != sorted(set(self.cutoffs)):
            raise ValidationError("cutoffs must be strictly increasing")
        if not (0.0 < self.split_ratio < 1.0):
            raise ValidationError("split_ratio must be in (0, 1)")
        if self.relevance not in ("next", "remaining"):
            raise ValidationError("relevance must be 'next' or 'remaining'")


@dataclass
class ModelMetrics:
    """precision/recall/mrr keyed by cutoff, for one model."""

    precision: dict[int, float] = field(default_factory=dict)
    recall: dict[int, float] = field(default_factory=dict)
    mrr: dict[int, float] = field(default_factory=dict)


@dataclass
class EvalReport:
    metrics: dict[str, ModelMetrics] = field(default_factory=dict)
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS
    points: int = 0
    skipped_sessions: int = 0

    def merge(self, other: "EvalReport") -> "EvalReport":
        if other.cutoffs != self.cutoffs:
            raise ValidationError("cannot merge reports with different cutoffs")
        merged = EvalReport(metrics={**self.metrics, **other.metrics}, cutoffs=self.cutoffs,
                            points=max(self.points, other.points),
                            skipped_sessions=max(self.skipped_sessions, other.skipped_sessions))
        return merged

    def rows(self) -> list[tuple]:
        out = []
        for name in self.metrics:
            m = self.metrics[name]
            for c in self.cutoffs:
                out.append((name, c, m.precision[c], m.recall[c], m.mrr[c],
                            self.points, self.skipped_sessions))
        return out

    def write_csv(self, destination) -> None:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["model", "cutoff", "precision", "recall", "mrr",
                             "points", "skipped"])
            for name, c, p, r, m, points, skipped in self.rows():
                writer.writerow([name, c, repr(p), repr(r), repr(m), points, skipped])

    def format_table(self) -> str:
        lines = [f"{'model':<16} {'cutoff':>6} {'precision':>10} {'recall':>10} {'mrr':>10}"]
        for name, c, p, r, m, _, _ in self.rows():
            lines.append(f"{name:<16} {c:>6} {p:>10.4f} {r:>10.4f} {m:>10.4f}")
        lines.append(f"prediction points: {self.points}; skipped sessions: "
                     f"{self.skipped_sessions}")
        return "\n".join(lines)


def split_sessions(log: SessionLog, cfg: EvalConfig) -> tuple[SessionLog, SessionLog]:
    """Uniform random session-level split; the catalog is shared.

    floor(N * ratio) sessions go to training.  Deterministic for a given
    seed.  Short test sessions stay in the test log; evaluation skips and
    counts them.
    """
    n = len(log.sessions)
    if n < 5:
        raise ValidationError(f"need at least 5 sessions to split, got {n}")
    rng = generator(cfg.seed)
    order = rng.permutation(n)
    n_train = int(np.floor(n * cfg.split_ratio))
    train_idx = sorted(order[:n_train].tolist())
    test_idx = sorted(order[n_train:].tolist())
    train = SessionLog(sessions=tuple(log.sessions[i] for i in train_idx), catalog=log.catalog)
    test = SessionLog(sessions=tuple(log.sessions[i] for i in test_idx), catalog=log.catalog)
    return train, test


def _check_ranked_list(ranked: Sequence[int], n: int) -> None:
    if len(ranked) < n:
        raise ValidationError(f"ranked list has {len(ranked)} entries, need at least {n}")
    if len(set(ranked)) != len(ranked):
        raise ValidationError("ranked list contains duplicate action IDs")


def precision_at_n(ranked: Sequence[int], relevant: int, n: int) -> float:
    _check_ranked_list(ranked, n)
    return (1.0 if relevant in ranked[:n] else 0.0) / n


def recall_at_n(ranked: Sequence[int], relevant: int, n: int) -> float:
    _check_ranked_list(ranked, n)
    return 1.0 if relevant in ranked[:n] else 0.0


def mrr_at_n(ranked: Sequence[int], relevant: int, n: int) -> float:
    """Reciprocal rank, zero when the relevant action ranks below n."""
    _check_ranked_list(ranked, n)
    for position, action in enumerate(ranked[:n], start=1):
        if action == relevant:
            return 1.0 / position
    return 0.0


def rank_all(scores: np.ndarray) -> np.ndarray:
    """Full ranking of action IDs by descending score, ties ascending ID."""
    ids = np.arange(scores.size)
    return ids[np.lexsort((ids, -scores))] + 1


def _rank_of(scores: np.ndarray, relevant: int) -> int:
    """1-based rank of ``relevant`` under descending score / ascending-ID order."""
    idx = relevant - 1
    s = scores[idx]
    better = int(np.sum(scores > s))
    tied_before = int(np.sum(scores[:idx] == s))
    return better + tied_before + 1


def sequential_evaluate(recommender: Recommender, test: SessionLog, cfg: EvalConfig,
                        name: str = "model") -> EvalReport:
    """Incremental-reveal evaluation of one recommender over a test log.

    Sessions shorter than 2 actions carry no ground truth and are skipped
    (counted).  Sessions are processed and aggregated in log order, so the
    report is deterministic.
    """
    cutoffs = cfg.cutoffs
    per_session: dict[str, list[np.ndarray]] = {"precision": [], "recall": [], "mrr": []}
    points = 0
    skipped = 0
    for session in test.sessions:
        ids = session.action_ids
        if len(ids) < 2:
            skipped += 1
            continue
        sums = {k: np.zeros(len(cutoffs)) for k in per_session}
        scorer = recommender.open_session()
        for t in range(len(ids) - 1):
            scorer.consume(ids[t])
            scores = scorer.scores()
            if cfg.relevance == "next":
                rank = _rank_of(scores, ids[t + 1])
                for k, n in enumerate(cutoffs):
                    hit = 1.0 if rank <= n else 0.0
                    sums["precision"][k] += hit / n
                    sums["recall"][k] += hit
                    sums["mrr"][k] += (1.0 / rank) if rank <= n else 0.0
            else:
                remaining = set(ids[t + 1:])
                ranked = rank_all(scores)
                for k, n in enumerate(cutoffs):
                    top = ranked[:n]
                    inter = sum(1 for a in top if int(a) in remaining)
                    first = next((pos for pos, a in enumerate(top, start=1)
                                  if int(a) in remaining), None)
                    sums["precision"][k] += inter / n
                    sums["recall"][k] += inter / len(remaining)
                    sums["mrr"][k] += (1.0 / first) if first is not None else 0.0
            points += 1
        n_points = len(ids) - 1
        for k in per_session:
            per_session[k].append(sums[k] / n_points)

    if not per_session["precision"]:
        raise ValidationError("no evaluable test sessions (all shorter than 2 actions)")
    metrics = ModelMetrics()
    for k, store in (("precision", metrics.precision), ("recall", metrics.recall),
                     ("mrr", metrics.mrr)):
        mean = np.mean(np.stack(per_session[k]), axis=0)
        for j, c in enumerate(cutoffs):
            store[c] = float(mean[j])
    return EvalReport(metrics={name: metrics}, cutoffs=cutoffs, points=points,
                      skipped_sessions=skipped)


def evaluate_models(recommenders: Iterable[tuple[str, Recommender]], test: SessionLog,
                    cfg: EvalConfig) -> EvalReport:
    """Evaluate several recommenders under the identical protocol."""
    report: EvalReport | None = None
    for name, rec in recommenders:
        piece = sequential_evaluate(rec, test, cfg, name=name)
        report = piece if report is None else report.merge(piece)
    if report is None:
        raise ValidationError("no recommenders given")
    return report
