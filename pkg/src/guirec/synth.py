"""Synthetic session generation.

Grows a small recorded corpus into a large one while keeping its
statistical fingerprint: the per-action marginal frequencies (matching
first-order marginals is the maximum-entropy choice under that
constraint), plus the recurring contiguous motifs that encode short-term
goals such as a login procedure.  Uniform replacement noise stands in
for spam-like traffic; replacement rather than insertion keeps length
statistics intact.

Generation is a pure function of (distribution, motifs, config, catalog):
same seed, same output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .catalog import ActionCatalog, Session, SessionLog
from .errors import ValidationError
from .rng import generator

log = logging.getLogger(__name__)

PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CategoricalDist:
    """Probabilities over action IDs; must sum to 1 within 1e-9."""

    probs: Mapping[int, float]

    def __post_init__(self):
        if any(p < 0 for p in self.probs.values()):
            raise ValidationError("categorical probabilities must be non-negative")
        total = sum(self.probs.values())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"categorical probabilities sum to {total!r}, not 1")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(ids, probs) sorted by ID, probs renormalized for sampling."""
        ids = np.array(sorted(self.probs), dtype=np.int64)
        p = np.array([self.probs[i] for i in ids], dtype=np.float64)
        return ids, p / p.sum()


@dataclass(frozen=True)
class Motif:
    """A contiguous action subsequence plus the number of sessions containing it."""

    actions: tuple[int, ...]
    support: int

    def __post_init__(self):
        if len(self.actions) < 2:
            raise ValidationError("a motif needs at least two actions")


@dataclass(frozen=True)
class LengthBand:
    weight: float
    lo: int
    hi: int


# Two uniform bands mixed so the analytic mean session length is ~14.1
# while lengths stay inside [1, 49].
DEFAULT_LENGTH_MIX = (LengthBand(0.946, 5, 22), LengthBand(0.054, 1, 49))


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one generation run.

    ``length_mix`` refines the plain uniform [length_min, length_max]
    length model; leave it None for pure uniform.
    """

    n_sessions: int
    length_min: int = 1
    length_max: int = 49
    motif_rate: float = 0.8
    noise_rate: float = 0.05
    seed: int = 0
    length_mix: Optional[tuple[LengthBand, ...]] = None

    def __post_init__(self):
        if self.n_sessions < 0:
            raise ValidationError("n_sessions must be >= 0")
        if not (1 <= self.length_min <= self.length_max):
            raise ValidationError("need 1 <= length_min <= length_max")
        for name in ("motif_rate", "noise_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must be in [0, 1], got {v!r}")
        if self.length_mix is not None:
            if abs(sum(b.weight for b in self.length_mix) - 1.0) > PROB_SUM_TOL:
                raise ValidationError("length_mix weights must sum to 1")
            for band in self.length_mix:
                if not (self.length_min <= band.lo <= band.hi <= self.length_max):
                    raise ValidationError(
                        f"length band [{band.lo}, {band.hi}] outside "
                        f"[{self.length_min}, {self.length_max}]"
                    )


def estimate_marginals(log_: SessionLog) -> CategoricalDist:
    """Empirical per-action frequencies over every action in every session."""
    if not log_.sessions:
        raise ValidationError("cannot estimate marginals from an empty session log")
    counts: dict[int, int] = {}
    for session in log_.sessions:
        for a in session.action_ids:
            counts[a] = counts.get(a, 0) + 1
    total = sum(counts.values())
    return CategoricalDist({a: c / total for a, c in counts.items()})


def extract_motifs(log_: SessionLog, min_len: int = 2, max_len: int = 6,
                   min_support: int = 2) -> list[Motif]:
    """All contiguous subsequences with session support >= min_support.

    Support counts sessions, not occurrences.  Results come longest-first;
    a subsequence contained in a kept longer motif with equal support adds
    nothing and is dropped.
    """
    if not (2 <= min_len <= max_len):
        raise ValidationError("need 2 <= min_len <= max_len")
    support: dict[tuple[int, ...], set[int]] = {}
    for session in log_.sessions:
        ids = session.action_ids
        for width in range(min_len, min(max_len, len(ids)) + 1):
            for start in range(len(ids) - width + 1):
                window = ids[start:start + width]
                support.setdefault(window, set()).add(session.session_id)

    candidates = [(actions, len(sessions)) for actions, sessions in support.items()
                  if len(sessions) >= min_support]
    candidates.sort(key=lambda t: (-len(t[0]), -t[1], t[0]))

    def contains(longer: tuple[int, ...], shorter: tuple[int, ...]) -> bool:
        return any(longer[i:i + len(shorter)] == shorter
                   for i in range(len(longer) - len(shorter) + 1))

    kept: list[Motif] = []
    for actions, sup in candidates:
        if any(m.support == sup and len(m.actions) > len(actions)
               and contains(m.actions, actions) for m in kept):
            continue
        kept.append(Motif(actions=actions, support=sup))
    return kept


def _draw_length(rng: np.random.Generator, cfg: SynthConfig) -> int:
    if cfg.length_mix is None:
        return int(rng.integers(cfg.length_min, cfg.length_max + 1))
    weights = np.array([b.weight for b in cfg.length_mix])
    band = cfg.length_mix[rng.choice(len(cfg.length_mix), p=weights / weights.sum())]
    return int(rng.integers(band.lo, band.hi + 1))


def generate_sessions(dist: CategoricalDist, motifs: Sequence[Motif], cfg: SynthConfig,
                      catalog: ActionCatalog, base_timestamp: int = 1_600_000_000) -> SessionLog:
    """Sample cfg.n_sessions synthetic sessions.

    Each session draws a length, embeds one motif (chosen proportional to
    support, placed uniformly) with probability motif_rate, fills the rest
    i.i.d. from ``dist``, then replaces every emitted ID independently with
    a uniform-random catalog ID with probability noise_rate.  Motifs that
    cannot fit any session are skipped; a motif longer than length_max is
    skipped up front with a warning.
    """
    if len(catalog) == 0:
        raise ValidationError("cannot generate sessions against an empty catalog")
    unknown = [i for i in dist.probs if i not in catalog]
    if unknown:
        raise ValidationError(f"distribution covers action IDs missing from catalog: {unknown[:5]}")

    usable = []
    for m in motifs:
        if len(m.actions) > cfg.length_max:
            log.warning("motif of length %d exceeds length_max %d; skipped",
                        len(m.actions), cfg.length_max)
            continue
        usable.append(m)

    rng = generator(cfg.seed)
    ids, probs = dist.as_arrays()
    n_catalog = len(catalog)
    motif_lens = np.array([len(m.actions) for m in usable], dtype=np.int64)
    motif_support = np.array([m.support for m in usable], dtype=np.float64)

    sessions = []
    for k in range(cfg.n_sessions):
        length = _draw_length(rng, cfg)
        actions = ids[rng.choice(len(ids), size=length, p=probs)]
        if usable and rng.random() < cfg.motif_rate:
            fits = motif_lens <= length
            if fits.any():
                weights = motif_support * fits
                picked = usable[int(rng.choice(len(usable), p=weights / weights.sum()))]
                offset = int(rng.integers(0, length - len(picked.actions) + 1))
                actions[offset:offset + len(picked.actions)] = picked.actions
        if cfg.noise_rate > 0.0:
            noisy = rng.random(length) < cfg.noise_rate
            if noisy.any():
                actions[noisy] = rng.integers(1, n_catalog + 1, size=int(noisy.sum()))
        sessions.append(Session(session_id=k + 1,
                                action_ids=tuple(int(a) for a in actions),
                                start_timestamp=base_timestamp + k))
    return SessionLog(sessions=tuple(sessions), catalog=catalog)


def expected_marginal(dist: CategoricalDist, cfg: SynthConfig,
                      catalog: ActionCatalog) -> dict[int, float]:
    """Expected emission distribution with motif_rate 0: noise-blended marginals.

    Useful as the reference when checking generated output, since
    replacement noise pulls the observed marginal toward uniform by
    construction.
    """
    n = len(catalog)
    floor = cfg.noise_rate / n
    blended = {action_id: floor for action_id, _ in catalog.items()}
    for a, p in dist.probs.items():
        blended[a] += (1.0 - cfg.noise_rate) * p
    return blended
