"""Simulated GUI under test: a state machine with gated transitions.

The application model is declarative: a set of pages (states), the
actionable elements on each page, the page transitions certain actions
trigger, and *gates* — transitions that only fire once a required
ordered prefix of actions has already happened in the episode (think
"fill user, fill password, then sign-in").  Elements without an explicit
transition are self-loops (the action executes in place).

Two generator policies walk the model: a uniform random monkey and a
recommender-guided policy that samples from a recommender's top-k
suggestions intersected with the currently available actions, falling
back to uniform with probability epsilon or when the intersection is
empty.  Given a seed both are fully deterministic; the monkey is exactly
the guided policy with epsilon forced to 1, so the two consume the RNG
stream identically.

Model files are JSON (format "gui-model", version 1) with keys
``states``, ``elements`` (state -> [[locator, action_type], ...]),
``transitions`` ([[state, locator, action_type, target], ...]),
``gates`` ([{state, element_locator, action_type, required_prefix:
[[page, locator, action_type], ...]}, ...]) and ``initial_state``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .catalog import (ACTION_TYPES, ActionCatalog, ActionSignature, RawEvent, SessionLog,
                      ingest_events)
from .errors import ConfigError, ParseError, ScriptError, ValidationError
from .rng import generator

GUI_MODEL_FORMAT = "gui-model"
GUI_MODEL_VERSION = 1


@dataclass(frozen=True)
class GateRule:
    """A guarded transition plus the ordered action prefix that unlocks it."""

    state: str
    element_locator: str
    action_type: str
    required_prefix: tuple[ActionSignature, ...]

    def __post_init__(self):
        if not self.required_prefix:
            raise ValidationError("a gate needs a non-empty required prefix")


@dataclass(frozen=True)
class GuiModel:
    states: tuple[str, ...]
    elements: dict[str, tuple[tuple[str, str], ...]]  # state -> ((locator, action_type), ...)
    transitions: dict[tuple[str, str, str], str]      # (state, locator, action_type) -> target
    gates: tuple[GateRule, ...]
    initial_state: str

    def __post_init__(self):
        if not self.states:
            raise ValidationError("GUI model has no states")
        known = set(self.states)
        if self.initial_state not in known:
            raise ValidationError(f"initial state {self.initial_state!r} is not a state")
        for state in self.elements:
            if state not in known:
                raise ValidationError(f"elements listed for unknown state {state!r}")
        for (state, locator, action_type), target in self.transitions.items():
            if state not in known:
                raise ValidationError(f"transition from unknown state {state!r}")
            if target not in known:
                raise ValidationError(
                    f"transition ({state!r}, {locator!r}) points to unknown state {target!r}")
            if (locator, action_type) not in self.elements.get(state, ()):
                raise ValidationError(
                    f"transition in {state!r} uses element ({locator!r}, {action_type!r}) "
                    "absent from that state")
        for gate in self.gates:
            key = (gate.state, gate.element_locator, gate.action_type)
            if key not in self.transitions:
                raise ValidationError(
                    f"gate guards ({gate.state!r}, {gate.element_locator!r}) "
                    "which is not a transition")
            for sig in gate.required_prefix:
                if sig.page not in known:
                    raise ValidationError(f"gate prefix references unknown state {sig.page!r}")
                if (sig.element_locator, sig.action_type) not in self.elements.get(sig.page, ()):
                    raise ValidationError(
                        f"gate prefix action {sig!r} is not an element of {sig.page!r}")

    def available(self, state: str) -> tuple[ActionSignature, ...]:
        """Signatures performable in a state, in declaration order."""
        return tuple(ActionSignature(state, locator, action_type)
                     for locator, action_type in self.elements.get(state, ()))

    def n_actions(self) -> int:
        return sum(len(v) for v in self.elements.values())


def save_gui_model(model: GuiModel, destination) -> None:
    doc = {
        "format": GUI_MODEL_FORMAT,
        "version": GUI_MODEL_VERSION,
        "initial_state": model.initial_state,
        "states": list(model.states),
        "elements": {s: [list(e) for e in model.elements.get(s, ())] for s in model.states},
        "transitions": [[s, loc, at, target]
                        for (s, loc, at), target in sorted(model.transitions.items())],
        "gates": [{
            "state": g.state, "element_locator": g.element_locator,
            "action_type": g.action_type,
            "required_prefix": [list(sig) for sig in g.required_prefix],
        } for g in model.gates],
    }
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_gui_model(source) -> GuiModel:
    """Parse and fully validate a GUI model file."""
    try:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: not valid JSON ({exc})") from None
    if doc.get("format") != GUI_MODEL_FORMAT:
        raise ParseError(f"{source}: missing or wrong format marker")
    if doc.get("version") != GUI_MODEL_VERSION:
        raise ParseError(f"{source}: unsupported version {doc.get('version')!r}")
    try:
        states = tuple(doc["states"])
        elements = {s: tuple((loc, at) for loc, at in rows)
                    for s, rows in doc["elements"].items()}
        transitions = {(s, loc, at): target for s, loc, at, target in doc["transitions"]}
        gates = tuple(GateRule(state=g["state"], element_locator=g["element_locator"],
                               action_type=g["action_type"],
                               required_prefix=tuple(ActionSignature(*sig)
                                                     for sig in g["required_prefix"]))
                      for g in doc["gates"])
        initial = doc["initial_state"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{source}: malformed model document ({exc})") from None
    for state, rows in elements.items():
        for _loc, action_type in rows:
            if action_type not in ACTION_TYPES:
                raise ValidationError(
                    f"{source}: state {state!r} has element with unknown "
                    f"action_type {action_type!r}")
    return GuiModel(states=states, elements=elements, transitions=transitions,
                    gates=gates, initial_state=initial)


def catalog_from_gui_model(model: GuiModel) -> ActionCatalog:
    """Register every element of every state, in declaration order."""
    catalog = ActionCatalog()
    for state in model.states:
        for sig in model.available(state):
            catalog.register(sig)
    return catalog


@dataclass
class Episode:
    """Mutable walk state: current page, executed actions, gate counters."""

    model: GuiModel
    state: str
    executed: list[ActionSignature] = field(default_factory=list)
    visited: set[str] = field(default_factory=set)
    gates_passed: int = 0
    gates_blocked: int = 0

    @classmethod
    def start(cls, model: GuiModel) -> "Episode":
        return cls(model=model, state=model.initial_state, visited={model.initial_state})


@dataclass(frozen=True)
class StepOutcome:
    kind: str  # "moved" | "blocked" | "absent"
    destination: Optional[str] = None


def _is_subsequence(needle: Sequence[ActionSignature],
                    haystack: Sequence[ActionSignature]) -> bool:
    it = iter(haystack)
    return all(any(item == h for h in it) for item in needle)


def step(model: GuiModel, episode: Episode, action: ActionSignature) -> StepOutcome:
    """Perform one action; every input yields an outcome, never an exception.

    Gated transitions fire only when the gate's required prefix is an
    order-respecting subsequence of the actions *executed* so far (blocked
    attempts did not happen from the SUT's point of view).  Actions whose
    element is absent from the current page are no-ops.
    """
    if action.page != episode.state or \
            (action.element_locator, action.action_type) not in model.elements.get(episode.state, ()):
        return StepOutcome(kind="absent")
    gate = next((g for g in model.gates
                 if (g.state, g.element_locator, g.action_type)
                 == (episode.state, action.element_locator, action.action_type)), None)
    if gate is not None and not _is_subsequence(gate.required_prefix, episode.executed):
        episode.gates_blocked += 1
        return StepOutcome(kind="blocked")
    episode.executed.append(action)
    if gate is not None:
        episode.gates_passed += 1
    target = model.transitions.get((episode.state, action.element_locator, action.action_type))
    if target is not None:
        episode.state = target
        episode.visited.add(target)
        return StepOutcome(kind="moved", destination=target)
    return StepOutcome(kind="moved", destination=episode.state)


def record_scripted_sessions(model: GuiModel, scripts: Sequence[Sequence[ActionSignature]],
                             catalog: Optional[ActionCatalog] = None,
                             base_timestamp: int = 1_568_573_000,
                             spacing: int = 60) -> SessionLog:
    """Replay scripted walks and ingest them as if they had been recorded.

    Script k becomes one session whose events carry synthetic increasing
    timestamps (session k starts at base + k * spacing, one second per
    action).  A script step that is absent or gate-blocked in the current
    state raises ScriptError with its index.
    """
    events = []
    for k, script in enumerate(scripts):
        episode = Episode.start(model)
        for idx, sig in enumerate(script):
            outcome = step(model, episode, sig)
            if outcome.kind != "moved":
                raise ScriptError(
                    f"script {k + 1}: action {sig!r} is "
                    f"{'blocked by a gate' if outcome.kind == 'blocked' else 'not available'} "
                    f"in state {episode.state!r}", index=idx)
            events.append(RawEvent(
                session_key=f"script-{k + 1:03d}",
                timestamp=base_timestamp + k * spacing + idx,
                page=sig.page, element_locator=sig.element_locator,
                action_type=sig.action_type,
                input_data="sample text" if sig.action_type == "type_text" else None))
    return ingest_events(events, catalog=catalog)


@dataclass(frozen=True)
class GeneratorPolicy:
    kind: str = "random_monkey"  # or "recommender_guided"
    epsilon: float = 0.1
    top_k: int = 10
    max_steps: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random_monkey", "recommender_guided"):
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError("epsilon must be in [0, 1]")
        if self.top_k < 1 or self.max_steps < 1:
            raise ConfigError("top_k and max_steps must be >= 1")


@dataclass
class EpisodeStats:
    actions_taken: list[int]
    unique_states_visited: int
    gates_passed: int
    gate_attempts_blocked: int
    ended_early: bool = False


def generate_test(model: GuiModel, recommender, policy: GeneratorPolicy,
                  catalog: ActionCatalog) -> EpisodeStats:
    """Run one generated episode and return its statistics.

    The guided policy feeds the recommender the episode's attempted action
    IDs; only actions available in the current state are ever emitted.
    The catalog must cover the model's full element inventory so every
    taken action has an ID.
    """
    if policy.kind == "recommender_guided" and recommender is None:
        raise ConfigError("recommender_guided policy needs a recommender")
    rng = generator(policy.seed)
    episode = Episode.start(model)
    taken: list[int] = []
    ended_early = False
    scorer = recommender.open_session() if policy.kind == "recommender_guided" else None

    for _ in range(policy.max_steps):
        available = model.available(episode.state)
        if not available:
            ended_early = True
            break
        ids = []
        for sig in available:
            action_id = catalog.id_for(sig)
            if action_id is None:
                raise ValidationError(f"catalog does not cover model action {sig!r}")
            ids.append(action_id)

        explore = rng.random()
        choice = None
        if policy.kind == "recommender_guided" and explore >= policy.epsilon and taken:
            ranked = scorer.top(policy.top_k)
            id_set = {a: pos for pos, a in enumerate(ids)}
            matches = [(id_set[a], p) for a, p in ranked if a in id_set]
            total = sum(p for _, p in matches)
            if matches and total > 0:
                u = rng.random() * total
                acc = 0.0
                for pos, p in matches:
                    acc += p
                    if u <= acc:
                        choice = pos
                        break
                if choice is None:
                    choice = matches[-1][0]
        if choice is None:
            choice = int(rng.integers(len(available)))

        sig = available[choice]
        action_id = ids[choice]
        step(model, episode, sig)
        taken.append(action_id)
        if scorer is not None:
            scorer.consume(action_id)

    return EpisodeStats(actions_taken=taken,
                        unique_states_visited=len(episode.visited),
                        gates_passed=episode.gates_passed,
                        gate_attempts_blocked=episode.gates_blocked,
                        ended_early=ended_early)


def run_episodes(model: GuiModel, recommender, policy: GeneratorPolicy,
                 catalog: ActionCatalog, n_episodes: int) -> list[EpisodeStats]:
    """n independent episodes; episode k's seed is spawned from policy.seed."""
    from .rng import spawn_seeds

    seeds = spawn_seeds(policy.seed, n_episodes)
    return [generate_test(model, recommender, replace(policy, seed=s), catalog)
            for s in seeds]


def gate_pass_rate(stats: Sequence[EpisodeStats]) -> float:
    """Fraction of episodes that passed at least one gate."""
    if not stats:
        return 0.0
    return sum(1 for s in stats if s.gates_passed > 0) / len(stats)


def mean_unique_states(stats: Sequence[EpisodeStats]) -> float:
    if not stats:
        return 0.0
    return float(np.mean([s.unique_states_visited for s in stats]))


def write_episode_csv(stats: Sequence[EpisodeStats], destination) -> None:
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "steps", "unique_states", "gates_passed", "gates_blocked"])
        for k, s in enumerate(stats, start=1):
            writer.writerow([k, len(s.actions_taken), s.unique_states_visited,
                             s.gates_passed, s.gate_attempts_blocked])
