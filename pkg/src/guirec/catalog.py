"""Action catalog and session ingestion.

Raw GUI recordings arrive as one event per row: who (session key), when
(unix timestamp), and what (page, element locator, action type, optional
typed text).  Two events count as the same *action* when they target the
same element on the same page with the same action type; typed text is
deliberately ignored.  Each distinct action signature gets a dense
integer ID in first-seen order, and sessions become ordered sequences of
those IDs.

Catalog mutation is single-writer: do not ingest into one catalog from
several threads.  A finished `SessionLog` is immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .errors import ValidationError

ACTION_TYPES = ("click", "type_text", "select", "navigate", "submit", "other")


class ActionSignature(NamedTuple):
    """Identity of a GUI action: (page, element locator, action type)."""

    page: str
    element_locator: str
    action_type: str


@dataclass(frozen=True)
class RawEvent:
    """One recorded interaction, exactly as captured."""

    session_key: str
    timestamp: int
    page: str
    element_locator: str
    action_type: str
    input_data: Optional[str] = None


def normalize_page(page: str) -> str:
    """Strip query string and fragment so volatile URL parts don't mint new IDs."""
    for sep in ("#", "?"):
        page = page.split(sep, 1)[0]
    return page


def validate_event(event: RawEvent) -> None:
    for name in ("session_key", "page", "element_locator", "action_type"):
        if not getattr(event, name):
            raise ValidationError(f"event field {name!r} is empty")
    if event.action_type not in ACTION_TYPES:
        raise ValidationError(
            f"event field 'action_type' has unknown value {event.action_type!r}; "
            f"expected one of {', '.join(ACTION_TYPES)}"
        )
    if event.timestamp < 0:
        raise ValidationError("event field 'timestamp' is negative")


def signature_of(event: RawEvent) -> ActionSignature:
    """Signature of an event; input_data never participates."""
    return ActionSignature(normalize_page(event.page), event.element_locator, event.action_type)


class ActionCatalog:
    """Bijection between action signatures and dense positive integer IDs.

    IDs are assigned 1, 2, 3, ... in first-seen order and never reused,
    so after N distinct signatures the ID set is exactly {1..N}.
    """

    def __init__(self):
        self._sig_to_id: dict[ActionSignature, int] = {}
        self._id_to_sig: dict[int, ActionSignature] = {}

    def __len__(self) -> int:
        return len(self._sig_to_id)

    def __contains__(self, action_id: int) -> bool:
        return action_id in self._id_to_sig

    def __eq__(self, other) -> bool:
        return isinstance(other, ActionCatalog) and self._sig_to_id == other._sig_to_id

    def register(self, sig: ActionSignature) -> int:
        """Return the ID for a signature, minting the next dense ID if new."""
        found = self._sig_to_id.get(sig)
        if found is not None:
            return found
        new_id = len(self._sig_to_id) + 1
        self._sig_to_id[sig] = new_id
        self._id_to_sig[new_id] = sig
        return new_id

    def derive(self, event: RawEvent) -> int:
        validate_event(event)
        return self.register(signature_of(event))

    def id_for(self, sig: ActionSignature) -> Optional[int]:
        return self._sig_to_id.get(sig)

    def signature(self, action_id: int) -> ActionSignature:
        return self._id_to_sig[action_id]

    def items(self) -> list[tuple[int, ActionSignature]]:
        """(id, signature) pairs in ascending ID order."""
        return sorted(self._id_to_sig.items())


def derive_action_id(catalog: ActionCatalog, event: RawEvent) -> int:
    """Map an event to its action ID, registering the signature if unseen.

    Idempotent per signature; events differing only in typed text map to
    the same ID.  Raises ValidationError naming the field when the event
    is malformed.
    """
    return catalog.derive(event)


@dataclass(frozen=True)
class Session:
    """One user sitting: an ordered, non-empty sequence of action IDs."""

    session_id: int
    action_ids: tuple[int, ...]
    start_timestamp: int

    def __post_init__(self):
        if len(self.action_ids) < 1:
            raise ValidationError(f"session {self.session_id} has no actions")

    def __len__(self) -> int:
        return len(self.action_ids)


@dataclass(frozen=True)
class SessionLog:
    """An ordered collection of sessions plus the catalog that decodes them."""

    sessions: tuple[Session, ...]
    catalog: ActionCatalog = field(default_factory=ActionCatalog)

    def __post_init__(self):
        last_ts = None
        seen_ids = set()
        for s in self.sessions:
            if s.session_id in seen_ids:
                raise ValidationError(f"duplicate session_id {s.session_id}")
            seen_ids.add(s.session_id)
            if last_ts is not None and s.start_timestamp < last_ts:
                raise ValidationError(
                    f"session {s.session_id} breaks ascending start_timestamp order"
                )
            last_ts = s.start_timestamp
            for a in s.action_ids:
                if a not in self.catalog:
                    raise ValidationError(
                        f"session {s.session_id} references action ID {a} "
                        "missing from the catalog"
                    )

    def __len__(self) -> int:
        return len(self.sessions)

    def total_actions(self) -> int:
        return sum(len(s) for s in self.sessions)

    def distinct_actions(self) -> int:
        return len({a for s in self.sessions for a in s.action_ids})

    def mean_length(self) -> float:
        return self.total_actions() / len(self.sessions) if self.sessions else 0.0


def ingest_events(rows: Iterable[RawEvent], catalog: Optional[ActionCatalog] = None) -> SessionLog:
    """Group raw events into sessions of action IDs.

    Rows may arrive in any order.  Events are grouped by session key and
    sorted by timestamp (arrival order only breaks exact ties); sessions
    are numbered 1..K by ascending first-event timestamp, with the session
    key as tie-break so the result does not depend on row order.  IDs are
    derived in that final order, so replaying the same recordings always
    rebuilds the same catalog.  Pass an existing catalog to reuse its IDs;
    it is extended in place.
    """
    if catalog is None:
        catalog = ActionCatalog()
    groups: dict[str, list[tuple[int, int, RawEvent]]] = {}
    for arrival, event in enumerate(rows):
        validate_event(event)
        groups.setdefault(event.session_key, []).append((event.timestamp, arrival, event))

    ordered_groups = []
    for key, entries in groups.items():
        entries.sort(key=lambda t: (t[0], t[1]))
        ordered_groups.append((entries[0][0], key, entries))
    ordered_groups.sort(key=lambda t: (t[0], t[1]))

    sessions = []
    for number, (start_ts, _key, entries) in enumerate(ordered_groups, start=1):
        ids = tuple(catalog.derive(event) for _, _, event in entries)
        sessions.append(Session(session_id=number, action_ids=ids, start_timestamp=start_ts))
    return SessionLog(sessions=tuple(sessions), catalog=catalog)
