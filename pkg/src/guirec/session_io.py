"""CSV serialization for events, sessions and catalogs.

Three line-oriented files, all UTF-8 with RFC-4180 quoting:

  events.csv   header ``session_key,timestamp,page,element_locator,action_type,input_data``
  sessions.csv header ``session_id,action_ids,start_timestamp`` with the ID
               sequence serialized as space-separated integers
  catalog.csv  header ``action_id,page,element_locator,action_type``

``read_session_csv(write_session_csv(log))`` is the identity, catalog
included.  Empty input_data round-trips as absent.
"""

from __future__ import annotations

import csv

from .catalog import ActionCatalog, ActionSignature, RawEvent, Session, SessionLog
from .errors import IntegrityError, ParseError

EVENTS_HEADER = ["session_key", "timestamp", "page", "element_locator", "action_type", "input_data"]
SESSIONS_HEADER = ["session_id", "action_ids", "start_timestamp"]
CATALOG_HEADER = ["action_id", "page", "element_locator", "action_type"]


def _open_write(path):
    return open(path, "w", encoding="utf-8", newline="")


def _check_header(row, expected, path):
    if row != expected:
        raise ParseError(f"{path}: expected header {','.join(expected)}, got {row}", line=1)


def write_events_csv(events, destination) -> None:
    with _open_write(destination) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENTS_HEADER)
        for e in events:
            writer.writerow(
                [e.session_key, e.timestamp, e.page, e.element_locator, e.action_type,
                 e.input_data if e.input_data is not None else ""]
            )


def read_events_csv(source) -> list[RawEvent]:
    events = []
    with open(source, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{source}: empty file, expected events header", line=1) from None
        _check_header(header, EVENTS_HEADER, source)
        for row in reader:
            if len(row) != len(EVENTS_HEADER):
                raise ParseError(f"{source}: expected {len(EVENTS_HEADER)} fields, got {len(row)}",
                                 line=reader.line_num)
            try:
                ts = int(row[1])
            except ValueError:
                raise ParseError(f"{source}: timestamp {row[1]!r} is not an integer",
                                 line=reader.line_num) from None
            events.append(RawEvent(session_key=row[0], timestamp=ts, page=row[2],
                                   element_locator=row[3], action_type=row[4],
                                   input_data=row[5] or None))
    return events


def write_catalog_csv(catalog: ActionCatalog, destination) -> None:
    with _open_write(destination) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CATALOG_HEADER)
        for action_id, sig in catalog.items():
            writer.writerow([action_id, sig.page, sig.element_locator, sig.action_type])


def read_catalog_csv(source) -> ActionCatalog:
    catalog = ActionCatalog()
    with open(source, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{source}: empty file, expected catalog header", line=1) from None
        _check_header(header, CATALOG_HEADER, source)
        for row in reader:
            if len(row) != len(CATALOG_HEADER):
                raise ParseError(f"{source}: expected {len(CATALOG_HEADER)} fields, got {len(row)}",
                                 line=reader.line_num)
            try:
                action_id = int(row[0])
            except ValueError:
                raise ParseError(f"{source}: action_id {row[0]!r} is not an integer",
                                 line=reader.line_num) from None
            minted = catalog.register(ActionSignature(row[1], row[2], row[3]))
            if minted != action_id:
                raise IntegrityError(
                    f"{source}: action IDs must be dense and in ascending order; "
                    f"row {reader.line_num} declares ID {action_id} but position implies {minted}"
                )
    return catalog


def write_session_csv(log: SessionLog, sessions_destination, catalog_destination) -> None:
    """Write a session log as a sessions file plus its catalog file."""
    with _open_write(sessions_destination) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SESSIONS_HEADER)
        for s in log.sessions:
            writer.writerow([s.session_id, " ".join(str(a) for a in s.action_ids),
                             s.start_timestamp])
    write_catalog_csv(log.catalog, catalog_destination)


def read_session_csv(sessions_source, catalog_source) -> SessionLog:
    catalog = read_catalog_csv(catalog_source)
    sessions = []
    with open(sessions_source, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{sessions_source}: empty file, expected sessions header",
                             line=1) from None
        _check_header(header, SESSIONS_HEADER, sessions_source)
        for row in reader:
            if len(row) != len(SESSIONS_HEADER):
                raise ParseError(
                    f"{sessions_source}: expected {len(SESSIONS_HEADER)} fields, got {len(row)}",
                    line=reader.line_num)
            try:
                session_id = int(row[0])
                action_ids = tuple(int(tok) for tok in row[1].split())
                start_ts = int(row[2])
            except ValueError:
                raise ParseError(f"{sessions_source}: non-integer field in row {row!r}",
                                 line=reader.line_num) from None
            for a in action_ids:
                if a not in catalog:
                    raise IntegrityError(
                        f"{sessions_source}: session {session_id} references action ID {a} "
                        f"absent from {catalog_source}"
                    )
            sessions.append(Session(session_id=session_id, action_ids=action_ids,
                                    start_timestamp=start_ts))
    return SessionLog(sessions=tuple(sessions), catalog=catalog)
