"""Session-based next-action recommendation for GUI test generation.

Ingest recorded GUI sessions, synthesize more, train recurrent
next-action recommenders against a kNN baseline, evaluate them under
incremental reveal, and drive a simulated gated GUI with the result.
"""

__version__ = "0.1.0"

from .catalog import (ActionCatalog, ActionSignature, RawEvent, Session, SessionLog,
                      derive_action_id, ingest_events)
from .errors import (ConfigError, GuirecError, IntegrityError, ParseError, ScriptError,
                     ValidationError)

__all__ = [
    "ActionCatalog", "ActionSignature", "ConfigError", "GuirecError", "IntegrityError",
    "ParseError", "RawEvent", "ScriptError", "Session", "SessionLog", "ValidationError",
    "derive_action_id", "ingest_events", "__version__",
]
