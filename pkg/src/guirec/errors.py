"""Exception hierarchy shared across the package."""


class GuirecError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GuirecError):
    """Input data violates a documented invariant (bad field, bad shape)."""


class ParseError(GuirecError):
    """A file could not be parsed; carries the offending line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(GuirecError):
    """Cross-file or cross-structure references do not line up."""


class ConfigError(GuirecError):
    """A configuration value or flag combination is invalid."""


class ScriptError(GuirecError):
    """A scripted walk hit an action that is invalid in the current state."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"step {index}: {message}"
        super().__init__(message)
        self.index = index
