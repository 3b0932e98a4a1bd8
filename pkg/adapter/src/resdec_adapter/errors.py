"""Exception taxonomy for the adapter.

ProtocolError and SessionError mark problems with what the peer sent; the
serve loop answers them with an {"error": ...} reply and keeps going.
ModelError (and anything else escaping the loop) is a real failure of the
backing model and ends the process with a nonzero exit code.
"""


class AdapterError(Exception):
    """Base class for all adapter errors."""


class ConfigError(AdapterError):
    """Invalid configuration value."""


class ProtocolError(AdapterError):
    """A request line that does not parse into a known command."""


class SessionError(AdapterError):
    """A well-formed request that is invalid for the current session state."""


class ModelError(AdapterError):
    """The backing model could not be loaded or run."""
