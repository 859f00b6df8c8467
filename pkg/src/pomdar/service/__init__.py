from .protocol import PROTOCOL_VERSION, InputFrame, ProtocolError, parse_input_frame
from .session import (
    Session,
    SessionConfig,
    SessionError,
    SessionManager,
    read_log,
    run_log,
    write_log,
)

__all__ = [
    "PROTOCOL_VERSION",
    "InputFrame",
    "ProtocolError",
    "parse_input_frame",
    "Session",
    "SessionConfig",
    "SessionError",
    "SessionManager",
    "read_log",
    "run_log",
    "write_log",
]
