"""Out-of-process transformer scorer behind a newline-delimited JSON protocol."""

from .model import SidecarError, TransformerScorer
from .server import PROTOCOL_VERSION, serve_connection, serve_stdio, serve_tcp

__all__ = [
    "PROTOCOL_VERSION",
    "SidecarError",
    "TransformerScorer",
    "serve_connection",
    "serve_stdio",
    "serve_tcp",
]

__version__ = "0.1.0"
