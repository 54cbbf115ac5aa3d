"""The wire protocol: newline-delimited JSON over stdio or TCP.

The server speaks first with ``{"protocol_version": 1, "descriptor": {...}}``.
Every subsequent request line ``{"id", "text"}`` is answered by exactly one
response in arrival order: ``{"id", "scores"}`` on success, ``{"id", "error"}``
otherwise.  A malformed line never terminates the connection; only end of
input does.  Each connection is handled serially; concurrent connections get
their own handler thread and their own ordering guarantee.
"""

from __future__ import annotations

import json
import logging
import socket
import sys
import threading
from typing import IO

from .model import TransformerScorer

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


def _emit(writer: IO[str], message: dict) -> None:
    writer.write(json.dumps(message, ensure_ascii=True) + "\n")
    writer.flush()


def _respond(scorer: TransformerScorer, line: str) -> dict:
    """One response per request line; failures become {id, error} payloads."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": None, "error": f"request is not valid JSON: {exc}"}
    if not isinstance(request, dict):
        return {"id": None, "error": "request must be a JSON object"}
    citation_id = request.get("id")
    text = request.get("text")
    if not isinstance(citation_id, str):
        return {"id": None, "error": "request needs a string 'id'"}
    if not isinstance(text, str):
        return {"id": citation_id, "error": "request needs a string 'text'"}
    try:
        scores = scorer.score([text])[0]
    except Exception as exc:  # keep the channel alive whatever scoring throws
        logger.warning("scoring %r failed: %s", citation_id, exc)
        return {"id": citation_id, "error": f"scoring failed: {exc}"}
    return {"id": citation_id, "scores": scores}


def serve_connection(scorer: TransformerScorer, reader: IO[str], writer: IO[str]) -> int:
    """Handshake, then answer every request line until end of input."""
    _emit(writer, {"protocol_version": PROTOCOL_VERSION, "descriptor": scorer.descriptor()})
    handled = 0
    for line in reader:
        if not line.strip():
            continue
        _emit(writer, _respond(scorer, line))
        handled += 1
    return handled


def serve_stdio(scorer: TransformerScorer) -> int:
    return serve_connection(scorer, sys.stdin, sys.stdout)


def serve_tcp(scorer: TransformerScorer, host: str, port: int) -> None:
    """Listen forever, one handler thread per accepted connection."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen()
    bound_host, bound_port = server.getsockname()[:2]
    logger.info("listening on tcp:%s:%d", bound_host, bound_port)

    def handle(conn: socket.socket, peer) -> None:
        with conn:
            reader = conn.makefile("r", encoding="utf-8", newline="\n")
            writer = conn.makefile("w", encoding="utf-8", newline="\n")
            try:
                handled = serve_connection(scorer, reader, writer)
            except (OSError, ValueError) as exc:
                logger.warning("connection from %s dropped: %s", peer, exc)
            else:
                logger.info("connection from %s closed after %d requests", peer, handled)

    with server:
        while True:
            conn, peer = server.accept()
            thread = threading.Thread(target=handle, args=(conn, peer), daemon=True)
            thread.start()
