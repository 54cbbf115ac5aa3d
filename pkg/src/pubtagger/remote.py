"""Client for out-of-process scorers speaking the sidecar wire protocol.

The protocol is newline-delimited JSON over a TCP connection or a child
process's standard input/output.  The server speaks first with a handshake
``{"protocol_version": 1, "descriptor": {...}}``; after that each request
``{"id", "text"}`` is answered by exactly one response ``{"id", "scores"}``
(or ``{"id", "error"}``), in request order.  The client writes one request
and reads its response before sending the next, so a single connection is a
strictly ordered scoring channel.
"""

from __future__ import annotations

import json
import os
import shlex
import socket
import subprocess
import threading
from collections.abc import Sequence

from .errors import BackendError, ConfigError, RecordScoringError
from .scoring import ScoreVector, ScorerDescriptor, _input_parts

PROTOCOL_VERSION = 1
SIDECAR_ADDR_ENV = "PT_SIDECAR_ADDR"


def parse_address(address: str) -> tuple[str, str, int] | tuple[str, str]:
    """Parse "tcp:host:port" or "stdio:<command line>" address forms."""
    if address.startswith("tcp:"):
        rest = address[len("tcp:") :]
        host, separator, port_text = rest.rpartition(":")
        if not separator or not host:
            raise ConfigError(f"tcp address must be tcp:host:port, got {address!r}")
        try:
            port = int(port_text)
        except ValueError:
            raise ConfigError(f"invalid tcp port in {address!r}") from None
        if not 0 < port < 65536:
            raise ConfigError(f"tcp port out of range in {address!r}")
        return ("tcp", host, port)
    if address.startswith("stdio:"):
        command = address[len("stdio:") :].strip()
        if not command:
            raise ConfigError("stdio address must carry a command, e.g. stdio:python serve.py")
        return ("stdio", command)
    raise ConfigError(
        f"sidecar address must start with tcp: or stdio:, got {address!r}"
    )


def sidecar_address(explicit: str | None = None) -> str | None:
    """The configured sidecar address, falling back to the environment."""
    return explicit if explicit else os.environ.get(SIDECAR_ADDR_ENV) or None


class RemoteScorer:
    """A scorer living behind the wire protocol.

    Connecting performs the handshake eagerly, so an unreachable or
    incompatible sidecar fails at startup rather than mid-batch.  A lock
    serializes batches: concurrent callers share the connection safely.
    """

    def __init__(self, address: str, timeout: float = 30.0, name: str | None = None):
        self.address = address
        self._lock = threading.Lock()
        self._process: subprocess.Popen | None = None
        self._socket: socket.socket | None = None
        parsed = parse_address(address)
        try:
            if parsed[0] == "tcp":
                _, host, port = parsed
                self._socket = socket.create_connection((host, port), timeout=timeout)
                self._reader = self._socket.makefile("r", encoding="utf-8", newline="\n")
                self._writer = self._socket.makefile("w", encoding="utf-8", newline="\n")
            else:
                self._process = subprocess.Popen(
                    shlex.split(parsed[1]),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
                self._reader = self._process.stdout
                self._writer = self._process.stdin
        except OSError as exc:
            raise BackendError(f"sidecar unreachable at {address!r}: {exc}") from exc
        self._descriptor = self._handshake(name)

    def _read_message(self, context: str) -> dict:
        line = self._reader.readline()
        if not line:
            raise BackendError(f"sidecar at {self.address!r} closed during {context}")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendError(
                f"sidecar sent invalid JSON during {context}: {exc}"
            ) from exc
        if not isinstance(message, dict):
            raise BackendError(f"sidecar sent a non-object message during {context}")
        return message

    def _handshake(self, name: str | None) -> ScorerDescriptor:
        message = self._read_message("handshake")
        version = message.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise BackendError(
                f"sidecar protocol version {version!r} unsupported "
                f"(this client speaks {PROTOCOL_VERSION})"
            )
        try:
            descriptor = ScorerDescriptor.from_json(message.get("descriptor"))
        except ConfigError as exc:
            raise BackendError(f"sidecar handshake descriptor invalid: {exc}") from exc
        if name is not None:
            descriptor = ScorerDescriptor(
                name=name,
                kind=descriptor.kind,
                vocabulary=descriptor.vocabulary,
                validation_metrics=descriptor.validation_metrics,
            )
        return descriptor

    def descriptor(self) -> ScorerDescriptor:
        return self._descriptor

    def _score_one(self, citation_id: str, text: str) -> ScoreVector:
        request = json.dumps({"id": citation_id, "text": text}, ensure_ascii=True)
        try:
            self._writer.write(request + "\n")
            self._writer.flush()
        except (OSError, ValueError) as exc:
            raise BackendError(f"cannot write to sidecar at {self.address!r}: {exc}") from exc
        response = self._read_message(f"request {citation_id!r}")
        if "error" in response:
            raise RecordScoringError(citation_id, str(response["error"]))
        if response.get("id") != citation_id:
            raise BackendError(
                f"sidecar answered {response.get('id')!r} to request {citation_id!r}; "
                f"responses must preserve request ids"
            )
        raw = response.get("scores")
        if not isinstance(raw, dict):
            raise BackendError(f"sidecar response for {citation_id!r} lacks scores")
        scores: dict[str, float] = {}
        for label, value in raw.items():
            try:
                number = float(value)
            except (TypeError, ValueError):
                raise BackendError(
                    f"sidecar score for {label!r} is not a number: {value!r}"
                ) from None
            if not 0.0 <= number <= 1.0:
                raise BackendError(
                    f"sidecar score for {label!r} out of [0, 1]: {number!r}"
                )
            scores[label] = number
        if set(scores) != set(self._descriptor.vocabulary):
            raise BackendError(
                f"sidecar response labels do not match its declared vocabulary "
                f"for {citation_id!r}"
            )
        return ScoreVector(citation_id=citation_id, scores=scores)

    def score_batch(self, inputs: Sequence[object]) -> list[ScoreVector]:
        ids, texts = _input_parts(inputs)
        with self._lock:
            return [self._score_one(cid, text) for cid, text in zip(ids, texts)]

    def close(self) -> None:
        for stream in (getattr(self, "_writer", None), getattr(self, "_reader", None)):
            try:
                if stream is not None:
                    stream.close()
            except OSError:
                pass
        if self._socket is not None:
            try:
                self._socket.close()
            except OSError:
                pass
        if self._process is not None:
            self._process.terminate()
            try:
                self._process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()

    def __enter__(self) -> "RemoteScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
