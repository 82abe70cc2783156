"""Wire protocol shared by the steering server, its clients and the tests.

Messages are UTF-8 JSON documents framed with a 4-byte big-endian length
prefix over one bidirectional stream per client.  Every server reply carries
``proto_version``.  Bulk numeric payloads (trajectory batches, fields,
tiles) are base64-embedded little-endian 32-bit floats in row-major order.
"""

from __future__ import annotations

import base64
import json
import socket
import struct
from typing import Any, Iterator

import numpy as np

PROTO_VERSION = 1
MAX_MESSAGE_BYTES = 64 * 1024 * 1024

_LEN = struct.Struct(">I")


def encode_message(message: dict[str, Any]) -> bytes:
    body = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_MESSAGE_BYTES:
        raise ValueError(f"message of {len(body)} bytes exceeds limit")
    return _LEN.pack(len(body)) + body


class FrameDecoder:
    """Incremental decoder: feed raw bytes, iterate complete messages."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> Iterator[dict[str, Any]]:
        self._buf.extend(data)
        while True:
            if len(self._buf) < _LEN.size:
                return
            (length,) = _LEN.unpack_from(self._buf)
            if length > MAX_MESSAGE_BYTES:
                raise ValueError(f"frame of {length} bytes exceeds limit")
            if len(self._buf) < _LEN.size + length:
                return
            body = bytes(self._buf[_LEN.size:_LEN.size + length])
            del self._buf[:_LEN.size + length]
            yield json.loads(body.decode("utf-8"))


def pack_array(values: np.ndarray) -> dict[str, Any]:
    """Row-major little-endian f32 packing with a declared shape."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    return {
        "dtype": "f32le",
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def unpack_array(packed: dict[str, Any]) -> np.ndarray:
    if packed.get("dtype") != "f32le":
        raise ValueError(f"unsupported dtype {packed.get('dtype')!r}")
    raw = base64.b64decode(packed["data"])
    return np.frombuffer(raw, dtype="<f4").reshape(packed["shape"]).copy()


class ProtocolError(RuntimeError):
    def __init__(self, message: str, code: str | None = None,
                 field: str | None = None):
        super().__init__(message)
        self.code = code
        self.field = field


class LabClient:
    """Blocking client used by the test-suite and scripts.

    Frames arriving while a request awaits its reply are queued and later
    drained with :meth:`frames` / :meth:`next_frame`.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._decoder = FrameDecoder()
        self._pending: list[dict[str, Any]] = []
        self._next_id = 0

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_message(self) -> dict[str, Any]:
        if self._pending:
            return self._pending.pop(0)
        while True:
            data = self._sock.recv(65536)
            if not data:
                raise ConnectionError("server closed the stream")
            messages = list(self._decoder.feed(data))
            if messages:
                self._pending.extend(messages[1:])
                return messages[0]

    def request(self, message: dict[str, Any],
                raise_on_error: bool = True) -> dict[str, Any]:
        """Send one request and wait for its reply, buffering frames."""
        self._next_id += 1
        message = dict(message, id=self._next_id)
        self._sock.sendall(encode_message(message))
        frames: list[dict[str, Any]] = []
        while True:
            reply = self._read_message()
            if reply.get("reply_to") == self._next_id:
                self._pending = frames + self._pending
                if raise_on_error and reply.get("type") == "error":
                    raise ProtocolError(reply.get("message", "server error"),
                                        code=reply.get("code"),
                                        field=reply.get("field"))
                return reply
            frames.append(reply)

    def next_frame(self, timeout: float | None = None) -> dict[str, Any]:
        """Next asynchronous message (frame or event)."""
        if timeout is not None:
            self._sock.settimeout(timeout)
        try:
            return self._read_message()
        finally:
            if timeout is not None:
                self._sock.settimeout(30.0)

    # Convenience wrappers -------------------------------------------------

    def create(self, experiment: str, params: dict | None = None,
               **options) -> dict[str, Any]:
        msg = {"type": "create", "experiment": experiment,
               "params": params or {}}
        msg.update(options)
        return self.request(msg)["session"]

    def update(self, session_id: str, patch: dict) -> dict[str, Any]:
        return self.request({"type": "update", "session": session_id,
                             "patch": patch})

    def control(self, session_id: str, action: str,
                n: int | None = None) -> dict[str, Any]:
        msg: dict[str, Any] = {"type": "control", "session": session_id,
                               "action": action}
        if n is not None:
            msg["n"] = n
        return self.request(msg)["session"]

    def subscribe(self, session_id: str,
                  from_step: int | None = None) -> dict[str, Any]:
        msg: dict[str, Any] = {"type": "subscribe", "session": session_id}
        if from_step is not None:
            msg["from_step"] = from_step
        return self.request(msg)

    def close_session(self, session_id: str) -> dict[str, Any]:
        return self.request({"type": "close", "session": session_id})

    def health(self) -> dict[str, Any]:
        return self.request({"type": "health"})

    def schema(self) -> dict[str, Any]:
        return self.request({"type": "schema"})["experiments"]
