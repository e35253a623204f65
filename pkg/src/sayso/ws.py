"""Minimal WebSocket server transport (RFC 6455, text frames).

Just enough of the protocol for a localhost UI client: the opening
handshake, client-to-server masking, ping/pong, close, and all three
payload-length encodings. Server frames are never masked. Binary frames
are not supported; the wire protocol is JSON text.
"""

from __future__ import annotations

import base64
import hashlib
import socket
import struct
import threading
from typing import Optional

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

# opcodes
_CONT = 0x0
_TEXT = 0x1
_BINARY = 0x2
_CLOSE = 0x8
_PING = 0x9
_PONG = 0xA

_MAX_HEADER = 16 * 1024
_MAX_PAYLOAD = 16 * 1024 * 1024


class WSError(OSError):
    """Handshake or framing violation."""


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WSError("connection closed mid-frame")
        buf += chunk
    return buf


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake(sock: socket.socket) -> None:
    """Read one HTTP upgrade request and answer 101, or raise WSError."""
    data = b""
    while b"\r\n\r\n" not in data:
        if len(data) > _MAX_HEADER:
            raise WSError("oversized handshake request")
        chunk = sock.recv(4096)
        if not chunk:
            raise WSError("connection closed during handshake")
        data += chunk
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    if not lines[0].startswith("GET "):
        raise WSError(f"not a websocket GET: {lines[0]!r}")
    headers = {}
    for line in lines[1:]:
        name, sep, value = line.partition(":")
        if sep:
            headers[name.strip().lower()] = value.strip()
    if "websocket" not in headers.get("upgrade", "").lower():
        raise WSError("missing Upgrade: websocket")
    key = headers.get("sec-websocket-key")
    if not key:
        raise WSError("missing Sec-WebSocket-Key")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n"
        "\r\n"
    )
    sock.sendall(response.encode("ascii"))


class WSConnection:
    """One accepted client. recv_text runs in the reader thread; send_text
    may be called from any thread (sends are serialized by a lock)."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._send_lock = threading.Lock()
        self._open = True

    # -- sending ------------------------------------------------------------

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        head = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head += bytes([n])
        elif n < 1 << 16:
            head += bytes([126]) + struct.pack(">H", n)
        else:
            head += bytes([127]) + struct.pack(">Q", n)
        with self._send_lock:
            self.sock.sendall(head + payload)

    def send_text(self, text: str) -> None:
        self._send_frame(_TEXT, text.encode("utf-8"))

    # -- receiving ----------------------------------------------------------

    def _read_frame(self) -> tuple[bool, int, bytes]:
        b0, b1 = _read_exact(self.sock, 2)
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        n = b1 & 0x7F
        if n == 126:
            n = struct.unpack(">H", _read_exact(self.sock, 2))[0]
        elif n == 127:
            n = struct.unpack(">Q", _read_exact(self.sock, 8))[0]
        if n > _MAX_PAYLOAD:
            raise WSError(f"frame too large ({n} bytes)")
        if not masked:
            # clients MUST mask (RFC 6455 section 5.1)
            raise WSError("unmasked client frame")
        key = _read_exact(self.sock, 4)
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(_read_exact(self.sock, n)))
        return fin, opcode, payload

    def recv_text(self) -> Optional[str]:
        """Next complete text message, or None once the peer closes."""
        message = b""
        in_fragments = False
        while True:
            try:
                fin, opcode, payload = self._read_frame()
            except (WSError, OSError):
                self._open = False
                return None
            if opcode == _PING:
                try:
                    self._send_frame(_PONG, payload)
                except OSError:
                    pass
                continue
            if opcode == _PONG:
                continue
            if opcode == _CLOSE:
                self.close(reply=True)
                return None
            if opcode == _BINARY:
                raise WSError("binary frames not supported")
            if opcode == _TEXT:
                if in_fragments:
                    raise WSError("new message inside a fragmented one")
                message = payload
                if fin:
                    return message.decode("utf-8")
                in_fragments = True
            elif opcode == _CONT:
                if not in_fragments:
                    raise WSError("continuation without a start frame")
                message += payload
                if fin:
                    return message.decode("utf-8")
            else:
                raise WSError(f"unknown opcode {opcode}")

    def close(self, reply: bool = False) -> None:
        if self._open:
            self._open = False
            try:
                self._send_frame(_CLOSE, struct.pack(">H", 1000))
            except OSError:
                pass
        if not reply:
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.sock.close()


class WSListener:
    """Bound listening socket; accept() completes the websocket handshake."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.listen(8)
        self.host, self.port = self.sock.getsockname()

    def accept(self) -> WSConnection:
        client, _addr = self.sock.accept()
        client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            handshake(client)
        except WSError:
            client.close()
            raise
        return WSConnection(client)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass
