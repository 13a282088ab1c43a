"""Server-side WebSocket framing (RFC 6455), just enough for the control
service: handshake computation, unmasked server frames out, masked client
frames in, with ping/pong and close handling. Pure functions and a stateful
byte-stream decoder; no sockets here."""

from __future__ import annotations

import base64
import hashlib

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
MAX_MESSAGE = 1 << 20  # refuse absurd frames instead of buffering them

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA
_CONTROL_OPS = {OP_CLOSE: "close", OP_PING: "ping", OP_PONG: "pong"}


class WsProtocolError(ValueError):
    pass


def accept_key(key: str) -> str:
    digest = hashlib.sha1((key.strip() + GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake_response(key: str) -> bytes:
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
        "\r\n"
    ).encode("ascii")


def handshake_reject(reason: str) -> bytes:
    body = reason.encode("utf-8") + b"\n"
    return (
        "HTTP/1.1 400 Bad Request\r\n"
        "Connection: close\r\n"
        "Content-Type: text/plain; charset=utf-8\r\n"
        f"Content-Length: {len(body)}\r\n"
        "\r\n"
    ).encode("ascii") + body


def encode_frame(opcode: int, payload: bytes = b"") -> bytes:
    head = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < 1 << 16:
        head.append(126)
        head += n.to_bytes(2, "big")
    else:
        head.append(127)
        head += n.to_bytes(8, "big")
    return bytes(head) + payload


def encode_text(text: str) -> bytes:
    return encode_frame(OP_TEXT, text.encode("utf-8"))


def encode_close(code: int = 1000) -> bytes:
    return encode_frame(OP_CLOSE, code.to_bytes(2, "big"))


def encode_pong(payload: bytes = b"") -> bytes:
    return encode_frame(OP_PONG, payload)


class FrameDecoder:
    """Incremental decoder. feed() returns complete message events as
    (kind, payload) pairs with kind in text/binary/close/ping/pong;
    fragmented data frames are reassembled before being reported."""

    def __init__(self):
        self._buf = bytearray()
        self._frag_op: "int | None" = None
        self._frag = bytearray()

    def feed(self, data: bytes) -> list[tuple[str, bytes]]:
        self._buf += data
        events: list[tuple[str, bytes]] = []
        while True:
            frame = self._next_frame()
            if frame is None:
                return events
            fin, opcode, payload = frame
            if opcode in _CONTROL_OPS:
                if not fin:
                    raise WsProtocolError("fragmented control frame")
                events.append((_CONTROL_OPS[opcode], payload))
            elif opcode in (OP_TEXT, OP_BINARY):
                if self._frag_op is not None:
                    raise WsProtocolError("new data frame inside a fragmented message")
                if fin:
                    events.append(("text" if opcode == OP_TEXT else "binary", payload))
                else:
                    self._frag_op = opcode
                    self._frag = bytearray(payload)
            elif opcode == OP_CONT:
                if self._frag_op is None:
                    raise WsProtocolError("continuation frame without a start")
                self._frag += payload
                if len(self._frag) > MAX_MESSAGE:
                    raise WsProtocolError("message too large")
                if fin:
                    kind = "text" if self._frag_op == OP_TEXT else "binary"
                    events.append((kind, bytes(self._frag)))
                    self._frag_op = None
                    self._frag = bytearray()
            else:
                raise WsProtocolError(f"unsupported opcode {opcode:#x}")

    def _next_frame(self) -> "tuple[bool, int, bytes] | None":
        buf = self._buf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        if b0 & 0x70:
            raise WsProtocolError("reserved bits set")
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        n = b1 & 0x7F
        pos = 2
        if n == 126:
            if len(buf) < 4:
                return None
            n = int.from_bytes(buf[2:4], "big")
            pos = 4
        elif n == 127:
            if len(buf) < 10:
                return None
            n = int.from_bytes(buf[2:10], "big")
            pos = 10
        if n > MAX_MESSAGE:
            raise WsProtocolError("frame too large")
        key = b""
        if masked:
            if len(buf) < pos + 4:
                return None
            key = bytes(buf[pos : pos + 4])
            pos += 4
        if len(buf) < pos + n:
            return None
        payload = bytes(buf[pos : pos + n])
        if masked:
            payload = bytes(b ^ key[i & 3] for i, b in enumerate(payload))
        del buf[: pos + n]
        return fin, opcode, payload
