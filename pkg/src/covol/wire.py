"""Client/server wire protocol: JSON text frames plus binary audio frames.

Every message carries a protocol version; a major mismatch is answered
with an error and a close. Unknown tags decode fine (forward compat) and
are left to the caller to ignore.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1

CLIENT_TAGS = {
    "create_session",
    "join_session",
    "ready",
    "audio_chunk",
    "end_of_speech",
    "transcript",
    "leave",
}

SERVER_TAGS = {
    "session_created",
    "joined",
    "prompt_shown",
    "partial_transcript",
    "recognition_result",
    "try_again",
    "reward",
    "prompt_passed",
    "turn_changed",
    "session_complete",
    "error",
}

KNOWN_TAGS = CLIENT_TAGS | SERVER_TAGS


class MalformedFrame(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class WireMessage:
    type: str
    payload: dict = field(default_factory=dict)
    protocol_version: int = PROTOCOL_VERSION

    @property
    def known(self) -> bool:
        return self.type in KNOWN_TAGS


def encode(message: WireMessage) -> str:
    return json.dumps(
        {
            "type": message.type,
            "protocol_version": message.protocol_version,
            "payload": message.payload,
        },
        ensure_ascii=False,
        sort_keys=True,
    )


def decode(data) -> WireMessage:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"frame is not UTF-8: {exc}") from exc
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"frame is not JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise MalformedFrame("frame must be a JSON object")
    tag = raw.get("type")
    if not isinstance(tag, str) or not tag:
        raise MalformedFrame("missing type")
    version = raw.get("protocol_version")
    if not isinstance(version, int):
        raise MalformedFrame("missing protocol_version")
    payload = raw.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedFrame("payload must be an object")
    return WireMessage(type=tag, payload=payload, protocol_version=version)


def version_compatible(message: WireMessage) -> bool:
    return message.protocol_version == PROTOCOL_VERSION


# Binary audio frames: 4-byte big-endian sequence number, then raw PCM.

def encode_audio_frame(seq: int, pcm: bytes) -> bytes:
    return struct.pack(">I", seq) + pcm


def decode_audio_frame(frame: bytes) -> tuple[int, bytes]:
    if len(frame) < 4:
        raise MalformedFrame("audio frame shorter than sequence header")
    (seq,) = struct.unpack(">I", frame[:4])
    return seq, frame[4:]
