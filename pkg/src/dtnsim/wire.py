"""Wire formats for the DTN convergence layer.

All multi-byte fields are big-endian (network order). Five header layouts:

    MessageTypeHeader    3 bytes     msg_type:u8, node_id:u16
    DataPacketHeader    18 bytes     message_id:u64, last_hop:u16,
                                     packet_total:u32, packet_index:u32
    AckHeader           12 bytes     message_id:u64, node_id:u16, status:u16
    EpidemicHeader      12 bytes     message_id:u64, hop_count:u32
    SummaryVectorHeader  4+8n bytes  frag_block:u16, length:u16, ids:u64[n]

A message id packs a 16-bit source node id into the top bits and a 48-bit
microsecond generation timestamp into the low bits, so ids sort by source
then by age, and two messages from one node at distinct microseconds never
collide.

Decoding a fixed-size header tolerates trailing bytes (the rest of the
packet); a summary vector must match its declared length exactly.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

NODE_ID_MAX = 0xFFFF
TIMESTAMP_MAX = (1 << 48) - 1
HOP_COUNT_MAX = 0xFFFFFFFF
STATUS_MAX = 0xFFFF

ACK_STATUS_SUCCESS = 1
ACK_STATUS_FAILURE = 0


class WireError(ValueError):
    """Base class for header encode/decode failures."""


class TruncatedHeaderError(WireError):
    """Input shorter than the header's fixed size."""


class HeaderFormatError(WireError):
    """Structurally invalid field values in an otherwise long-enough input."""


class MsgType(enum.IntEnum):
    """Control packet kinds carried in the MessageTypeHeader."""

    BEACON = 1
    REPLY = 2
    REPLY_BACK = 3
    ACK = 4


@dataclass(frozen=True, order=True, slots=True)
class MessageId:
    """64-bit message identity: (source_node << 48) | timestamp_us."""

    raw: int

    def __post_init__(self) -> None:
        if not 0 <= self.raw <= 0xFFFFFFFFFFFFFFFF:
            raise ValueError(f"message id out of 64-bit range: {self.raw}")

    @property
    def source_node(self) -> int:
        return self.raw >> 48

    @property
    def timestamp_us(self) -> int:
        return self.raw & TIMESTAMP_MAX

    def __repr__(self) -> str:
        return f"MessageId({self.source_node}@{self.timestamp_us})"


def make_message_id(source_node: int, timestamp_us: int) -> MessageId:
    """Compose a MessageId from a node id and a microsecond timestamp."""
    if not 0 <= source_node <= NODE_ID_MAX:
        raise ValueError(f"source node out of 16-bit range: {source_node}")
    if not 0 <= timestamp_us <= TIMESTAMP_MAX:
        raise ValueError(f"timestamp out of 48-bit range: {timestamp_us}")
    return MessageId((source_node << 48) | timestamp_us)


_MESSAGE_TYPE = struct.Struct(">BH")
_DATA_PACKET = struct.Struct(">QHII")
_ACK = struct.Struct(">QHH")
_EPIDEMIC = struct.Struct(">QI")
_SUMMARY_HEAD = struct.Struct(">HH")
_ID = struct.Struct(">Q")

MESSAGE_TYPE_SIZE = _MESSAGE_TYPE.size  # 3
DATA_PACKET_SIZE = _DATA_PACKET.size  # 18
ACK_SIZE = _ACK.size  # 12
EPIDEMIC_SIZE = _EPIDEMIC.size  # 12
SUMMARY_HEAD_SIZE = _SUMMARY_HEAD.size  # 4

# Headers prepended to every data packet payload.
DATA_HEADERS_SIZE = EPIDEMIC_SIZE + DATA_PACKET_SIZE  # 30


def _require(data: bytes, size: int, name: str) -> None:
    if len(data) < size:
        raise TruncatedHeaderError(
            f"{name} needs {size} bytes, got {len(data)}"
        )


def _check_node(node_id: int, name: str) -> None:
    if not 0 <= node_id <= NODE_ID_MAX:
        raise ValueError(f"{name} out of 16-bit range: {node_id}")


@dataclass(frozen=True, slots=True)
class MessageTypeHeader:
    """Control packet envelope: packet kind plus sender node id."""

    msg_type: MsgType
    node_id: int

    def __post_init__(self) -> None:
        if self.msg_type not in MsgType.__members__.values():
            raise ValueError(f"unknown message type: {self.msg_type}")
        _check_node(self.node_id, "node_id")

    def encode(self) -> bytes:
        return _MESSAGE_TYPE.pack(int(self.msg_type), self.node_id)

    @classmethod
    def decode(cls, data: bytes) -> "MessageTypeHeader":
        _require(data, MESSAGE_TYPE_SIZE, "MessageTypeHeader")
        code, node_id = _MESSAGE_TYPE.unpack_from(data)
        try:
            msg_type = MsgType(code)
        except ValueError:
            raise HeaderFormatError(f"unknown msg_type code {code}") from None
        return cls(msg_type, node_id)


@dataclass(frozen=True, slots=True)
class DataPacketHeader:
    """Per-packet message membership: id, forwarder, and reassembly position."""

    message_id: MessageId
    last_hop: int
    packet_total: int
    packet_index: int

    def __post_init__(self) -> None:
        _check_node(self.last_hop, "last_hop")
        if self.packet_total < 1 or self.packet_total > 0xFFFFFFFF:
            raise ValueError(f"packet_total out of range: {self.packet_total}")
        if not 0 <= self.packet_index < self.packet_total:
            raise ValueError(
                f"packet_index {self.packet_index} not below total {self.packet_total}"
            )

    def encode(self) -> bytes:
        return _DATA_PACKET.pack(
            self.message_id.raw, self.last_hop, self.packet_total, self.packet_index
        )

    @classmethod
    def decode(cls, data: bytes) -> "DataPacketHeader":
        _require(data, DATA_PACKET_SIZE, "DataPacketHeader")
        raw, last_hop, total, index = _DATA_PACKET.unpack_from(data)
        if total < 1:
            raise HeaderFormatError("packet_total must be at least 1")
        if index >= total:
            raise HeaderFormatError(
                f"packet_index {index} not below total {total}"
            )
        return cls(MessageId(raw), last_hop, total, index)


@dataclass(frozen=True, slots=True)
class AckHeader:
    """Hop-by-hop acknowledgement of one completely received message."""

    message_id: MessageId
    node_id: int
    status: int = ACK_STATUS_SUCCESS

    def __post_init__(self) -> None:
        _check_node(self.node_id, "node_id")
        if not 0 <= self.status <= STATUS_MAX:
            raise ValueError(f"status out of 16-bit range: {self.status}")

    def encode(self) -> bytes:
        return _ACK.pack(self.message_id.raw, self.node_id, self.status)

    @classmethod
    def decode(cls, data: bytes) -> "AckHeader":
        _require(data, ACK_SIZE, "AckHeader")
        raw, node_id, status = _ACK.unpack_from(data)
        return cls(MessageId(raw), node_id, status)


@dataclass(frozen=True, slots=True)
class EpidemicHeader:
    """Routing header on every data packet: message id and remaining hops."""

    message_id: MessageId
    hop_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.hop_count <= HOP_COUNT_MAX:
            raise ValueError(f"hop_count out of 32-bit range: {self.hop_count}")

    def encode(self) -> bytes:
        return _EPIDEMIC.pack(self.message_id.raw, self.hop_count)

    @classmethod
    def decode(cls, data: bytes) -> "EpidemicHeader":
        _require(data, EPIDEMIC_SIZE, "EpidemicHeader")
        raw, hops = _EPIDEMIC.unpack_from(data)
        return cls(MessageId(raw), hops)


@dataclass(frozen=True, slots=True)
class SummaryVectorHeader:
    """One fragment of a buffer summary: ordered message ids.

    frag_block is 1 when more fragments follow, 0 on the last fragment.
    """

    frag_block: int
    ids: tuple[MessageId, ...]

    def __post_init__(self) -> None:
        if self.frag_block not in (0, 1):
            raise ValueError(f"frag_block must be 0 or 1: {self.frag_block}")
        if len(self.ids) > 0xFFFF:
            raise ValueError(f"too many ids for one fragment: {len(self.ids)}")

    @property
    def length(self) -> int:
        return len(self.ids)

    def encode(self) -> bytes:
        parts = [_SUMMARY_HEAD.pack(self.frag_block, len(self.ids))]
        parts.extend(_ID.pack(mid.raw) for mid in self.ids)
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> "SummaryVectorHeader":
        _require(data, SUMMARY_HEAD_SIZE, "SummaryVectorHeader")
        frag_block, length = _SUMMARY_HEAD.unpack_from(data)
        if frag_block not in (0, 1):
            raise HeaderFormatError(f"frag_block must be 0 or 1: {frag_block}")
        expected = SUMMARY_HEAD_SIZE + 8 * length
        if len(data) != expected:
            raise HeaderFormatError(
                f"summary vector declares {length} ids ({expected} bytes), got {len(data)} bytes"
            )
        ids = tuple(
            MessageId(_ID.unpack_from(data, SUMMARY_HEAD_SIZE + 8 * i)[0])
            for i in range(length)
        )
        return cls(frag_block, ids)


Header = (
    MessageTypeHeader
    | DataPacketHeader
    | AckHeader
    | EpidemicHeader
    | SummaryVectorHeader
)

_HEADER_KINDS = {
    "message_type": MessageTypeHeader,
    "data_packet": DataPacketHeader,
    "ack": AckHeader,
    "epidemic": EpidemicHeader,
    "summary_vector": SummaryVectorHeader,
}


def encode_header(header: Header) -> bytes:
    """Serialize any header to its wire bytes."""
    return header.encode()


def decode_header(kind: str | type, data: bytes) -> Header:
    """Decode `data` as the named header kind.

    `kind` is a header class or one of: message_type, data_packet, ack,
    epidemic, summary_vector. Raises TruncatedHeaderError on short input
    and HeaderFormatError on invalid field values.
    """
    cls = _HEADER_KINDS[kind] if isinstance(kind, str) else kind
    return cls.decode(data)
