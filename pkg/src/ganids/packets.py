"""Classic pcap reading/writing and Ethernet/IPv4/TCP/UDP frame decoding.

Only the classic format (magic 0xa1b2c3d4 family) is handled, in both byte
orders and both timestamp resolutions. Nanosecond captures are folded to
microseconds on read so the rest of the pipeline sees one clock. Link type
must be Ethernet.

Decoding is deliberately total above the Ethernet layer: anything that is
not clean IPv4 carrying TCP or UDP comes back as protocol OTHER instead of
an exception, so a fuzzed or damaged capture still yields usable records.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from .errors import (
    FrameTooShortError,
    TruncatedHeaderError,
    TruncatedRecordError,
    UnknownMagicError,
    UnsupportedLinkTypeError,
)

# Magic bytes as they appear on disk for each (byte order, resolution) pair.
_MAGIC_TABLE = {
    b"\xa1\xb2\xc3\xd4": ("big", "micro"),
    b"\xd4\xc3\xb2\xa1": ("little", "micro"),
    b"\xa1\xb2\x3c\x4d": ("big", "nano"),
    b"\x4d\x3c\xb2\xa1": ("little", "nano"),
}

LINKTYPE_ETHERNET = 1

_ETHERTYPE_IPV4 = 0x0800
_IP_PROTO_TCP = 6
_IP_PROTO_UDP = 17
# Payload-less IPv4 protocol number used when serializing OTHER records so
# their addresses survive a round trip (253 is reserved for experiments).
_IP_PROTO_OPAQUE = 253

_GLOBAL_HDR = struct.Struct("<IHHiIII")
_RECORD_HDR_FMT = "IIII"


class Protocol(enum.Enum):
    TCP = "tcp"
    UDP = "udp"
    OTHER = "other"


class TcpFlags(enum.IntFlag):
    """TCP flag bits at their wire positions in the flags byte."""

    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10
    URG = 0x20


@dataclass(slots=True)
class PacketRecord:
    """One decoded frame, reduced to the fields the feature layer needs."""

    ts_micros: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    protocol: Protocol
    tcp_flags: TcpFlags
    frame_len: int


@dataclass(slots=True)
class CaptureMeta:
    endianness: str
    ts_resolution: str
    link_type: int = LINKTYPE_ETHERNET


def _ip_to_str(raw: bytes) -> str:
    return ".".join(str(b) for b in raw)


def _ip_to_bytes(ip: str) -> bytes:
    return bytes(int(part) for part in ip.split("."))


def decode_frame(frame: bytes, ts_micros: int) -> PacketRecord:
    """Decode one Ethernet frame into a PacketRecord.

    EtherType 0x0800 with a valid IPv4 header carrying protocol 6 or 17
    yields a TCP/UDP record; every other well-formed-enough frame yields
    protocol OTHER with zero ports. Frames shorter than the Ethernet
    header are rejected.
    """
    if len(frame) < 14:
        raise FrameTooShortError(len(frame))

    record = PacketRecord(
        ts_micros=ts_micros,
        src_ip="0.0.0.0",
        dst_ip="0.0.0.0",
        src_port=0,
        dst_port=0,
        protocol=Protocol.OTHER,
        tcp_flags=TcpFlags(0),
        frame_len=len(frame),
    )

    ethertype = int.from_bytes(frame[12:14], "big")
    if ethertype != _ETHERTYPE_IPV4 or len(frame) < 34:
        return record

    ip = frame[14:]
    version = ip[0] >> 4
    ihl = ip[0] & 0x0F
    if version != 4 or ihl < 5 or len(ip) < ihl * 4:
        return record

    record.src_ip = _ip_to_str(ip[12:16])
    record.dst_ip = _ip_to_str(ip[16:20])
    proto = ip[9]
    l4 = ip[ihl * 4:]

    if proto == _IP_PROTO_TCP and len(l4) >= 14:
        record.protocol = Protocol.TCP
        record.src_port = int.from_bytes(l4[0:2], "big")
        record.dst_port = int.from_bytes(l4[2:4], "big")
        record.tcp_flags = TcpFlags(l4[13] & 0x3F)
    elif proto == _IP_PROTO_UDP and len(l4) >= 8:
        record.protocol = Protocol.UDP
        record.src_port = int.from_bytes(l4[0:2], "big")
        record.dst_port = int.from_bytes(l4[2:4], "big")

    return record


def parse_pcap(data: bytes) -> tuple[CaptureMeta, list[PacketRecord]]:
    """Parse a classic pcap buffer into (CaptureMeta, records).

    Raises UnknownMagicError, TruncatedHeaderError, UnsupportedLinkTypeError
    or TruncatedRecordError; the last carries the records parsed before the
    cut so partial captures remain usable. frame_len is taken from orig_len
    (length on the wire), not from the captured byte count.
    """
    if len(data) < 24:
        # A short buffer that does not even hold the magic is still a
        # truncated header, but an unknown magic wins when 4+ bytes exist.
        if len(data) >= 4 and data[:4] not in _MAGIC_TABLE:
            raise UnknownMagicError(data[:4])
        raise TruncatedHeaderError(len(data))

    try:
        endianness, resolution = _MAGIC_TABLE[data[:4]]
    except KeyError:
        raise UnknownMagicError(data[:4]) from None

    prefix = "<" if endianness == "little" else ">"
    _, _, _, _, _, link_type = struct.unpack(prefix + "HHiIII", data[4:24])
    if link_type != LINKTYPE_ETHERNET:
        raise UnsupportedLinkTypeError(link_type)

    meta = CaptureMeta(endianness=endianness, ts_resolution=resolution, link_type=link_type)
    record_hdr = struct.Struct(prefix + _RECORD_HDR_FMT)

    records: list[PacketRecord] = []
    offset = 24
    while offset < len(data):
        if offset + 16 > len(data):
            raise TruncatedRecordError(offset, records)
        ts_sec, ts_frac, incl_len, orig_len = record_hdr.unpack_from(data, offset)
        offset += 16
        if offset + incl_len > len(data):
            raise TruncatedRecordError(offset - 16, records)
        frame = data[offset:offset + incl_len]
        offset += incl_len

        if resolution == "nano":
            ts_micros = ts_sec * 1_000_000 + ts_frac // 1000
        else:
            ts_micros = ts_sec * 1_000_000 + ts_frac
        record = decode_frame(frame, ts_micros)
        record.frame_len = orig_len
        records.append(record)

    return meta, records


def _ipv4_checksum(header: bytearray) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def encode_frame(record: PacketRecord) -> bytes:
    """Synthesize a minimal Ethernet/IPv4 frame for a record.

    The frame is zero-padded out to frame_len when that exceeds the header
    stack; OTHER records ride an opaque IPv4 protocol number so addresses
    survive a round trip.
    """
    if record.protocol is Protocol.TCP:
        l4 = struct.pack(
            ">HHIIBBHHH",
            record.src_port, record.dst_port, 0, 0,
            5 << 4, int(record.tcp_flags) & 0x3F, 8192, 0, 0,
        )
        proto = _IP_PROTO_TCP
    elif record.protocol is Protocol.UDP:
        l4 = struct.pack(">HHHH", record.src_port, record.dst_port, 8, 0)
        proto = _IP_PROTO_UDP
    else:
        l4 = b""
        proto = _IP_PROTO_OPAQUE

    pad = max(0, record.frame_len - (14 + 20 + len(l4)))
    ip_total = 20 + len(l4) + pad

    ip = bytearray(20)
    ip[0] = 0x45
    ip[2:4] = ip_total.to_bytes(2, "big")
    ip[8] = 64
    ip[9] = proto
    ip[12:16] = _ip_to_bytes(record.src_ip)
    ip[16:20] = _ip_to_bytes(record.dst_ip)
    ip[10:12] = _ipv4_checksum(ip).to_bytes(2, "big")

    src_mac = b"\x02\x00" + ip[12:16]
    dst_mac = b"\x02\x00" + ip[16:20]
    eth = dst_mac + src_mac + _ETHERTYPE_IPV4.to_bytes(2, "big")
    return bytes(eth) + bytes(ip) + l4 + b"\x00" * pad


def write_pcap(records: list[PacketRecord], endianness: str = "little") -> bytes:
    """Serialize records as a classic microsecond pcap (Ethernet, v2.4).

    incl_len and orig_len both carry frame_len whenever frame_len covers the
    synthesized header stack; for shorter (sub-minimum) lengths the frame is
    emitted whole and orig_len alone keeps frame_len, so parse_pcap still
    reproduces every field.
    """
    prefix = "<" if endianness == "little" else ">"
    magic = b"\xd4\xc3\xb2\xa1" if endianness == "little" else b"\xa1\xb2\xc3\xd4"
    out = [magic + struct.pack(prefix + "HHiIII", 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET)]
    record_hdr = struct.Struct(prefix + _RECORD_HDR_FMT)

    for record in records:
        frame = encode_frame(record)
        out.append(record_hdr.pack(
            record.ts_micros // 1_000_000,
            record.ts_micros % 1_000_000,
            len(frame),
            record.frame_len,
        ))
        out.append(frame)
    return b"".join(out)
