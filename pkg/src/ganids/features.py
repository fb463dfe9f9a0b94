"""Windowed per-device traffic statistics.

Each monitored device accumulates a bounded, time-ordered history of the
packets it sent or received. A feature vector snapshots that history over
the last 50, 100, 500 and 2000 packets; every window contributes the same
13 statistics, giving 52 dimensions total.

Per-window statistics, in order:

  0  pkt_count_mean   mean of per-second packet counts over spanned seconds
  1  pkt_count_std    population std of the same counts
  2  len_mean         mean frame length
  3  len_std          population std of frame lengths
  4  iat_mean         mean inter-arrival time, seconds (0 if under 2 pkts)
  5  iat_std          population std of inter-arrival times
  6  uniq_local_ports   distinct device-side ports (TCP/UDP packets only)
  7  uniq_remote_ports  distinct far-side ports (TCP/UDP packets only)
  8  tcp_ratio        fraction of packets that are TCP
  9  psh_count        packets with PSH set
 10  urg_count        packets with URG set
 11  idle_secs        total gap time from gaps > 1.0 s between packets
 12  active_secs      window time span minus idle_secs

Seconds are bucketed relative to the first packet in the window; a window
spanning t seconds has floor(t)+1 buckets and silent buckets count as zero.
Statistics are recomputed from the raw window on every call; nothing is
maintained incrementally.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyWindowError, LengthMismatchError
from .packets import PacketRecord, Protocol, TcpFlags

WINDOW_SIZES = (50, 100, 500, 2000)
FEATURES_PER_WINDOW = 13
FEATURE_DIM = FEATURES_PER_WINDOW * len(WINDOW_SIZES)
HISTORY_LIMIT = max(WINDOW_SIZES)

# Column layout of the internal history matrix.
_TS, _LEN, _TCP, _OTHER, _PSH, _URG, _LPORT, _RPORT, _DIR = range(9)


class Direction(enum.Enum):
    OUT = "out"
    IN = "in"


class Label(enum.Enum):
    BENIGN = "benign"
    MALICIOUS = "malicious"
    UNLABELED = "unlabeled"


@dataclass(slots=True)
class DirectionalPacket:
    """One packet as seen from a particular device's point of view."""

    ts_micros: int
    direction: Direction
    length: int
    protocol: Protocol
    tcp_flags: TcpFlags
    local_port: int
    remote_port: int


@dataclass(slots=True)
class FeatureVector:
    device_ip: str
    values: np.ndarray
    label: Label = Label.UNLABELED


def _packet_row(pkt: DirectionalPacket) -> tuple:
    return (
        pkt.ts_micros,
        pkt.length,
        1 if pkt.protocol is Protocol.TCP else 0,
        1 if pkt.protocol is Protocol.OTHER else 0,
        1 if TcpFlags.PSH in pkt.tcp_flags else 0,
        1 if TcpFlags.URG in pkt.tcp_flags else 0,
        pkt.local_port,
        pkt.remote_port,
        1 if pkt.direction is Direction.OUT else 0,
    )


class DeviceStream:
    """Bounded history of the most recent HISTORY_LIMIT packets of a device.

    Stored columnar (one int64 matrix) so window statistics vectorize; the
    matrix is compacted in place when the write head reaches capacity, which
    keeps every window a contiguous slice.
    """

    def __init__(self, device_ip: str):
        self.device_ip = device_ip
        self.total_seen = 0
        self._buf = np.empty((4 * HISTORY_LIMIT, 9), dtype=np.int64)
        self._start = 0
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def append(self, pkt: DirectionalPacket) -> None:
        end = self._start + self._count
        if end == len(self._buf):
            keep = self._buf[end - HISTORY_LIMIT:end]
            self._buf[:HISTORY_LIMIT] = keep
            self._start, self._count = 0, HISTORY_LIMIT
            end = HISTORY_LIMIT
        self._buf[end] = _packet_row(pkt)
        if self._count == HISTORY_LIMIT:
            self._start += 1
        else:
            self._count += 1
        self.total_seen += 1

    def window(self, size: int) -> np.ndarray:
        """Last min(size, len) history rows as a read-only view."""
        n = min(size, self._count)
        end = self._start + self._count
        return self._buf[end - n:end]

    def history(self) -> list[DirectionalPacket]:
        """Materialize the buffer as DirectionalPacket objects (inspection/tests)."""
        out = []
        for row in self.window(HISTORY_LIMIT):
            proto = Protocol.TCP if row[_TCP] else (Protocol.OTHER if row[_OTHER] else Protocol.UDP)
            flags = TcpFlags((TcpFlags.PSH if row[_PSH] else 0) | (TcpFlags.URG if row[_URG] else 0))
            out.append(DirectionalPacket(
                ts_micros=int(row[_TS]),
                direction=Direction.OUT if row[_DIR] else Direction.IN,
                length=int(row[_LEN]),
                protocol=proto,
                tcp_flags=flags,
                local_port=int(row[_LPORT]),
                remote_port=int(row[_RPORT]),
            ))
        return out


def _window_stats(rows: np.ndarray) -> np.ndarray:
    n = len(rows)
    ts = rows[:, _TS]
    feats = np.zeros(FEATURES_PER_WINDOW)

    span_micros = int(ts[-1] - ts[0])
    sec_idx = (ts - ts[0]) // 1_000_000
    counts = np.bincount(sec_idx, minlength=span_micros // 1_000_000 + 1)
    feats[0] = counts.mean()
    feats[1] = counts.std()

    lens = rows[:, _LEN].astype(np.float64)
    feats[2] = lens.mean()
    feats[3] = lens.std()

    if n >= 2:
        gaps_micros = np.diff(ts)
        iat = gaps_micros / 1e6
        feats[4] = iat.mean()
        feats[5] = iat.std()
        idle = float(gaps_micros[gaps_micros > 1_000_000].sum()) / 1e6
    else:
        idle = 0.0

    ported = rows[rows[:, _OTHER] == 0]
    feats[6] = len(np.unique(ported[:, _LPORT]))
    feats[7] = len(np.unique(ported[:, _RPORT]))

    feats[8] = rows[:, _TCP].sum() / n
    feats[9] = rows[:, _PSH].sum()
    feats[10] = rows[:, _URG].sum()
    feats[11] = idle
    feats[12] = span_micros / 1e6 - idle
    return feats


def window_features(window: Sequence[DirectionalPacket]) -> np.ndarray:
    """13 statistics over an explicit packet window (see module docstring)."""
    if len(window) == 0:
        raise EmptyWindowError("cannot compute statistics over an empty window")
    rows = np.array([_packet_row(p) for p in window], dtype=np.int64)
    return _window_stats(rows)


def feature_vector(stream: DeviceStream) -> FeatureVector:
    """Stack the 13 statistics over all four windows into one 52-dim vector.

    Windows larger than the available history fall back to the full history;
    an empty stream yields the all-zero vector.
    """
    values = np.zeros(FEATURE_DIM)
    if len(stream) > 0:
        for i, size in enumerate(WINDOW_SIZES):
            values[i * FEATURES_PER_WINDOW:(i + 1) * FEATURES_PER_WINDOW] = \
                _window_stats(stream.window(size))
    return FeatureVector(device_ip=stream.device_ip, values=values)


class DeviceTracker:
    """Routes decoded packets onto per-device streams.

    A packet lands on the stream of each monitored device it touches: the
    source device sees it as outbound, the destination device as inbound,
    and a packet between two monitored devices lands on both.
    """

    def __init__(self, device_set: Iterable[str]):
        self.device_set = frozenset(device_set)
        self.streams = {ip: DeviceStream(ip) for ip in self.device_set}

    def ingest(self, record: PacketRecord) -> list[str]:
        """Append the packet to every stream it touches; returns those device IPs."""
        touched = []
        if record.src_ip in self.device_set:
            self.streams[record.src_ip].append(DirectionalPacket(
                ts_micros=record.ts_micros,
                direction=Direction.OUT,
                length=record.frame_len,
                protocol=record.protocol,
                tcp_flags=record.tcp_flags,
                local_port=record.src_port,
                remote_port=record.dst_port,
            ))
            touched.append(record.src_ip)
        if record.dst_ip in self.device_set:
            self.streams[record.dst_ip].append(DirectionalPacket(
                ts_micros=record.ts_micros,
                direction=Direction.IN,
                length=record.frame_len,
                protocol=record.protocol,
                tcp_flags=record.tcp_flags,
                local_port=record.dst_port,
                remote_port=record.src_port,
            ))
            touched.append(record.dst_ip)
        return touched

    def device_ips(self) -> list[str]:
        return sorted(self.streams, key=ip_sort_key)


def ip_sort_key(ip: str) -> tuple:
    return tuple(int(part) for part in ip.split("."))


# ------------------------------------------------------------ normalization

@dataclass(slots=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray


def normalize(matrix: np.ndarray, stats: NormStats | None = None) -> tuple[np.ndarray, NormStats]:
    """Z-score a [n, 52] matrix per dimension.

    Without stats, mean and population std are fitted from the matrix
    itself; pass the training stats back in to transform held-out data the
    same way. Dimensions whose std is below 1e-9 map to 0.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if stats is None:
        stats = NormStats(mean=matrix.mean(axis=0), std=matrix.std(axis=0))
    if matrix.shape[-1] != stats.mean.shape[0]:
        raise LengthMismatchError(
            f"matrix has {matrix.shape[-1]} dims, stats have {stats.mean.shape[0]}")
    live = stats.std >= 1e-9
    out = np.zeros_like(matrix)
    np.divide(matrix - stats.mean, stats.std, out=out, where=live)
    out[..., ~live] = 0.0
    return out, stats


def stack_values(vectors: Sequence[FeatureVector]) -> np.ndarray:
    return np.stack([v.values for v in vectors]) if vectors else np.empty((0, FEATURE_DIM))


# ---------------------------------------------------------------- CSV layer

CSV_HEADER = ["device_ip", "label"] + [f"f{i:02d}" for i in range(FEATURE_DIM)]


def write_feature_csv(path: str | Path, vectors: Sequence[FeatureVector]) -> None:
    """Write vectors as CSV, rows sorted by device IP (stable within a device).

    The caller's per-device ordering is extraction order, so the stable sort
    realizes the (device_ip ascending, then extraction time) contract.
    """
    ordered = sorted(vectors, key=lambda v: ip_sort_key(v.device_ip))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for vec in ordered:
            writer.writerow([vec.device_ip, vec.label.value] + [repr(float(x)) for x in vec.values])


def read_feature_csv(path: str | Path) -> list[FeatureVector]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise LengthMismatchError(f"unexpected CSV header: {header[:4]}...")
        out = []
        for row in reader:
            out.append(FeatureVector(
                device_ip=row[0],
                label=Label(row[1]),
                values=np.array([float(x) for x in row[2:]]),
            ))
    return out
