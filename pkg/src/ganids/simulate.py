"""Seeded synthetic traffic: benign device profiles, attack generators,
and labeled dataset assembly.

Three benign device presets (streaming webcam, home router, mostly-idle IP
camera) emit Poisson traffic shaped by a duty cycle, with request/response
pairing where that fits the device. Attack generators cover a SYN port
scan, telnet credential stuffing, a UDP flood, darknet-style background
scanning against unused address space, and a low-rate C2 beacon.

generate_dataset merges every stream on one timeline, replays it through
the feature tracker, and samples a labeled vector every `stride` packets
per device. A vector is malicious iff at least one attack packet sits in
that device's current history window, tracked by a parallel taint buffer
with the same eviction rule as the stream itself. Everything is driven by
one root seed through independent child streams, so identical scenario +
seed reproduces byte-identical pcap and CSV outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    NonPositiveDurationError,
    NonPositiveRateError,
    ScenarioFormatError,
    UnknownAttackError,
    UnknownProfileError,
)
from .features import (
    HISTORY_LIMIT,
    DeviceTracker,
    FeatureVector,
    Label,
    feature_vector,
    ip_sort_key,
)
from .packets import PacketRecord, Protocol, TcpFlags, write_pcap

DEVICE_KINDS = ("webcam_stream", "wifi_router", "ip_camera_idle")
ATTACK_KINDS = ("nmap_syn_scan", "telnet_bruteforce", "udp_flood",
                "darknet_scan_background", "cnc_beacon")

SCENARIO_VERSION = 1

_ACK = TcpFlags.ACK
_SYN = TcpFlags.SYN
_PSH_ACK = TcpFlags.PSH | TcpFlags.ACK
_RST_ACK = TcpFlags.RST | TcpFlags.ACK


@dataclass(slots=True)
class DeviceProfile:
    kind: str
    device_ip: str
    peer_ips: list[str]
    rate_pps: float          # packet rate while the duty cycle is on
    len_mean: float
    len_std: float
    len_min: int = 60
    len_max: int = 1514
    tcp_fraction: float = 0.9
    psh_prob: float = 0.3
    duty_on_s: float = 1.0
    duty_off_s: float = 0.0     # 0 -> always on
    active_until_s: float = 0.0  # device goes dark past this point; 0 -> never

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise UnknownProfileError(f"unknown device kind {self.kind!r}")
        if self.rate_pps <= 0:
            raise NonPositiveRateError(f"rate_pps must be positive, got {self.rate_pps}")
        if self.active_until_s < 0:
            raise NonPositiveDurationError(
                f"active_until_s must be >= 0, got {self.active_until_s}")


@dataclass(slots=True)
class AttackScenario:
    kind: str
    source_ip: str
    target_ips: list[str]
    intensity_pps: float
    duration_s: float
    start_s: float = 0.0
    seed: int = 0
    target_port: int | None = None
    port_count: int | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise UnknownAttackError(f"unknown attack kind {self.kind!r}")
        if self.intensity_pps <= 0:
            raise NonPositiveRateError(
                f"intensity_pps must be positive, got {self.intensity_pps}")
        if self.duration_s <= 0:
            raise NonPositiveDurationError(
                f"duration_s must be positive, got {self.duration_s}")


class _Emitter:
    """Accumulates records with strictly increasing timestamps."""

    def __init__(self):
        self.records: list[PacketRecord] = []
        self._last = -1

    def emit(self, ts_micros: float, src: str, dst: str, sport: int, dport: int,
             proto: Protocol, flags: TcpFlags, length: int) -> None:
        ts = max(int(ts_micros), self._last + 1)
        self._last = ts
        self.records.append(PacketRecord(
            ts_micros=ts, src_ip=src, dst_ip=dst, src_port=sport, dst_port=dport,
            protocol=proto, tcp_flags=flags if proto is Protocol.TCP else TcpFlags(0),
            frame_len=length,
        ))


def _draw_len(rng: np.random.Generator, profile: DeviceProfile) -> int:
    raw = rng.normal(profile.len_mean, profile.len_std)
    return int(np.clip(round(raw), profile.len_min, profile.len_max))


def _duty_on(profile: DeviceProfile, t: float) -> bool:
    """Is the device transmitting at time t (duty phase and lifetime)."""
    if profile.active_until_s and t >= profile.active_until_s:
        return False
    if profile.duty_off_s <= 0:
        return True
    return t % (profile.duty_on_s + profile.duty_off_s) < profile.duty_on_s


def _poisson_times(rng: np.random.Generator, rate: float, duration: float) -> list[float]:
    times = []
    t = rng.exponential(1.0 / rate)
    while t < duration:
        times.append(t)
        t += rng.exponential(1.0 / rate)
    return times


def simulate_benign(profile: DeviceProfile, duration_s: float,
                    seed) -> list[PacketRecord]:
    """Generate one device's benign traffic for duration_s seconds.

    Arrivals are Poisson at profile.rate_pps, thinned by the duty cycle.
    Timestamps are strictly increasing and lengths stay inside
    [len_min, len_max].
    """
    if duration_s <= 0:
        raise NonPositiveDurationError(f"duration_s must be positive, got {duration_s}")
    rng = np.random.default_rng(seed)
    out = _Emitter()
    dev = profile.device_ip

    if profile.kind == "wifi_router":
        # Request/response chatter: each event is an outbound query followed
        # by a larger reply from a rotating upstream service.
        services = [53, 80, 443, 123]
        for i, t in enumerate(_poisson_times(rng, profile.rate_pps / 2.0, duration_s)):
            if not _duty_on(profile, t):
                continue
            peer = profile.peer_ips[i % len(profile.peer_ips)]
            sport = 49152 + (i % 20) * 97
            dport = services[i % len(services)]
            tcp = rng.random() < profile.tcp_fraction
            proto = Protocol.TCP if tcp else Protocol.UDP
            qlen = int(np.clip(round(rng.normal(110.0, 30.0)), profile.len_min, profile.len_max))
            out.emit(t * 1e6, dev, peer, sport, dport, proto, _PSH_ACK, qlen)
            reply_t = t + rng.uniform(0.0005, 0.005)
            flags = _PSH_ACK if rng.random() < profile.psh_prob else _ACK
            out.emit(reply_t * 1e6, peer, dev, dport, sport, proto, flags,
                     _draw_len(rng, profile))
        return out.records

    if profile.kind == "webcam_stream":
        # Continuous media push to one collector; every 8th event is the
        # collector's ACK so the stream stays bidirectional.
        peer = profile.peer_ips[0]
        for i, t in enumerate(_poisson_times(rng, profile.rate_pps, duration_s)):
            if not _duty_on(profile, t):
                continue
            session_port = 49152 + (int(t) // 30 % 8) * 131
            tcp = rng.random() < profile.tcp_fraction
            proto = Protocol.TCP if tcp else Protocol.UDP
            if i % 8 == 7:
                out.emit(t * 1e6, peer, dev, session_port, 554, proto, _ACK, 60)
            else:
                flags = _PSH_ACK if rng.random() < profile.psh_prob else _ACK
                out.emit(t * 1e6, dev, peer, 554, session_port, proto, flags,
                         _draw_len(rng, profile))
        return out.records

    # ip_camera_idle: short keepalive bursts separated by silence.
    peer = profile.peer_ips[0]
    for i, t in enumerate(_poisson_times(rng, profile.rate_pps, duration_s)):
        if not _duty_on(profile, t):
            continue
        sport = 49152 + (i // 50 % 4) * 53
        tcp = rng.random() < profile.tcp_fraction
        proto = Protocol.TCP if tcp else Protocol.UDP
        if i % 4 == 3:
            out.emit(t * 1e6, peer, dev, 8883, sport, proto, _ACK, 60)
        else:
            flags = _PSH_ACK if rng.random() < profile.psh_prob else _ACK
            out.emit(t * 1e6, dev, peer, sport, 8883, proto, flags,
                     _draw_len(rng, profile))
    return out.records


def simulate_attack(scn: AttackScenario) -> list[PacketRecord]:
    """Generate one attack's packets on its scheduled [start_s, start_s+duration_s)."""
    rng = np.random.default_rng(scn.seed)
    out = _Emitter()
    start = scn.start_s
    attacker = scn.source_ip
    target = scn.target_ips[0]

    if scn.kind == "nmap_syn_scan":
        # One SYN per scanned port from a fresh ephemeral source port,
        # near-uniform spacing; every port answers closed (RST), so the scan
        # itself contributes exactly port_count SYNs.
        ports = scn.port_count or max(1, round(scn.intensity_pps * scn.duration_s))
        step = scn.duration_s / ports
        for k in range(ports):
            t = start + k * step + rng.uniform(0.0, 0.1) * step
            sport = int(rng.integers(1024, 65536))
            out.emit(t * 1e6, attacker, target, sport, 1 + k, Protocol.TCP, _SYN, 60)
            out.emit((t + rng.uniform(0.0002, 0.001)) * 1e6, target, attacker,
                     1 + k, sport, Protocol.TCP, _RST_ACK, 60)

    elif scn.kind == "telnet_bruteforce":
        # Repeated 8-packet login attempts against port 23; credential
        # packets carry PSH.
        session_rate = scn.intensity_pps / 8.0
        for s, t0 in enumerate(_poisson_times(rng, session_rate, scn.duration_s)):
            t = start + t0
            sport = 50000 + (s * 13) % 8000
            pkts = (
                (0.0, attacker, target, sport, 23, _SYN, 60),
                (0.001, target, attacker, 23, sport, _SYN | _ACK, 60),
                (0.002, attacker, target, sport, 23, _ACK, 60),
                (0.007, attacker, target, sport, 23, _PSH_ACK, 60 + int(rng.integers(4, 16))),
                (0.009, target, attacker, 23, sport, _PSH_ACK, 60 + int(rng.integers(8, 24))),
                (0.030, attacker, target, sport, 23, _PSH_ACK, 60 + int(rng.integers(6, 18))),
                (0.035, target, attacker, 23, sport, _PSH_ACK, 60 + int(rng.integers(20, 40))),
                (0.037, attacker, target, sport, 23, _RST_ACK, 60),
            )
            for dt, src, dst, sp, dp, flags, length in pkts:
                out.emit((t + dt) * 1e6, src, dst, sp, dp, Protocol.TCP, flags, length)

    elif scn.kind == "udp_flood":
        dport = scn.target_port or 80
        for t0 in _poisson_times(rng, scn.intensity_pps, scn.duration_s):
            out.emit((start + t0) * 1e6, attacker, target, 40000, dport,
                     Protocol.UDP, TcpFlags(0), 554)

    elif scn.kind == "darknet_scan_background":
        # Scattered SYNs into unused space from rotating sources; the
        # telescope never answers. Sources fall into port policies (telnet
        # worms, web scanners, sprayers), frame lengths jitter with TCP
        # options, and the telescope addresses are hit unevenly (hot and
        # cold IPs), so the per-address feature spread stays wide.
        port_policies = (
            ((23, 2323), (0.7, 0.3)),
            ((80, 8080, 443), (0.5, 0.3, 0.2)),
            ((23, 2323, 80, 8080, 443), (0.35, 0.25, 0.15, 0.15, 0.10)),
            ((23,), (1.0,)),
        )
        policy_weights = (0.35, 0.2, 0.25, 0.2)
        syn_lens = (60, 64, 68, 72, 76, 80)
        len_weights = (0.30, 0.25, 0.20, 0.12, 0.08, 0.05)
        n_targets = len(scn.target_ips)
        target_weights = np.arange(1, n_targets + 1) / (n_targets * (n_targets + 1) / 2)
        n_sources = 64
        sources = [f"198.18.{rng.integers(0, 256)}.{rng.integers(1, 255)}"
                   for _ in range(n_sources)]
        policies = [rng.choice(len(port_policies), p=policy_weights)
                    for _ in range(n_sources)]
        src_idx = 0
        burst_left = int(rng.integers(8, 30))
        for t0 in _poisson_times(rng, scn.intensity_pps, scn.duration_s):
            if burst_left == 0:
                src_idx = (src_idx + 1) % n_sources
                burst_left = int(rng.integers(8, 30))
            burst_left -= 1
            ports, weights = port_policies[policies[src_idx]]
            dst = scn.target_ips[rng.choice(n_targets, p=target_weights)]
            dport = ports[rng.choice(len(ports), p=weights)]
            sport = int(rng.integers(1024, 65536))
            length = int(syn_lens[rng.choice(len(syn_lens), p=len_weights)])
            out.emit((start + t0) * 1e6, sources[src_idx], dst, sport, dport,
                     Protocol.TCP, _SYN, length)

    else:  # cnc_beacon: the compromised device phones home on a fixed period
        interval = 2.0 / scn.intensity_pps
        t = 0.0
        while t < scn.duration_s:
            jt = start + t + rng.uniform(0.0, 0.05) * interval
            out.emit(jt * 1e6, attacker, target, 49999, 443, Protocol.TCP,
                     _PSH_ACK, 60 + int(rng.integers(40, 90)))
            out.emit((jt + 0.04) * 1e6, target, attacker, 443, 49999,
                     Protocol.TCP, _ACK, 60)
            t += interval

    return out.records


# -------------------------------------------------------- dataset assembly

@dataclass(slots=True)
class DatasetSpec:
    dataset_id: str
    devices: list[DeviceProfile]
    attacks: list[AttackScenario]
    duration_s: float
    stride: int = 25
    seed: int = 0
    benign_quota: int | None = None
    malicious_quota: int | None = None
    train_fraction: float = 0.8
    observed_ips: list[str] | None = None

    def observed_set(self) -> list[str]:
        ips = self.observed_ips or [d.device_ip for d in self.devices]
        return sorted(ips, key=ip_sort_key)


@dataclass(slots=True)
class DatasetSample:
    vector: FeatureVector
    ts_micros: int


def _decimate(samples: list[DatasetSample], quota: int | None,
              what: str) -> list[DatasetSample]:
    if quota is None:
        return samples
    if quota == 0:
        return []
    if len(samples) < quota:
        raise ScenarioFormatError(
            f"scenario produced {len(samples)} {what} vectors, quota is {quota}; "
            "raise rates/duration or lower the quota")
    keep = np.round(np.linspace(0, len(samples) - 1, quota)).astype(int)
    return [samples[i] for i in keep]


def generate_dataset(spec: DatasetSpec) -> tuple[bytes, list[DatasetSample]]:
    """Simulate, merge, replay and label one scenario.

    Returns (pcap bytes of the merged capture, chronological labeled
    samples). Sampling happens every spec.stride packets per device; quotas
    thin each class evenly over time to an exact count.
    """
    seeds = np.random.SeedSequence(spec.seed).spawn(len(spec.devices) + len(spec.attacks))
    tagged: list[tuple[PacketRecord, bool]] = []
    for profile, seq in zip(spec.devices, seeds):
        tagged.extend((r, False) for r in simulate_benign(profile, spec.duration_s, seq))
    for scn, seq in zip(spec.attacks, seeds[len(spec.devices):]):
        child = replace(scn, seed=seq.generate_state(1)[0])
        tagged.extend((r, True) for r in simulate_attack(child))
    tagged.sort(key=lambda pair: pair[0].ts_micros)

    observed = spec.observed_set()
    tracker = DeviceTracker(observed)
    taint: dict[str, list[bool]] = {ip: [] for ip in observed}
    taint_head = {ip: 0 for ip in observed}
    attack_in_window = {ip: 0 for ip in observed}
    seen = {ip: 0 for ip in observed}

    benign: list[DatasetSample] = []
    malicious: list[DatasetSample] = []
    for record, is_attack in tagged:
        for ip in tracker.ingest(record):
            buf = taint[ip]
            buf.append(is_attack)
            attack_in_window[ip] += is_attack
            if len(buf) - taint_head[ip] > HISTORY_LIMIT:
                attack_in_window[ip] -= buf[taint_head[ip]]
                taint_head[ip] += 1
            seen[ip] += 1
            if seen[ip] % spec.stride == 0:
                vec = feature_vector(tracker.streams[ip])
                vec.label = Label.MALICIOUS if attack_in_window[ip] else Label.BENIGN
                sample = DatasetSample(vec, record.ts_micros)
                (malicious if attack_in_window[ip] else benign).append(sample)

    benign = _decimate(benign, spec.benign_quota, "benign")
    malicious = _decimate(malicious, spec.malicious_quota, "malicious")
    samples = sorted(benign + malicious, key=lambda s: s.ts_micros)
    return write_pcap([r for r, _ in tagged]), samples


def chronological_split(samples: list[DatasetSample],
                        train_fraction: float) -> tuple[list[DatasetSample], list[DatasetSample]]:
    """Time-ordered split: train ends at the train_fraction point of the
    benign samples, so no future traffic leaks into training."""
    benign = [s for s in samples if s.vector.label is Label.BENIGN]
    if not benign:
        raise ScenarioFormatError("cannot split a dataset with no benign samples")
    n_train = round(train_fraction * len(benign))
    n_train = min(max(n_train, 1), len(benign))
    cutoff = benign[n_train - 1].ts_micros
    train = [s for s in samples if s.ts_micros <= cutoff]
    test = [s for s in samples if s.ts_micros > cutoff]
    return train, test


# ---------------------------------------------------------- scenario files

_DEVICE_FIELDS = {"kind", "device_ip", "peer_ips", "rate_pps", "len_mean", "len_std",
                  "len_min", "len_max", "tcp_fraction", "psh_prob",
                  "duty_on_s", "duty_off_s", "active_until_s"}
_ATTACK_FIELDS = {"kind", "source_ip", "target_ips", "intensity_pps", "duration_s",
                  "start_s", "seed", "target_port", "port_count"}
_SPEC_FIELDS = {"version", "dataset_id", "devices", "attacks", "duration_s", "stride",
                "seed", "benign_quota", "malicious_quota", "train_fraction",
                "observed_ips"}


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    extra = set(doc) - allowed
    if extra:
        raise ScenarioFormatError(f"unknown {where} fields: {sorted(extra)}")


def scenario_from_dict(doc: dict) -> DatasetSpec:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    if doc.get("version") != SCENARIO_VERSION:
        raise ScenarioFormatError(
            f"unsupported scenario version {doc.get('version')!r}, expected {SCENARIO_VERSION}")
    _reject_unknown(doc, _SPEC_FIELDS, "scenario")
    try:
        devices = []
        for d in doc.get("devices", []):
            _reject_unknown(d, _DEVICE_FIELDS, "device")
            devices.append(DeviceProfile(**d))
        attacks = []
        for a in doc.get("attacks", []):
            _reject_unknown(a, _ATTACK_FIELDS, "attack")
            attacks.append(AttackScenario(**a))
        return DatasetSpec(
            dataset_id=doc["dataset_id"],
            devices=devices,
            attacks=attacks,
            duration_s=doc["duration_s"],
            stride=doc.get("stride", 25),
            seed=doc.get("seed", 0),
            benign_quota=doc.get("benign_quota"),
            malicious_quota=doc.get("malicious_quota"),
            train_fraction=doc.get("train_fraction", 0.8),
            observed_ips=doc.get("observed_ips"),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioFormatError(f"bad scenario document: {exc}") from exc


def load_scenario(path: str | Path) -> DatasetSpec:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def builtin_scenario(name: str) -> DatasetSpec:
    """Load a scenario shipped with the package (currently: s1, darknet)."""
    ref = resources.files("ganids.data").joinpath(f"{name}.json")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        raise ScenarioFormatError(f"no built-in scenario named {name!r}") from None
    return scenario_from_dict(json.loads(text))
