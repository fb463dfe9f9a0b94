"""Typed errors shared across the toolkit.

Every failure mode the library promises to callers lives here so that the
CLI can map them to exit codes in one place and tests can assert on exact
types instead of message strings.
"""


class GanidsError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------- pcap layer

class PcapError(GanidsError):
    """Base class for capture parsing/writing failures."""


class UnknownMagicError(PcapError):
    """First four bytes match none of the classic pcap magic variants."""

    def __init__(self, magic: bytes):
        self.magic = magic
        super().__init__(f"unknown pcap magic {magic.hex()}")


class TruncatedHeaderError(PcapError):
    """Buffer ends inside the 24-byte global header."""

    def __init__(self, length: int):
        self.length = length
        super().__init__(f"global header truncated: {length} bytes, need 24")


class TruncatedRecordError(PcapError):
    """Buffer ends inside a record header or its frame data.

    Carries the records parsed before the truncation point so partial
    captures remain usable.
    """

    def __init__(self, offset: int, records: list):
        self.offset = offset
        self.records = records
        super().__init__(
            f"record truncated at byte {offset} "
            f"({len(records)} records parsed before it)"
        )


class UnsupportedLinkTypeError(PcapError):
    """Capture link type is not Ethernet (1)."""

    def __init__(self, link_type: int):
        self.link_type = link_type
        super().__init__(f"unsupported link type {link_type}, only Ethernet (1)")


class FrameTooShortError(PcapError):
    """Frame is shorter than an Ethernet header."""

    def __init__(self, length: int):
        self.length = length
        super().__init__(f"frame of {length} bytes is below the 14-byte Ethernet header")


# ------------------------------------------------------------- feature layer

class EmptyWindowError(GanidsError):
    """Window statistics requested over zero packets."""


class LengthMismatchError(GanidsError):
    """Parallel sequences (scores/labels, values/stats) disagree in length."""


# ----------------------------------------------------------- traffic layer

class UnknownProfileError(GanidsError):
    """Device profile kind is not one of the supported presets."""


class UnknownAttackError(GanidsError):
    """Attack kind is not one of the supported generators."""


class NonPositiveRateError(GanidsError):
    """A packet rate or intensity must be positive."""


class NonPositiveDurationError(GanidsError):
    """A duration must be positive."""


# ------------------------------------------------------------ modeling layer

class EmptyDatasetError(GanidsError):
    """Training requested on zero vectors."""


class SingleClassDataError(GanidsError):
    """Supervised training requested on data containing only one label."""


class NonFiniteLossError(GanidsError):
    """A training loss went NaN or infinite; training aborted."""

    def __init__(self, epoch: int, batch: int, term: str):
        self.epoch = epoch
        self.batch = batch
        self.term = term
        super().__init__(f"non-finite {term} loss at epoch {epoch}, batch {batch}")


class EmptyScoresError(GanidsError):
    """Threshold selection or sweep over an empty score list."""


class CheckpointFormatError(GanidsError):
    """Checkpoint document is malformed or has an unknown version/kind."""


class ScenarioFormatError(GanidsError):
    """Scenario document is malformed, has unknown fields or a bad version."""
