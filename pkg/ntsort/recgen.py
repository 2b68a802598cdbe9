"""Benchmark record generation and sort-output validation.

Records are fixed width: a random printable key, a zero-padded decimal
ordinal, filler, and a CR LF terminator in the last two bytes.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Optional

from ntsort.exceptions import ConfigurationError, SortIOError
from ntsort.iopipe import DEFAULT_TRANSFER_BYTES, iter_lines
from ntsort.sortcore import RECORD_MAXIMUM_LIMIT, compare_key

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
TERMINATOR = b'\r\n'
FIRST_PRINTABLE = 0x20
PRINTABLE_COUNT = 95  # 0x20..0x7E
# largest multiple of 95 below 2**16; lanes at or above it are redrawn
LANE_LIMIT = PRINTABLE_COUNT * (0x10000 // PRINTABLE_COUNT)
ORDINAL_DIGITS = 20
FILLER = b'.'
BATCH_RECORDS = 2048


class SplitMix64:
    """64-bit SplitMix generator; the whole state is one 64-bit word."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


@dataclass(frozen=True)
class GenSpec:
    record_count: int
    seed: int = 0
    record_bytes: int = 100
    key_bytes: int = 10
    terminator_bytes: int = len(TERMINATOR)

    def __post_init__(self):
        if self.record_count < 0:
            raise ConfigurationError(f"record_count must be non-negative, got {self.record_count}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.terminator_bytes != len(TERMINATOR):
            raise ConfigurationError("records always end in CR LF")
        if self.key_bytes < 1:
            raise ConfigurationError(f"key_bytes must be positive, got {self.key_bytes}")
        if self.key_bytes + self.terminator_bytes > self.record_bytes:
            raise ConfigurationError(
                f"{self.key_bytes}-byte keys and CR LF do not fit in {self.record_bytes}-byte records"
            )
        if self.record_bytes > RECORD_MAXIMUM_LIMIT:
            raise ConfigurationError(
                f"record_bytes must be at most {RECORD_MAXIMUM_LIMIT}, got {self.record_bytes}"
            )

    @property
    def payload_bytes(self):
        return self.record_bytes - self.key_bytes - self.terminator_bytes

    @property
    def total_bytes(self):
        return self.record_count * self.record_bytes


@dataclass(frozen=True)
class GenerationSummary:
    records: int
    bytes: int
    seed: int

    def format(self):
        return f"records={self.records} bytes={self.bytes} seed={self.seed}"


def _key(rng, key_bytes):
    # each 64-bit draw yields four 16-bit lanes, one key byte per accepted lane
    out = bytearray()
    while len(out) < key_bytes:
        word = rng.next()
        for _ in range(4):
            lane = word & 0xFFFF
            if lane < LANE_LIMIT:
                out.append(FIRST_PRINTABLE + lane % PRINTABLE_COUNT)
            word >>= 16
    return bytes(out[:key_bytes])


def iter_records(spec):
    """Yield the records of ``spec`` one by one."""
    rng = SplitMix64(spec.seed)
    digits = min(ORDINAL_DIGITS, spec.payload_bytes)
    modulus = 10 ** digits
    filler = FILLER * (spec.payload_bytes - digits)
    for ordinal in range(spec.record_count):
        payload = str(ordinal % modulus).zfill(digits).encode() if digits else b''
        yield _key(rng, spec.key_bytes) + payload + filler + TERMINATOR


def generate(spec, sink):
    written = 0
    batch = []
    for record in iter_records(spec):
        batch.append(record)
        if len(batch) == BATCH_RECORDS:
            written += _flush(sink, batch, written)
            batch = []
    if batch:
        written += _flush(sink, batch, written)
    summary = GenerationSummary(records=spec.record_count, bytes=written, seed=spec.seed)
    logger.info("generated %s", summary.format())
    return summary


def _flush(sink, batch, offset):
    data = b''.join(batch)
    try:
        sink.write(data)
    except OSError as exc:
        raise SortIOError(f"cannot write generated records: {exc}", offset=offset) from exc
    return len(data)


def record_checksum(record):
    return int.from_bytes(hashlib.blake2b(record, digest_size=8).digest(), 'little')


@dataclass(frozen=True)
class ValidationReport:
    record_count: int
    is_sorted: bool
    first_violation_index: Optional[int]
    key_checksum: int
    total_bytes: int

    def format(self):
        violation = '-' if self.first_violation_index is None else self.first_violation_index
        return (
            f"records={self.record_count} sorted={str(self.is_sorted).lower()} "
            f"first_violation={violation} checksum={self.key_checksum:016x} "
            f"bytes={self.total_bytes}"
        )


def _as_blocks(data):
    if hasattr(data, 'read'):
        return iter(lambda: data.read(DEFAULT_TRANSFER_BYTES), b'')
    return data


def validate(data, config):
    """Check order and fingerprint the multiset of records in ``data``.

    ``data`` is a binary file object or an iterable of blocks (such as a
    BlockReader).
    """
    count = 0
    total = 0
    checksum = 0
    violation = None
    previous = None
    for content, terminator in iter_lines(_as_blocks(data), config.record_max):
        key = compare_key(content, config)
        if violation is None and previous is not None:
            out_of_order = key > previous if config.reverse else key < previous
            if out_of_order:
                violation = count
        previous = key
        record = content + terminator
        checksum = (checksum + record_checksum(record)) & MASK64
        total += len(record)
        count += 1
    return ValidationReport(
        record_count=count,
        is_sorted=violation is None,
        first_violation_index=violation,
        key_checksum=checksum,
        total_bytes=total,
    )
