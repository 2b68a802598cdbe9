"""Planning and execution of the two-pass external sort.

A sort either fits in memory (one pass: read, quicksort, write) or is
split into quicksorted runs on a temporary file that a loser tree then
merges into the output (two passes, every byte read twice and written
twice).
"""
import enum
import logging
import math
import operator
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ntsort.exceptions import ConfigurationError, PlanInfeasible, SortIOError
from ntsort.iopipe import (
    ALIGNMENT,
    DEFAULT_TRANSFER_BYTES,
    BlockReader,
    BlockStreamConfig,
    BlockWriter,
    IoCounters,
    iter_lines,
)
from ntsort.losertree import LoserTree

logger = logging.getLogger(__name__)

RECORD_MAXIMUM_LIMIT = 65535
DEFAULT_RECORD_MAXIMUM = 4096
DEFAULT_MEMORY_BYTES = 64 * 1024 * 1024
INSERTION_THRESHOLD = 16
SUPPORTED_LOCALES = ('C',)

# ASCII A-Z -> a-z, every other byte unchanged
FOLD_TABLE = bytes.maketrans(b'ABCDEFGHIJKLMNOPQRSTUVWXYZ', b'abcdefghijklmnopqrstuvwxyz')


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class PlanMode(enum.Enum):
    ONE_PASS = 'one-pass'
    TWO_PASS = 'two-pass'


@dataclass(frozen=True)
class SortConfig:
    key_offset_n: int = 1
    reverse: bool = False
    locale: str = 'C'
    record_max: int = DEFAULT_RECORD_MAXIMUM
    memory_kilobytes: Optional[int] = None
    temp_dir: Optional[Path] = None
    input: Optional[Path] = None
    output: Optional[Path] = None
    overlap_io: bool = True
    transfer_bytes: int = DEFAULT_TRANSFER_BYTES
    direct_io: bool = False
    queue_depth: int = 2

    def __post_init__(self):
        if self.key_offset_n < 1:
            raise ConfigurationError(f"/+n must be at least 1, got {self.key_offset_n}")
        if not 1 <= self.record_max <= RECORD_MAXIMUM_LIMIT:
            raise ConfigurationError(
                f"record maximum must be in [1, {RECORD_MAXIMUM_LIMIT}], got {self.record_max}"
            )
        if self.locale not in SUPPORTED_LOCALES:
            raise ConfigurationError(f"unsupported locale {self.locale!r}; only C is available")
        if self.memory_kilobytes is not None and self.memory_kilobytes <= 0:
            raise ConfigurationError(f"/M must be positive, got {self.memory_kilobytes}")
        if self.transfer_bytes <= 0 or self.transfer_bytes % ALIGNMENT:
            raise ConfigurationError(
                f"transfer_bytes must be a positive multiple of {ALIGNMENT}, got {self.transfer_bytes}"
            )
        if self.queue_depth < 1:
            raise ConfigurationError(f"queue_depth must be at least 1, got {self.queue_depth}")

    @classmethod
    def from_settings(cls, **overrides):
        from django.conf import settings

        conf = settings.NTSORT
        values = {
            'record_max': conf['RECORD_MAXIMUM'],
            'temp_dir': Path(conf['TEMP_DIR']),
            'overlap_io': conf['OVERLAP_IO'],
            'transfer_bytes': conf['TRANSFER_BYTES'],
            'direct_io': conf['DIRECT_IO'],
            'queue_depth': conf['QUEUE_DEPTH'],
        }
        values.update(overrides)
        return cls(**values)

    @property
    def memory_bytes(self):
        if self.memory_kilobytes is None:
            return None
        return self.memory_kilobytes * 1024

    def stream_config(self):
        return BlockStreamConfig(
            transfer_bytes=self.transfer_bytes,
            direct_io=self.direct_io,
            queue_depth=self.queue_depth if self.overlap_io else 1,
        )

    def less(self):
        """The strict ordering used by every sort path."""
        return operator.gt if self.reverse else operator.lt


def compare_key(content, config):
    suffix = content[config.key_offset_n - 1:]
    return suffix.translate(FOLD_TABLE), suffix


def record_key(content, terminator, config):
    """Total ordering key of one record.

    The first two components decide ``compare_lines``; the whole line and the
    terminator only separate lines it calls equal, so records with equal keys
    are byte-identical.
    """
    suffix = content[config.key_offset_n - 1:]
    return suffix.translate(FOLD_TABLE), suffix, content, terminator


def compare_lines(a, b, config):
    ka, kb = compare_key(a, config), compare_key(b, config)
    if ka == kb:
        return Ordering.EQUAL
    result = Ordering.LESS if ka < kb else Ordering.GREATER
    if config.reverse:
        result = Ordering(-result)
    return result


# in-memory sort


def quicksort(items, less=operator.lt):
    """Sort ``items`` in place.

    Median-of-three quicksort, insertion sort below 16 elements, heapsort
    once the recursion is deeper than 2*log2(n).
    """
    n = len(items)
    if n > 1:
        _introsort(items, 0, n - 1, 2 * int(math.log2(n)), less)
    return items


def _introsort(a, lo, hi, depth, less):
    while hi - lo + 1 > INSERTION_THRESHOLD:
        if depth == 0:
            _heapsort(a, lo, hi, less)
            return
        depth -= 1
        p = _partition(a, lo, hi, less)
        if p - lo < hi - p:
            _introsort(a, lo, p - 1, depth, less)
            lo = p + 1
        else:
            _introsort(a, p + 1, hi, depth, less)
            hi = p - 1
    _insertion_sort(a, lo, hi, less)


def _partition(a, lo, hi, less):
    mid = (lo + hi) // 2
    if less(a[mid], a[lo]):
        a[lo], a[mid] = a[mid], a[lo]
    if less(a[hi], a[lo]):
        a[lo], a[hi] = a[hi], a[lo]
    if less(a[hi], a[mid]):
        a[mid], a[hi] = a[hi], a[mid]
    # a[lo] <= pivot <= a[hi] act as sentinels
    a[mid], a[hi - 1] = a[hi - 1], a[mid]
    pivot = a[hi - 1]
    i, j = lo, hi - 1
    while True:
        i += 1
        while less(a[i], pivot):
            i += 1
        j -= 1
        while less(pivot, a[j]):
            j -= 1
        if i >= j:
            break
        a[i], a[j] = a[j], a[i]
    a[i], a[hi - 1] = a[hi - 1], a[i]
    return i


def _insertion_sort(a, lo, hi, less):
    for i in range(lo + 1, hi + 1):
        item = a[i]
        j = i - 1
        while j >= lo and less(item, a[j]):
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = item


def _heapsort(a, lo, hi, less):
    n = hi - lo + 1

    def sift(root, end):
        while True:
            child = 2 * root + 1
            if child >= end:
                return
            if child + 1 < end and less(a[lo + child], a[lo + child + 1]):
                child += 1
            if not less(a[lo + root], a[lo + child]):
                return
            a[lo + root], a[lo + child] = a[lo + child], a[lo + root]
            root = child

    for start in range(n // 2 - 1, -1, -1):
        sift(start, n)
    for end in range(n - 1, 0, -1):
        a[lo], a[lo + end] = a[lo + end], a[lo]
        sift(0, end)


# planning


@dataclass(frozen=True)
class SortPlan:
    mode: PlanMode
    input_bytes: int
    run_bytes: Optional[int]
    estimated_run_count: int
    merge_buffer_bytes: int
    working_memory_bytes: int

    def describe(self):
        if self.mode is PlanMode.ONE_PASS:
            return (
                f"one-pass: {self.input_bytes} bytes fit in "
                f"{self.working_memory_bytes} bytes of memory"
            )
        return (
            f"two-pass: {self.estimated_run_count} runs of {self.run_bytes} bytes, "
            f"{self.merge_buffer_bytes} byte merge buffers, "
            f"{self.working_memory_bytes} bytes of memory; run size follows "
            f"sqrt(input x transfer), which is 16 MiB for a 1 GiB input with "
            f"256 KiB transfers (NTsort's own description quotes 20 MB)"
        )


def _ceil_div(a, b):
    return -(-a // b)


def _square_root_run_bytes(n, transfer):
    root = math.isqrt(n * transfer)
    if root * root < n * transfer:
        root += 1
    return max(_ceil_div(root, transfer), 1) * transfer


def minimum_two_pass_memory(n, transfer):
    """Smallest budget under which ``plan_sort`` finds a two-pass plan."""
    best = None
    run = _square_root_run_bytes(n, transfer)
    while best is None or run < best:
        need = max(run, (_ceil_div(n, run) + 1) * transfer)
        if best is None or need < best:
            best = need
        run += transfer
    return max(best, 4 * transfer)


def plan_sort(input_bytes, config, available_memory_bytes):
    n, m, t = input_bytes, available_memory_bytes, config.transfer_bytes
    if n < 0:
        raise ConfigurationError(f"input size must be non-negative, got {n}")
    if m < 4 * t:
        raise ConfigurationError(
            f"memory budget of {m} bytes is below four transfers ({4 * t} bytes)"
        )
    if n <= m:
        plan = SortPlan(
            mode=PlanMode.ONE_PASS,
            input_bytes=n,
            run_bytes=None,
            estimated_run_count=1,
            merge_buffer_bytes=t,
            working_memory_bytes=m,
        )
    else:
        run = _square_root_run_bytes(n, t)
        while (_ceil_div(n, run) + 1) * t > m and run <= m:
            run += t
        if run > m:
            raise PlanInfeasible(n, m, minimum_two_pass_memory(n, t))
        plan = SortPlan(
            mode=PlanMode.TWO_PASS,
            input_bytes=n,
            run_bytes=run,
            estimated_run_count=_ceil_div(n, run),
            merge_buffer_bytes=t,
            working_memory_bytes=m,
        )
    logger.info("plan: %s", plan.describe())
    return plan


# temporary run store


@dataclass(frozen=True)
class RunDescriptor:
    run_index: int
    path: Path
    offset: int
    byte_length: int
    record_count: int


class RunStore:
    """One temporary file of concatenated runs, addressed by offset."""

    BATCH = 4096

    def __init__(self, temp_dir, stem, stream_cfg):
        self.path = Path(temp_dir) / f"{stem}.runs.tmp"
        self.stream_cfg = stream_cfg
        self.counters = IoCounters()
        self._writer = BlockWriter(self.path, stream_cfg, counters=self.counters, label=str(self.path))
        self._offset = 0
        self.runs = []

    def write_run(self, items):
        run_index = len(self.runs)
        start = self._offset
        try:
            for i in range(0, len(items), self.BATCH):
                chunk = b''.join(k[2] + k[3] for k in items[i:i + self.BATCH])
                self._writer.write(chunk)
                self._offset += len(chunk)
        except SortIOError as exc:
            raise SortIOError(f"cannot write run: {exc}", offset=exc.offset, run_index=run_index) from exc
        run = RunDescriptor(run_index, self.path, start, self._offset - start, len(items))
        self.runs.append(run)
        logger.debug("run %d: %d bytes, %d records", run_index, run.byte_length, run.record_count)
        return run

    def finish(self):
        self._writer.close()

    def cleanup(self):
        if not self._writer.closed:
            self._writer.abandon()
        try:
            self.path.unlink()
            logger.debug("removed %s", self.path)
        except FileNotFoundError:
            pass


def form_runs(lines, plan, config, store):
    """Pass one: cut the input into memory-sized chunks, quicksort, spill."""
    if plan.mode is not PlanMode.TWO_PASS:
        raise ConfigurationError("form_runs needs a two-pass plan")
    less = config.less()
    runs = []
    chunk, chunk_bytes = [], 0
    for content, terminator in lines:
        terminator = terminator or b'\n'
        size = len(content) + len(terminator)
        if chunk and chunk_bytes + size > plan.run_bytes:
            runs.append(store.write_run(quicksort(chunk, less)))
            chunk, chunk_bytes = [], 0
        chunk.append(record_key(content, terminator, config))
        chunk_bytes += size
    if chunk:
        runs.append(store.write_run(quicksort(chunk, less)))
    return runs


@dataclass
class MergeSummary:
    records: int = 0
    bytes: int = 0
    counters: IoCounters = field(default_factory=IoCounters)


def _run_keys(reader, run, config):
    try:
        for content, terminator in iter_lines(reader, config.record_max):
            yield record_key(content, terminator, config)
    except SortIOError as exc:
        raise SortIOError(f"cannot read run: {exc}", offset=exc.offset, run_index=run.run_index) from exc


def merge_runs(runs, config, sink, stream_cfg=None):
    """Pass two: loser-tree merge of ``runs`` into ``sink``.

    Ties across runs are emitted in run order.
    """
    stream_cfg = stream_cfg or config.stream_config()
    readers = []
    summary = MergeSummary()
    try:
        for run in runs:
            readers.append(BlockReader(run.path, stream_cfg, offset=run.offset,
                                       length=run.byte_length, label=f"run {run.run_index}"))
        tree = LoserTree([_run_keys(r, run, config) for r, run in zip(readers, runs)], config.less())
        for _, key in tree:
            record = key[2] + key[3]
            sink.write(record)
            summary.records += 1
            summary.bytes += len(record)
    finally:
        for reader in readers:
            reader.close()
    summary.counters = IoCounters.merge(*(r.counters for r in readers))
    return summary


# end to end


@dataclass
class SortSummary:
    records: int
    bytes: int
    plan: SortPlan
    elapsed_seconds: float
    cpu_user_seconds: Optional[float] = None
    cpu_kernel_seconds: Optional[float] = None
    streams: dict = field(default_factory=dict)

    @property
    def counters(self):
        return IoCounters.merge(*self.streams.values())

    def format(self):
        return (
            f"records={self.records} bytes={self.bytes} mode={self.plan.mode.value} "
            f"elapsed_s={self.elapsed_seconds:.3f}"
        )


def _spool_stdin(stdin, config, stream_cfg, memory, counters):
    spool = tempfile.SpooledTemporaryFile(max_size=memory, dir=config.temp_dir)
    with BlockReader(stdin, stream_cfg, counters=counters, label='stdin') as reader:
        for block in reader:
            spool.write(block)
    size = spool.tell()
    spool.seek(0)
    return spool, size


def sort(config, available_memory_bytes=None, stdin=None, stdout=None, started_at=None):
    """Sort ``config.input`` (or standard input) into ``config.output``.

    ``started_at`` is a ``time.perf_counter()`` reading taken at process
    start; elapsed time runs from there until the output is complete.
    """
    started_at = time.perf_counter() if started_at is None else started_at
    cpu_start = os.times()
    stream_cfg = config.stream_config()
    memory = config.memory_bytes or available_memory_bytes or DEFAULT_MEMORY_BYTES
    streams = {'input': IoCounters()}
    spool = None

    if config.input is not None:
        try:
            size = os.path.getsize(config.input)
        except OSError as exc:
            raise SortIOError(f"cannot open {config.input}: {exc.strerror}", offset=0) from exc
        source = config.input
    else:
        streams['stdin'] = IoCounters()
        spool, size = _spool_stdin(
            stdin or sys.stdin.buffer, config, stream_cfg, memory, streams['stdin']
        )
        source = spool

    plan = plan_sort(size, config, memory)
    less = config.less()
    stem = Path(config.output).stem if config.output is not None else 'stdout'

    store = None
    try:
        with BlockReader(source, stream_cfg, counters=streams['input'], label='input') as reader:
            lines = iter_lines(reader, config.record_max)
            if plan.mode is PlanMode.ONE_PASS:
                items = [record_key(c, t or b'\n', config) for c, t in lines]
                quicksort(items, less)
            else:
                store = RunStore(config.temp_dir or tempfile.gettempdir(), stem, stream_cfg)
                runs = form_runs(lines, plan, config, store)
                store.finish()
                streams['runs_written'] = store.counters

        target = config.output if config.output is not None else (stdout or sys.stdout.buffer)
        streams['output'] = IoCounters()
        writer = BlockWriter(target, stream_cfg, counters=streams['output'], label='output')
        with writer:
            if store is None:
                records = len(items)
                for i in range(0, records, RunStore.BATCH):
                    writer.write(b''.join(k[2] + k[3] for k in items[i:i + RunStore.BATCH]))
                total = sum(len(k[2]) + len(k[3]) for k in items)
            else:
                merged = merge_runs(runs, config, writer, stream_cfg)
                streams['runs_read'] = merged.counters
                records, total = merged.records, merged.bytes
    finally:
        # the run file goes away on every exit path, output failures included
        if store is not None:
            store.cleanup()
        if spool is not None:
            spool.close()

    cpu_end = os.times()
    summary = SortSummary(
        records=records,
        bytes=total,
        plan=plan,
        elapsed_seconds=time.perf_counter() - started_at,
        cpu_user_seconds=cpu_end.user - cpu_start.user,
        cpu_kernel_seconds=cpu_end.system - cpu_start.system,
        streams=streams,
    )
    logger.info("sort finished: %s", summary.format())
    return summary
