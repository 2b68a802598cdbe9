"""Large-block sequential IO.

Readers and writers move data in ``transfer_bytes`` blocks, optionally
bypassing the OS file cache, and hand blocks to and from one background
transfer agent per stream through a bounded queue. Every stream keeps its
own IoCounters so a sort can prove how many times each byte crossed the
disk boundary.
"""
import errno
import logging
import mmap
import os
import queue
import threading
import time
from dataclasses import dataclass, field, fields

from ntsort.exceptions import ConfigurationError, DataFormatError, SortIOError, UsageError

logger = logging.getLogger(__name__)

ALIGNMENT = 4096
DEFAULT_TRANSFER_BYTES = 256 * 1024

_DONE = object()


@dataclass(frozen=True)
class BlockStreamConfig:
    transfer_bytes: int = DEFAULT_TRANSFER_BYTES
    direct_io: bool = False
    queue_depth: int = 2

    def __post_init__(self):
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
            'transfer_bytes': conf['TRANSFER_BYTES'],
            'direct_io': conf['DIRECT_IO'],
            'queue_depth': conf['QUEUE_DEPTH'],
        }
        values.update(overrides)
        return cls(**values)

    @property
    def overlapped(self):
        return self.queue_depth >= 2


@dataclass
class IoCounters:
    bytes_read: int = 0
    bytes_written: int = 0
    read_ops: int = 0
    write_ops: int = 0
    stall_time: float = 0.0

    @classmethod
    def merge(cls, *counters):
        total = cls()
        for c in counters:
            for f in fields(cls):
                setattr(total, f.name, getattr(total, f.name) + getattr(c, f.name))
        return total

    def format(self):
        return (
            f"read_bytes={self.bytes_read} written_bytes={self.bytes_written} "
            f"stalls={self.stall_time:.3f}"
        )


def _open_fd(path, flags, cfg):
    """Open ``path``, asking for cache-bypassing IO when configured.

    Returns ``(fd, direct)``; ``direct`` is False whenever the platform or
    the file system refused, which is always logged.
    """
    path = os.fspath(path)
    if cfg.direct_io:
        o_direct = getattr(os, 'O_DIRECT', 0)
        if o_direct:
            try:
                return os.open(path, flags | o_direct, 0o644), True
            except OSError as exc:
                if exc.errno not in (errno.EINVAL, errno.EOPNOTSUPP):
                    raise
                logger.warning("direct IO refused for %s (%s); falling back to buffered IO", path, exc)
        else:
            logger.warning("direct IO is not available on this platform; buffered IO for %s", path)
    return os.open(path, flags, 0o644), False


class _Agent:
    """Background transfer thread feeding or draining a bounded queue."""

    def __init__(self, name, depth):
        self.queue = queue.Queue(maxsize=depth)
        self.stop = threading.Event()
        self.thread = threading.Thread(target=self._run, name=name, daemon=True)
        self.work = None

    def start(self, work):
        self.work = work
        self.thread.start()

    def put(self, item):
        while not self.stop.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _run(self):
        try:
            self.work(self)
        except BaseException as exc:  # handed to the consumer
            self.put(exc)

    def shutdown(self):
        self.stop.set()
        self.thread.join()


class BlockReader:
    """Iterates over the blocks of a file, a byte range of a file or a stream.

    The concatenation of the yielded blocks is exactly the source bytes.
    With ``queue_depth >= 2`` the next block is read ahead by a background
    agent while the current one is consumed.
    """

    def __init__(self, source, cfg, offset=0, length=None, counters=None, label=None):
        self.cfg = cfg
        self.counters = counters if counters is not None else IoCounters()
        self.offset = offset
        self.length = length
        self.label = label or getattr(source, 'name', None) or str(source)
        self._stream = None
        self._fd = None
        self._direct = False
        self._agent = None
        self._closed = False
        if hasattr(source, 'read'):
            self._stream = source
        else:
            try:
                self._fd, self._direct = _open_fd(source, os.O_RDONLY, cfg)
            except OSError as exc:
                raise SortIOError(f"cannot open {self.label}: {exc.strerror}", offset=0) from exc

    def _blocks(self):
        if self._stream is not None:
            yield from self._stream_blocks()
        elif self._direct:
            yield from self._direct_blocks()
        else:
            yield from self._buffered_blocks()

    def _remaining(self, position):
        if self.length is None:
            return self.cfg.transfer_bytes
        return min(self.cfg.transfer_bytes, self.offset + self.length - position)

    def _stream_blocks(self):
        position = 0
        while True:
            want = self._remaining(position)
            if want <= 0:
                return
            try:
                block = self._stream.read(want)
            except OSError as exc:
                raise SortIOError(f"read failed on {self.label}: {exc}", offset=position) from exc
            if not block:
                return
            position += len(block)
            self._count(len(block))
            yield block

    def _buffered_blocks(self):
        position = self.offset
        while True:
            want = self._remaining(position)
            if want <= 0:
                return
            try:
                block = os.pread(self._fd, want, position)
            except OSError as exc:
                raise SortIOError(f"read failed on {self.label}: {exc.strerror}", offset=position) from exc
            if not block:
                return
            position += len(block)
            self._count(len(block))
            yield block

    def _direct_blocks(self):
        # O_DIRECT needs aligned memory, offsets and sizes
        size = self.cfg.transfer_bytes
        buffer = mmap.mmap(-1, size)
        try:
            aligned = self.offset - self.offset % ALIGNMENT
            skip = self.offset - aligned
            end = None if self.length is None else self.offset + self.length
            while end is None or aligned + skip < end:
                try:
                    got = os.preadv(self._fd, [buffer], aligned)
                except OSError as exc:
                    raise SortIOError(f"read failed on {self.label}: {exc.strerror}", offset=aligned) from exc
                if got <= skip:
                    return
                stop = got if end is None else min(got, end - aligned)
                block = buffer[skip:stop]
                self._count(len(block))
                yield block
                if got < size:
                    return
                aligned += size
                skip = 0
        finally:
            buffer.close()

    def _count(self, nbytes):
        self.counters.bytes_read += nbytes
        self.counters.read_ops += 1

    def _prefetch(self, agent):
        for block in self._blocks():
            if not agent.put(block):
                return
        agent.put(_DONE)

    def __iter__(self):
        if not self.cfg.overlapped:
            blocks = self._blocks()
            while True:
                started = time.perf_counter()
                block = next(blocks, _DONE)
                self.counters.stall_time += time.perf_counter() - started
                if block is _DONE:
                    return
                yield block
        self._agent = _Agent(f"read-{self.label}", self.cfg.queue_depth - 1)
        self._agent.start(self._prefetch)
        while True:
            started = time.perf_counter()
            item = self._agent.queue.get()
            self.counters.stall_time += time.perf_counter() - started
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item

    def close(self):
        if self._closed:
            return
        self._closed = True
        if self._agent is not None:
            self._agent.shutdown()
        if self._fd is not None:
            os.close(self._fd)

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class BlockWriter:
    """Buffers writes into ``transfer_bytes`` blocks.

    With ``queue_depth >= 2`` a background agent writes block i while the
    caller fills block i+1. The final partial block is written on close;
    under direct IO it is padded in memory and the file is truncated back to
    its true length.
    """

    def __init__(self, target, cfg, counters=None, label=None):
        self.cfg = cfg
        self.counters = counters if counters is not None else IoCounters()
        self.label = label or getattr(target, 'name', None) or str(target)
        self._buffer = bytearray()
        self._stream = None
        self._fd = None
        self._direct = False
        self._position = 0
        self._error = None
        self._closed = False
        self._agent = None
        self._aligned = None
        if hasattr(target, 'write'):
            self._stream = target
        else:
            try:
                self._fd, self._direct = _open_fd(
                    target, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, cfg
                )
            except OSError as exc:
                raise SortIOError(f"cannot create {self.label}: {exc.strerror}", offset=0) from exc
        if self._direct:
            self._aligned = mmap.mmap(-1, cfg.transfer_bytes)
        if cfg.overlapped:
            self._agent = _Agent(f"write-{self.label}", cfg.queue_depth - 1)
            self._agent.start(self._drain)

    @property
    def closed(self):
        return self._closed

    def write(self, data):
        if self._closed:
            raise UsageError(f"write to closed writer {self.label}")
        self._buffer += data
        size = self.cfg.transfer_bytes
        if len(self._buffer) >= size:
            whole = len(self._buffer) - len(self._buffer) % size
            for start in range(0, whole, size):
                self._submit(bytes(self._buffer[start:start + size]))
            del self._buffer[:whole]
        return len(data)

    def _submit(self, block):
        if self._agent is None:
            started = time.perf_counter()
            self._transfer(block)
            self.counters.stall_time += time.perf_counter() - started
            return
        self._raise_pending()
        started = time.perf_counter()
        self._agent.put(block)
        self.counters.stall_time += time.perf_counter() - started

    def _drain(self, agent):
        # keeps consuming after a failure so the producer never blocks
        while True:
            block = agent.queue.get()
            if block is _DONE:
                return
            if self._error is not None:
                continue
            try:
                self._transfer(block)
            except BaseException as exc:
                self._error = exc

    def _raise_pending(self):
        if self._error is not None:
            error, self._error = self._error, None
            raise error

    def _transfer(self, block):
        offset = self._position
        try:
            if self._stream is not None:
                self._stream.write(block)
            elif self._direct:
                self._direct_write(block)
            else:
                view = memoryview(block)
                while view:
                    written = os.write(self._fd, view)
                    view = view[written:]
        except OSError as exc:
            raise SortIOError(f"write failed on {self.label}: {exc}", offset=offset) from exc
        self._position += len(block)
        self.counters.bytes_written += len(block)
        self.counters.write_ops += 1

    def _direct_write(self, block):
        padded = -(-len(block) // ALIGNMENT) * ALIGNMENT
        self._aligned[:len(block)] = block
        if padded > len(block):
            self._aligned[len(block):padded] = bytes(padded - len(block))
        view = memoryview(self._aligned)[:padded]
        try:
            while view:
                written = os.write(self._fd, view)
                view = view[written:]
        finally:
            view.release()

    def close(self):
        if self._closed:
            raise UsageError(f"writer {self.label} closed twice")
        self._closed = True
        try:
            if self._buffer:
                self._submit(bytes(self._buffer))
                self._buffer.clear()
            if self._agent is not None:
                self._finish_agent()
                self._raise_pending()
            if self._stream is not None and hasattr(self._stream, 'flush'):
                self._stream.flush()
            if self._direct:
                os.ftruncate(self._fd, self._position)
        finally:
            self._finish_agent()
            if self._fd is not None:
                os.close(self._fd)
            if self._aligned is not None:
                self._aligned.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if not self._closed:
            if exc_type is None:
                self.close()
            else:
                self.abandon()

    def _finish_agent(self):
        if self._agent is not None and self._agent.thread.is_alive():
            self._agent.put(_DONE)
            self._agent.thread.join()

    def abandon(self):
        """Stop without flushing; used when the data being written is void."""
        self._closed = True
        self._finish_agent()
        if self._fd is not None:
            os.close(self._fd)


def open_block_reader(path, cfg, **kwargs):
    return BlockReader(path, cfg, **kwargs)


def open_block_writer(path, cfg, **kwargs):
    return BlockWriter(path, cfg, **kwargs)


def iter_lines(blocks, record_max):
    """Frame blocks into ``(content, terminator)`` pairs.

    The terminator is ``b'\\r\\n'``, ``b'\\n'`` or, for an unterminated
    final line, ``b''``. Content longer than ``record_max`` is a format error.
    """
    pending = b''
    index = 0
    for block in blocks:
        data = pending + block if pending else block
        start = 0
        find = data.find
        while True:
            nl = find(b'\n', start)
            if nl < 0:
                break
            if nl > start and data[nl - 1] == 13:
                content, terminator = data[start:nl - 1], b'\r\n'
            else:
                content, terminator = data[start:nl], b'\n'
            if len(content) > record_max:
                raise DataFormatError(
                    f"record {index} is {len(content)} bytes, over the {record_max} byte maximum",
                    record_index=index,
                )
            yield content, terminator
            index += 1
            start = nl + 1
        pending = data[start:]
        if len(pending) > record_max + 1:
            raise DataFormatError(
                f"record {index} exceeds the {record_max} byte maximum", record_index=index
            )
    if pending:
        if len(pending) > record_max:
            raise DataFormatError(
                f"record {index} exceeds the {record_max} byte maximum", record_index=index
            )
        yield pending, b''


@dataclass
class CopyReport:
    bytes: int
    elapsed_seconds: float
    cpu_seconds: float
    counters: IoCounters = field(default_factory=IoCounters)

    @property
    def mb_per_second(self):
        if self.elapsed_seconds <= 0:
            return 0.0
        return self.bytes / 2**20 / self.elapsed_seconds

    @property
    def cpu_headroom_seconds(self):
        """CPU a sort over the same flows may burn and still be IO bound."""
        return max(self.elapsed_seconds - self.cpu_seconds, 0.0)

    def format(self):
        return (
            f"bytes={self.bytes} elapsed_s={self.elapsed_seconds:.3f} "
            f"mb_per_s={self.mb_per_second:.2f} cpu_s={self.cpu_seconds:.3f} "
            f"cpu_headroom_s={self.cpu_headroom_seconds:.3f}"
        )


def _cpu_seconds():
    t = os.times()
    return t.user + t.system


def copy_baseline(src, dst, cfg):
    """Stream ``src`` to ``dst`` with the sort's block geometry and time it."""
    read_counters, write_counters = IoCounters(), IoCounters()
    cpu_start = _cpu_seconds()
    started = time.perf_counter()
    with BlockReader(src, cfg, counters=read_counters) as reader:
        writer = BlockWriter(dst, cfg, counters=write_counters)
        with writer:
            for block in reader:
                writer.write(block)
    elapsed = time.perf_counter() - started
    report = CopyReport(
        bytes=write_counters.bytes_written,
        elapsed_seconds=elapsed,
        cpu_seconds=_cpu_seconds() - cpu_start,
        counters=IoCounters.merge(read_counters, write_counters),
    )
    logger.info("copy %s -> %s: %s", src, dst, report.format())
    return report
