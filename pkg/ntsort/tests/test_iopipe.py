import io
import os

from django.test import SimpleTestCase, override_settings

from ntsort import iopipe
from ntsort.exceptions import ConfigurationError, DataFormatError, SortIOError, UsageError
from ntsort.tests.helpers import TempDirMixin, ntsort_settings

SYNC = iopipe.BlockStreamConfig(queue_depth=1)
OVERLAPPED = iopipe.BlockStreamConfig(queue_depth=3)


class BlockStreamConfigTests(SimpleTestCase):
    def test_transfer_must_be_aligned(self):
        for size in (0, -4096, 1000, 4097):
            with self.subTest(size=size), self.assertRaises(ConfigurationError):
                iopipe.BlockStreamConfig(transfer_bytes=size)

    def test_queue_depth(self):
        with self.assertRaises(ConfigurationError):
            iopipe.BlockStreamConfig(queue_depth=0)
        self.assertFalse(SYNC.overlapped)
        self.assertTrue(OVERLAPPED.overlapped)

    @override_settings(NTSORT=ntsort_settings(TRANSFER_BYTES=8192, QUEUE_DEPTH=4))
    def test_from_settings(self):
        cfg = iopipe.BlockStreamConfig.from_settings(direct_io=True)
        self.assertEqual((cfg.transfer_bytes, cfg.queue_depth, cfg.direct_io), (8192, 4, True))


class BlockReaderTests(TempDirMixin, SimpleTestCase):
    def write(self, name, data):
        path = self.tmp / name
        path.write_bytes(data)
        return path

    def test_empty_file_has_no_blocks(self):
        path = self.write('empty', b'')
        for cfg in (SYNC, OVERLAPPED):
            with self.subTest(cfg=cfg), iopipe.open_block_reader(path, cfg) as reader:
                self.assertEqual(list(reader), [])
                self.assertEqual(reader.counters.read_ops, 0)

    def test_block_sizes(self):
        data = os.urandom(600_000)
        path = self.write('data', data)
        for cfg in (SYNC, OVERLAPPED):
            with self.subTest(cfg=cfg), iopipe.open_block_reader(path, cfg) as reader:
                blocks = list(reader)
                self.assertEqual([len(b) for b in blocks], [262144, 262144, 75712])
                self.assertEqual(b''.join(blocks), data)
                self.assertEqual(reader.counters.bytes_read, 600_000)
                self.assertEqual(reader.counters.read_ops, 3)

    def test_byte_range(self):
        data = bytes(range(256)) * 100
        path = self.write('range', data)
        cfg = iopipe.BlockStreamConfig(transfer_bytes=4096, queue_depth=1)
        with iopipe.BlockReader(path, cfg, offset=5000, length=9000) as reader:
            blocks = list(reader)
        self.assertEqual(b''.join(blocks), data[5000:14000])
        self.assertEqual([len(b) for b in blocks], [4096, 4096, 808])

    def test_stream_source(self):
        data = os.urandom(10_000)
        cfg = iopipe.BlockStreamConfig(transfer_bytes=4096, queue_depth=2)
        with iopipe.BlockReader(io.BytesIO(data), cfg) as reader:
            self.assertEqual(b''.join(reader), data)

    def test_direct_io_reads_same_bytes(self):
        data = os.urandom(300_000)
        path = self.write('direct', data)
        cfg = iopipe.BlockStreamConfig(direct_io=True, queue_depth=1)
        with iopipe.BlockReader(path, cfg) as reader:
            self.assertEqual(b''.join(reader), data)
        with iopipe.BlockReader(path, cfg, offset=4100, length=100_000) as reader:
            self.assertEqual(b''.join(reader), data[4100:104_100])

    def test_missing_file(self):
        with self.assertRaises(SortIOError) as cm:
            iopipe.open_block_reader(self.tmp / 'nope', SYNC)
        self.assertEqual(cm.exception.offset, 0)

    def test_stream_failure_is_reported_with_offset(self):
        class Broken(io.RawIOBase):
            def readable(self):
                return True

            def read(self, n=-1):
                raise OSError(5, 'Input/output error')

        with self.assertRaises(SortIOError):
            list(iopipe.BlockReader(Broken(), OVERLAPPED))


class BlockWriterTests(TempDirMixin, SimpleTestCase):
    def test_zero_bytes(self):
        path = self.tmp / 'zero'
        writer = iopipe.open_block_writer(path, SYNC)
        writer.close()
        self.assertEqual(path.read_bytes(), b'')
        self.assertEqual(writer.counters.write_ops, 0)

    def test_one_mebibyte_is_four_writes(self):
        data = os.urandom(2**20)
        for cfg in (SYNC, OVERLAPPED):
            path = self.tmp / f'mib-{cfg.queue_depth}'
            with self.subTest(cfg=cfg):
                with iopipe.open_block_writer(path, cfg) as writer:
                    for i in range(0, len(data), 1000):
                        writer.write(data[i:i + 1000])
                self.assertEqual(writer.counters.write_ops, 4)
                self.assertEqual(writer.counters.bytes_written, 2**20)
                self.assertEqual(path.read_bytes(), data)

    def test_partial_final_block(self):
        path = self.tmp / 'partial'
        with iopipe.open_block_writer(path, OVERLAPPED) as writer:
            writer.write(b'x' * 300_000)
        self.assertEqual(os.path.getsize(path), 300_000)
        self.assertEqual(writer.counters.write_ops, 2)

    def test_direct_io_truncates_padding(self):
        data = os.urandom(270_001)
        path = self.tmp / 'direct'
        with iopipe.open_block_writer(path, iopipe.BlockStreamConfig(direct_io=True)) as writer:
            writer.write(data)
        self.assertEqual(path.read_bytes(), data)

    def test_double_close(self):
        writer = iopipe.open_block_writer(self.tmp / 'twice', SYNC)
        writer.close()
        with self.assertRaises(UsageError):
            writer.close()
        with self.assertRaises(UsageError):
            writer.write(b'late')

    def test_stream_target(self):
        sink = io.BytesIO()
        with iopipe.BlockWriter(sink, OVERLAPPED) as writer:
            writer.write(b'hello ')
            writer.write(b'world')
        self.assertEqual(sink.getvalue(), b'hello world')

    def test_write_failure_surfaces(self):
        class Full(io.RawIOBase):
            def writable(self):
                return True

            def write(self, data):
                raise OSError(28, 'No space left on device')

        for cfg in (SYNC, OVERLAPPED):
            with self.subTest(cfg=cfg), self.assertRaises(SortIOError) as cm:
                writer = iopipe.BlockWriter(Full(), cfg)
                writer.write(b'x' * cfg.transfer_bytes * 3)
                writer.close()
            self.assertEqual(cm.exception.offset, 0)

    def test_abandon_on_exception(self):
        path = self.tmp / 'abandoned'
        with self.assertRaises(RuntimeError):
            with iopipe.open_block_writer(path, OVERLAPPED) as writer:
                writer.write(b'partial')
                raise RuntimeError('boom')
        self.assertTrue(writer.closed)
        self.assertEqual(path.read_bytes(), b'')


class IterLinesTests(SimpleTestCase):
    def test_terminators(self):
        lines = list(iopipe.iter_lines([b'a\r\nb\nc'], 10))
        self.assertEqual(lines, [(b'a', b'\r\n'), (b'b', b'\n'), (b'c', b'')])

    def test_lines_split_across_blocks(self):
        lines = list(iopipe.iter_lines([b'ab', b'c\r', b'\n', b'\nd\n'], 10))
        self.assertEqual(lines, [(b'abc', b'\r\n'), (b'', b'\n'), (b'd', b'\n')])

    def test_record_maximum(self):
        self.assertEqual(list(iopipe.iter_lines([b'abcde\n'], 5)), [(b'abcde', b'\n')])
        with self.assertRaises(DataFormatError) as cm:
            list(iopipe.iter_lines([b'ok\n', b'abcdef', b'ghi\n'], 5))
        self.assertEqual(cm.exception.record_index, 1)

    def test_unterminated_oversize_tail(self):
        with self.assertRaises(DataFormatError):
            list(iopipe.iter_lines([b'abcdef'], 5))


class IoCountersTests(SimpleTestCase):
    def test_merge_and_format(self):
        total = iopipe.IoCounters.merge(
            iopipe.IoCounters(bytes_read=10, read_ops=1, stall_time=0.25),
            iopipe.IoCounters(bytes_written=7, write_ops=2, stall_time=0.5),
        )
        self.assertEqual((total.bytes_read, total.bytes_written), (10, 7))
        self.assertEqual((total.read_ops, total.write_ops), (1, 2))
        self.assertEqual(total.format(), 'read_bytes=10 written_bytes=7 stalls=0.750')


class CopyBaselineTests(TempDirMixin, SimpleTestCase):
    def test_copy_is_identical(self):
        src = self.write_records('src.dat', 100_000, seed=4)
        dst = self.tmp / 'dst.dat'
        report = iopipe.copy_baseline(src, dst, iopipe.BlockStreamConfig())
        self.assertEqual(dst.read_bytes(), src.read_bytes())
        self.assertEqual(report.bytes, 10_000_000)
        self.assertEqual(report.counters.bytes_read, 10_000_000)
        self.assertEqual(report.counters.bytes_written, 10_000_000)
        self.assertGreaterEqual(report.cpu_headroom_seconds, 0)

    def test_zero_byte_copy(self):
        src = self.tmp / 'empty'
        src.write_bytes(b'')
        report = iopipe.copy_baseline(src, self.tmp / 'copy', SYNC)
        self.assertEqual(report.bytes, 0)
        self.assertEqual((self.tmp / 'copy').read_bytes(), b'')
        self.assertIn('bytes=0 ', report.format())
        self.assertIn('mb_per_s=', report.format())

    def test_report_arithmetic(self):
        report = iopipe.CopyReport(bytes=2**21, elapsed_seconds=2.0, cpu_seconds=0.5)
        self.assertEqual(report.mb_per_second, 1.0)
        self.assertEqual(report.cpu_headroom_seconds, 1.5)
        self.assertEqual(iopipe.CopyReport(bytes=0, elapsed_seconds=0, cpu_seconds=0).mb_per_second, 0.0)
