import io
from collections import Counter

from django.test import SimpleTestCase
from scipy.stats import chisquare

from ntsort import recgen, sortcore
from ntsort.exceptions import ConfigurationError, DataFormatError, SortIOError
from ntsort.tests.helpers import SLOW, TempDirMixin


def generated(count, seed=0, **kwargs):
    sink = io.BytesIO()
    summary = recgen.generate(recgen.GenSpec(record_count=count, seed=seed, **kwargs), sink)
    return sink.getvalue(), summary


class SplitMix64Tests(SimpleTestCase):
    def test_reference_output_for_seed_zero(self):
        self.assertEqual(recgen.SplitMix64(0).next(), 0xE220A8397B1DCDAF)

    def test_outputs_are_64_bit(self):
        rng = recgen.SplitMix64(2**64 - 1)
        for _ in range(100):
            self.assertLess(rng.next(), 2**64)


class GenSpecTests(SimpleTestCase):
    def test_defaults_describe_datamation_records(self):
        spec = recgen.GenSpec(record_count=10)
        self.assertEqual((spec.record_bytes, spec.key_bytes, spec.terminator_bytes), (100, 10, 2))
        self.assertEqual(spec.payload_bytes, 88)
        self.assertEqual(spec.total_bytes, 1000)

    def test_invalid_specs(self):
        for kwargs in (
            {'record_count': -1},
            {'record_count': 1, 'seed': -1},
            {'record_count': 1, 'seed': 2**64},
            {'record_count': 1, 'key_bytes': 0},
            {'record_count': 1, 'record_bytes': 11},
            {'record_count': 1, 'terminator_bytes': 1},
            {'record_count': 1, 'record_bytes': 70000},
        ):
            with self.subTest(**kwargs), self.assertRaises(ConfigurationError):
                recgen.GenSpec(**kwargs)

    def test_key_and_terminator_may_fill_the_record(self):
        data, _ = generated(3, record_bytes=12, key_bytes=10)
        self.assertEqual(len(data), 36)
        self.assertTrue(all(r.endswith(b'\r\n') for r in data.splitlines(keepends=True)))


class GenerateTests(SimpleTestCase):
    def test_zero_records(self):
        data, summary = generated(0, seed=99)
        self.assertEqual(data, b'')
        self.assertEqual((summary.records, summary.bytes), (0, 0))

    def test_record_layout(self):
        data, summary = generated(25, seed=3)
        self.assertEqual(summary.bytes, 2500)
        self.assertEqual(summary.format(), 'records=25 bytes=2500 seed=3')
        for i in range(25):
            record = data[i * 100:(i + 1) * 100]
            key = record[:10]
            self.assertTrue(all(0x20 <= b <= 0x7E for b in key))
            self.assertEqual(record[10:30], str(i).zfill(20).encode())
            self.assertEqual(record[30:98], b'.' * 68)
            self.assertEqual(record[98:], b'\r\n')

    def test_same_seed_is_byte_identical(self):
        self.assertEqual(generated(1000, seed=42)[0], generated(1000, seed=42)[0])

    def test_different_seeds_differ(self):
        self.assertNotEqual(generated(100, seed=1)[0], generated(100, seed=2)[0])

    def test_first_key_byte_is_uniform_over_printable_ascii(self):
        count = 10**5
        data, _ = generated(count, seed=11)
        counts = Counter(data[0::100])
        observed = [counts.get(b, 0) for b in range(0x20, 0x7F)]
        self.assertEqual(sum(observed), count)
        self.assertGreater(chisquare(observed).pvalue, 0.001)

    def test_lanes_past_the_last_full_cycle_are_redrawn(self):
        class FixedWords:
            def __init__(self, words):
                self.words = iter(words)

            def next(self):
                return next(self.words)

        self.assertEqual(recgen.LANE_LIMIT, 65455)
        # lanes low to high: 65535 and 65455 are rejected, 0 and 94 kept
        word = 0xFFFF | (0 << 16) | (65455 << 32) | (94 << 48)
        self.assertEqual(recgen._key(FixedWords([word]), 2), b' ~')
        self.assertEqual(recgen._key(FixedWords([0xFFFF_FFFF_FFFF_FFFF, 65454]), 1), b'~')

    def test_sink_failure_reports_offset(self):
        class FullDisk(io.RawIOBase):
            def __init__(self):
                self.seen = 0

            def writable(self):
                return True

            def write(self, data):
                if self.seen:
                    raise OSError(28, 'No space left on device')
                self.seen += len(data)
                return len(data)

        with self.assertRaises(SortIOError) as cm:
            recgen.generate(recgen.GenSpec(record_count=recgen.BATCH_RECORDS * 2), FullDisk())
        self.assertEqual(cm.exception.offset, recgen.BATCH_RECORDS * 100)

    @SLOW
    def test_one_million_records(self):
        sink = io.BytesIO()
        summary = recgen.generate(recgen.GenSpec(record_count=10**6), sink)
        self.assertEqual(summary.bytes, 100_000_000)
        self.assertEqual(len(sink.getvalue()), 100_000_000)


class ValidateTests(TempDirMixin, SimpleTestCase):
    config = sortcore.SortConfig()

    def test_sorted_file(self):
        report = recgen.validate(io.BytesIO(b'a\r\nb\r\nc\r\n'), self.config)
        self.assertTrue(report.is_sorted)
        self.assertEqual(report.record_count, 3)
        self.assertIsNone(report.first_violation_index)
        self.assertEqual(report.total_bytes, 9)

    def test_first_violation_is_the_later_record(self):
        report = recgen.validate(io.BytesIO(b'b\r\na\r\n'), self.config)
        self.assertFalse(report.is_sorted)
        self.assertEqual(report.first_violation_index, 1)
        self.assertIn('sorted=false first_violation=1', report.format())

    def test_reverse_order(self):
        reverse = sortcore.SortConfig(reverse=True)
        self.assertTrue(recgen.validate(io.BytesIO(b'c\nb\na\n'), reverse).is_sorted)
        self.assertEqual(recgen.validate(io.BytesIO(b'a\nb\n'), reverse).first_violation_index, 1)

    def test_key_offset(self):
        config = sortcore.SortConfig(key_offset_n=2)
        self.assertTrue(recgen.validate(io.BytesIO(b'za\nab\n'), config).is_sorted)

    def test_oversize_line_names_record(self):
        config = sortcore.SortConfig(record_max=5)
        with self.assertRaises(DataFormatError) as cm:
            recgen.validate(io.BytesIO(b'abc\nabcdefgh\n'), config)
        self.assertEqual(cm.exception.record_index, 1)

    def test_checksum_is_sum_of_record_digests(self):
        data, _ = generated(50, seed=5)
        records = data.splitlines(keepends=True)
        expected = sum(recgen.record_checksum(r) for r in records) % 2**64
        report = recgen.validate(io.BytesIO(data), self.config)
        self.assertEqual(report.key_checksum, expected)
        self.assertEqual(report.record_count, 50)

    def test_sorting_preserves_checksum(self):
        source = self.write_records('in.dat', 500, seed=8)
        target = self.tmp / 'out.dat'
        sortcore.sort(sortcore.SortConfig(input=source, output=target, temp_dir=self.tmp))
        before = recgen.validate(io.BytesIO(source.read_bytes()), self.config)
        after = recgen.validate(io.BytesIO(target.read_bytes()), self.config)
        self.assertFalse(before.is_sorted)
        self.assertTrue(after.is_sorted)
        self.assertEqual(after.key_checksum, before.key_checksum)
        self.assertEqual(after.record_count, 500)

    def test_accepts_block_iterables(self):
        report = recgen.validate([b'a\r', b'\nb', b'\r\nc'], self.config)
        self.assertEqual(report.record_count, 3)
        self.assertTrue(report.is_sorted)
