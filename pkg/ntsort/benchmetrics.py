"""Sort benchmark definitions and their price/performance arithmetic.

Units are binary throughout: a MB is 2**20 bytes and a GB 2**30 bytes,
the only reading under which the published PennySort GB/$ figures agree
with their sorted-MB column.
"""
import csv
import enum
import io
import logging
import os
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional

from ntsort import recgen, sortcore
from ntsort.exceptions import DomainError, UsageError
from ntsort.iopipe import BlockReader, BlockWriter

logger = logging.getLogger(__name__)

DEPRECIATION_SECONDS = 94_608_000  # three years
MIB = 2**20
GIB = 2**30
PENNIES_PER_DOLLAR = 100
MINUTE_SECONDS = 60
DATAMATION_RECORDS = 1_000_000
DEFAULT_SEARCH_PROBES = 8
DEFAULT_SEARCH_START_RECORDS = 100_000
# The sort runs in-process, so the clock starts at the sort call: it covers
# creating the target file and the sort, but not interpreter start-up.
# Input generation and validation are never timed.
TIMED_FROM = 'sort_call'
HISTORY_CSV = Path(__file__).resolve().parent / 'data' / 'table4.csv'

CSV_COLUMNS = [
    'product', 'mode', 'category', 'budget_s', 'elapsed_s', 'cpu_kernel_s',
    'cpu_user_s', 'sorted_mib', 'gib_per_dollar', 'valid',
]


class Mode(enum.Enum):
    DATAMATION = 'datamation'
    MINUTESORT = 'minutesort'
    PENNYSORT = 'pennysort'
    PERF_PRICE = 'perf_price'


class Category(enum.Enum):
    DAYTONA = 'Daytona'  # commercially available, general purpose
    INDY = 'Indy'  # research code, any hack allowed


def _decimal(value):
    return value if isinstance(value, Decimal) else Decimal(str(value))


@dataclass(frozen=True)
class PriceModel:
    system_price_usd: Decimal
    depreciation_seconds: int = DEPRECIATION_SECONDS

    def __post_init__(self):
        object.__setattr__(self, 'system_price_usd', _decimal(self.system_price_usd))
        if self.system_price_usd <= 0:
            raise DomainError(f"system price must be positive, got {self.system_price_usd}")
        if self.depreciation_seconds != DEPRECIATION_SECONDS:
            raise DomainError(
                f"depreciation is three years ({DEPRECIATION_SECONDS} s), got {self.depreciation_seconds}"
            )

    def cost_of(self, seconds):
        """Dollars of depreciated system cost consumed in ``seconds``."""
        return self.system_price_usd * _decimal(seconds) / self.depreciation_seconds


def penny_budget(price):
    """Wall-clock seconds one penny of depreciated system cost buys."""
    return Decimal(price.depreciation_seconds) / (price.system_price_usd * PENNIES_PER_DOLLAR)


def gb_per_dollar(bytes_sorted, price, window_seconds=MINUTE_SECONDS):
    """GiB sorted per dollar of system time spent in ``window_seconds``.

    The default minute window is the Performance/Price metric. With the
    penny budget as the window the dollar is one hundred pennies, which is
    how the PennySort GB/$ column is computed.
    """
    if bytes_sorted < 0:
        raise DomainError(f"bytes sorted must be non-negative, got {bytes_sorted}")
    return (Decimal(bytes_sorted) / GIB) / price.cost_of(window_seconds)


def quantize(value, places=0):
    exponent = Decimal(1).scaleb(-places)
    return _decimal(value).quantize(exponent, rounding=ROUND_HALF_UP)


@dataclass
class BenchmarkResult:
    mode: Mode
    elapsed_seconds: Decimal
    bytes_sorted: int
    records_sorted: int
    category: Category = Category.INDY
    product: str = 'ntsort'
    cpu_user_seconds: Optional[Decimal] = None
    cpu_kernel_seconds: Optional[Decimal] = None
    budget_seconds: Optional[Decimal] = None
    gb_per_dollar: Optional[Decimal] = None
    valid: bool = True
    overrun_seconds: Optional[Decimal] = None
    failure: str = ''
    probes: list = field(default_factory=list)
    # where the elapsed clock started; empty for results read back from reports
    timed_from: str = ''

    @property
    def mb_sorted(self):
        return Decimal(self.bytes_sorted) / MIB

    @property
    def mb_per_second(self):
        if not self.elapsed_seconds:
            return Decimal(0)
        return self.mb_sorted / _decimal(self.elapsed_seconds)

    @property
    def cpu_total_seconds(self):
        if self.cpu_user_seconds is None or self.cpu_kernel_seconds is None:
            return None
        return self.cpu_user_seconds + self.cpu_kernel_seconds

    def format(self):
        parts = [
            f"mode={self.mode.value}",
            f"product={self.product}",
            f"category={self.category.value}",
        ]
        if self.budget_seconds is not None:
            parts.append(f"budget_s={quantize(self.budget_seconds, 1)}")
        parts += [
            f"elapsed_s={quantize(self.elapsed_seconds, 3)}",
            f"records={self.records_sorted}",
            f"sorted_mib={quantize(self.mb_sorted, 2)}",
        ]
        if self.gb_per_dollar is not None:
            parts.append(f"gib_per_dollar={quantize(self.gb_per_dollar, 2)}")
        parts.append(f"valid={str(self.valid).lower()}")
        if self.overrun_seconds is not None:
            parts.append(f"overrun_s={quantize(self.overrun_seconds, 1)}")
        if self.failure:
            parts.append(f"failure={self.failure!r}")
        if self.timed_from:
            parts.append(f"timed_from={self.timed_from}")
        return ' '.join(parts)

    def to_row(self):
        def opt(value, places):
            return '' if value is None else str(quantize(value, places))

        return {
            'product': self.product,
            'mode': self.mode.value,
            'category': self.category.value,
            'budget_s': opt(self.budget_seconds, 1),
            'elapsed_s': opt(self.elapsed_seconds, 3),
            'cpu_kernel_s': opt(self.cpu_kernel_seconds, 3),
            'cpu_user_s': opt(self.cpu_user_seconds, 3),
            'sorted_mib': opt(self.mb_sorted, 3),
            'gib_per_dollar': opt(self.gb_per_dollar, 3),
            'valid': str(self.valid).lower(),
        }

    @classmethod
    def from_row(cls, row):
        def opt(name):
            value = row.get(name, '')
            return Decimal(value) if value not in ('', None) else None

        mib = opt('sorted_mib') or Decimal(0)
        return cls(
            mode=Mode(row['mode']),
            category=Category(row['category']),
            product=row['product'],
            elapsed_seconds=opt('elapsed_s') or Decimal(0),
            bytes_sorted=int((mib * MIB).to_integral_value(rounding=ROUND_HALF_UP)),
            records_sorted=0,
            cpu_user_seconds=opt('cpu_user_s'),
            cpu_kernel_seconds=opt('cpu_kernel_s'),
            budget_seconds=opt('budget_s'),
            gb_per_dollar=opt('gib_per_dollar'),
            valid=row.get('valid', 'true').lower() == 'true',
        )


# (product, time budget s, kernel s, user s, total cpu s, sorted MB, GB/$, category)
PENNYSORT_1998 = [
    ('NTsort', 828, 7, 402, 409, 1445, 141, Category.INDY),
    ('PostmanSort', 733, 61, 151, 212, 1277, 125, Category.DAYTONA),
    ('NitroSort (no hint)', 656, 22, 27, 49, 355, 35, Category.DAYTONA),
    ('NitroSort hint', 656, 40, 60, 99, 727, 71, Category.DAYTONA),
    ('NitroSort 1.5 Beta', 656, 53, 60, 113, 980, 96, Category.DAYTONA),
]


def reference_results():
    """The published PennySort rows as BenchmarkResults."""
    results = []
    for product, budget, kernel, user, _total, mb, _gbd, category in PENNYSORT_1998:
        price = PriceModel(Decimal(DEPRECIATION_SECONDS) / (budget * PENNIES_PER_DOLLAR))
        results.append(BenchmarkResult(
            mode=Mode.PENNYSORT,
            product=product,
            category=category,
            elapsed_seconds=Decimal(budget),
            bytes_sorted=mb * MIB,
            records_sorted=0,
            cpu_kernel_seconds=Decimal(kernel),
            cpu_user_seconds=Decimal(user),
            budget_seconds=Decimal(budget),
            gb_per_dollar=gb_per_dollar(mb * MIB, price, window_seconds=budget),
        ))
    return results


@dataclass(frozen=True)
class HistoricalRow:
    year: int
    mb_per_sec: Decimal
    gb_per_dollar: Decimal
    system: str
    price_musd: Decimal
    cpus: int
    category: str


def load_history(path=HISTORY_CSV):
    with open(path, newline='', encoding='utf-8') as f:
        return [
            HistoricalRow(
                year=int(row['year']),
                mb_per_sec=Decimal(row['mb_per_sec']),
                gb_per_dollar=Decimal(row['gb_per_dollar']),
                system=row['system'],
                price_musd=Decimal(row['price_musd']),
                cpus=int(row['cpus']),
                category=row['category'],
            )
            for row in csv.DictReader(f)
        ]


# running benchmarks


@dataclass
class Probe:
    records: int
    elapsed_seconds: float
    passed: bool


def _generate_input(path, records, seed, stream_cfg):
    spec = recgen.GenSpec(record_count=records, seed=seed)
    with BlockWriter(path, stream_cfg) as writer:
        recgen.generate(spec, writer)
    return spec


def _input_matches(path, records, seed):
    """True when ``path`` already holds the ``records``-record input for ``seed``."""
    spec = recgen.GenSpec(record_count=records, seed=seed)
    try:
        if os.path.getsize(path) != spec.total_bytes:
            return False
        with open(path, 'rb') as f:
            head = f.read(spec.record_bytes)
    except OSError:
        return False
    first = next(recgen.iter_records(replace(spec, record_count=1)), b'')
    return head == first


def _validate_file(path, config, stream_cfg):
    with BlockReader(path, stream_cfg) as reader:
        return recgen.validate(reader, config)


def _timed_sort(config, available_memory_bytes, sorter):
    summary = sorter(config, available_memory_bytes=available_memory_bytes)
    report = _validate_file(config.output, config, config.stream_config())
    return summary, report


def _cpu(summary):
    def d(value):
        return None if value is None else quantize(value, 3)

    return d(summary.cpu_user_seconds), d(summary.cpu_kernel_seconds)


def minute_search(probe, start_records=DEFAULT_SEARCH_START_RECORDS,
                  window_seconds=MINUTE_SECONDS, max_probes=DEFAULT_SEARCH_PROBES):
    """Largest record count ``probe`` sorts within ``window_seconds``.

    ``probe(records)`` returns elapsed seconds. Sizes double until one
    misses the window, then bisect between the last pass and the first
    miss, spending at most ``max_probes`` sorts. Returns
    ``(best_records or None, probes)``.
    """
    probes = []
    best, failed = None, None
    size = max(start_records, 1)
    while len(probes) < max_probes:
        elapsed = probe(size)
        passed = elapsed <= window_seconds
        probes.append(Probe(size, elapsed, passed))
        logger.info("probe %d records: %.3f s %s", size, elapsed, 'pass' if passed else 'miss')
        if passed:
            best = size
        else:
            failed = size
        if failed is None:
            size *= 2
            continue
        low = best or 0
        if failed - low <= 1:
            break
        size = (low + failed) // 2
    return best, probes


def run_benchmark(mode, config, price, category=Category.INDY, *, work_dir, records=None,
                  seed=0, product='ntsort', available_memory_bytes=None,
                  window_seconds=MINUTE_SECONDS, max_probes=DEFAULT_SEARCH_PROBES,
                  sorter=sortcore.sort):
    """Run one benchmark and return its BenchmarkResult.

    ``config`` supplies the sort flags; input and output paths are placed
    under ``work_dir``. Generation and validation stay outside the timed
    region, which covers the sort call from start to completed output.
    """
    mode = Mode(mode)
    category = Category(category)
    work_dir = Path(work_dir)
    stream_cfg = config.stream_config()
    input_path = work_dir / f"{mode.value}.in"
    output_path = work_dir / f"{mode.value}.out"
    sort_config = replace(config, input=input_path, output=output_path)

    if mode in (Mode.DATAMATION, Mode.PENNYSORT):
        count = records or DATAMATION_RECORDS
        if not _input_matches(input_path, count, seed):
            _generate_input(input_path, count, seed, stream_cfg)
        input_report = _validate_file(input_path, sort_config, stream_cfg)
        summary, report = _timed_sort(sort_config, available_memory_bytes, sorter)
        user, kernel = _cpu(summary)
        result = BenchmarkResult(
            mode=mode,
            product=product,
            category=category,
            elapsed_seconds=quantize(summary.elapsed_seconds, 6),
            bytes_sorted=summary.bytes,
            records_sorted=summary.records,
            cpu_user_seconds=user,
            cpu_kernel_seconds=kernel,
            timed_from=TIMED_FROM,
        )
        _check_output(result, report, input_report)
        if mode is Mode.PENNYSORT:
            apply_penny_budget(result, price)
        return result

    outcomes = {}

    def probe(count):
        _generate_input(input_path, count, seed, stream_cfg)
        input_report = _validate_file(input_path, sort_config, stream_cfg)
        summary, report = _timed_sort(sort_config, available_memory_bytes, sorter)
        outcomes[count] = (summary, report, input_report)
        return summary.elapsed_seconds

    best, probes = minute_search(
        probe, start_records=records or DEFAULT_SEARCH_START_RECORDS,
        window_seconds=window_seconds, max_probes=max_probes,
    )
    if best is None:
        smallest = probes[0]
        return BenchmarkResult(
            mode=mode, product=product, category=category,
            elapsed_seconds=quantize(smallest.elapsed_seconds, 6),
            bytes_sorted=0, records_sorted=0, gb_per_dollar=Decimal(0),
            valid=False, failure=f"no probe finished within {window_seconds} s", probes=probes,
            timed_from=TIMED_FROM,
        )
    summary, report, input_report = outcomes[best]
    user, kernel = _cpu(summary)
    result = BenchmarkResult(
        mode=mode,
        product=product,
        category=category,
        elapsed_seconds=quantize(summary.elapsed_seconds, 6),
        bytes_sorted=summary.bytes,
        records_sorted=summary.records,
        cpu_user_seconds=user,
        cpu_kernel_seconds=kernel,
        timed_from=TIMED_FROM,
        gb_per_dollar=gb_per_dollar(summary.bytes, price, window_seconds=window_seconds),
        probes=probes,
    )
    _check_output(result, report, input_report)
    return result


def apply_penny_budget(result, price):
    """Judge ``result`` against the penny time budget for ``price``."""
    budget = penny_budget(price)
    result.budget_seconds = budget
    result.gb_per_dollar = gb_per_dollar(result.bytes_sorted, price, window_seconds=budget)
    if _decimal(result.elapsed_seconds) > budget:
        result.valid = False
        result.overrun_seconds = _decimal(result.elapsed_seconds) - budget
        result.failure = result.failure or 'time budget exceeded'
    return result


def _check_output(result, report, input_report):
    if not report.is_sorted:
        result.valid = False
        result.failure = f"output out of order at record {report.first_violation_index}"
    elif (report.record_count, report.key_checksum) != (input_report.record_count, input_report.key_checksum):
        result.valid = False
        result.failure = 'output is not a permutation of the input'


# reports


TEXT_HEADER = [
    'Product', 'Time Budget', 'Kernel', 'User', 'Total cpu time',
    'Sorted MB', 'GB/$', 'Category', 'Elapsed', 'Valid',
]


def _cell(value, places=0):
    if value is None:
        return '-'
    return f"{quantize(value, places):,}"


def _text_rows(results):
    for r in results:
        yield [
            r.product,
            _cell(r.budget_seconds),
            _cell(r.cpu_kernel_seconds),
            _cell(r.cpu_user_seconds),
            _cell(r.cpu_total_seconds),
            _cell(r.mb_sorted),
            _cell(r.gb_per_dollar),
            r.category.value,
            _cell(r.elapsed_seconds, 1),
            'yes' if r.valid else 'no',
        ]


def _table(header, rows):
    widths = [max(len(str(c)) for c in column) for column in zip(header, *rows)]
    lines = []
    for i, row in enumerate([header, *rows]):
        cells = [str(c).ljust(w) if j == 0 else str(c).rjust(w) for j, (c, w) in enumerate(zip(row, widths))]
        lines.append('  '.join(cells).rstrip())
        if i == 0:
            lines.append('  '.join('-' * w for w in widths))
    return lines


def render_report(results, format='text', history=False):
    if not results:
        raise UsageError('nothing to report: no benchmark results')
    if format == 'csv':
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator='\r\n')
        writer.writeheader()
        for r in results:
            writer.writerow(r.to_row())
        return out.getvalue().encode('utf-8')
    if format != 'text':
        raise UsageError(f"unknown report format {format!r}")
    lines = _table(TEXT_HEADER, list(_text_rows(results)))
    if history:
        lines += ['', 'Historical performance/price results']
        rows = [
            [str(h.year), f"{h.mb_per_sec:.2f}", f"{h.gb_per_dollar:.2f}", h.system,
             str(h.price_musd), str(h.cpus), h.category]
            for h in load_history()
        ]
        lines += _table(['Year', 'MB/sec', 'GB/$', 'System', 'Price (M$)', 'CPUs', 'Category'], rows)
    return ('\n'.join(lines) + '\n').encode('utf-8')


def parse_csv(data):
    """Read results back from ``render_report(..., format='csv')`` output."""
    text = data.decode('utf-8') if isinstance(data, bytes) else data
    return [BenchmarkResult.from_row(row) for row in csv.DictReader(io.StringIO(text))]
