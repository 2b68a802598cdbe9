"""Command line: the NTsort-compatible ``sort`` verb plus ``gen``,
``validate``, ``bench``, ``report`` and ``copy``.

``sort`` flags follow the NTsort box, case-insensitively, in ``/X`` or
``--x`` spelling::

    sort [/R] [/+n] [/M kilobytes] [/L locale] [/RE recordbytes]
         [filename1] [/T path2] [/O filename3]
"""
import argparse
import logging
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from django.conf import settings

from ntsort import benchmetrics, iopipe, recgen, sortcore
from ntsort.exceptions import (
    EXIT_DATA,
    EXIT_IO,
    EXIT_OK,
    BenchmarkInvalid,
    NtsortError,
    UsageError,
)

logger = logging.getLogger(__name__)

USAGE = """\
usage: ntsort <verb> [options]

verbs:
  sort      [/R] [/+n] [/M kilobytes] [/L locale] [/RE recordbytes] [input] [/T dir] [/O output]
  gen       --records N [--seed S] [--record-bytes B] [--key-bytes K] [--out PATH]
  validate  PATH [--against PATH] [/+n] [/R] [/RE recordbytes]
  bench     --mode {datamation,pennysort,minutesort,perf_price} --price USD [options]
  report    [--format {text,csv}] [--history] [--reference] [--from-db] [results.csv ...]
  copy      SRC DST

every verb accepts --verbose

bench times each sort from the sort call to the completed output file
(timed_from=sort_call); input generation and validation are not timed.
An existing input is reused only if it was generated with the same
record count and --seed.
"""

VALUE_FLAGS = {
    'M': 'memory', 'MEMORY': 'memory',
    'L': 'locale', 'LOCALE': 'locale',
    'RE': 'record_max', 'REC': 'record_max', 'RECORD_MAXIMUM': 'record_max',
    'T': 'temp_dir', 'TEMPORARY': 'temp_dir',
    'O': 'output', 'OUTPUT': 'output',
}
SWITCH_FLAGS = {
    'R': 'reverse', 'REVERSE': 'reverse',
    'NO-OVERLAP': 'no_overlap',
    'DIRECT-IO': 'direct_io',
}


def _flag_name(token):
    if token.startswith('--'):
        return token[2:].upper()
    if token.startswith('/') and len(token) > 1:
        return token[1:].upper()
    return None


def _int_value(flag, value, what):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{flag} needs {what}, got {value!r}") from None


def parse_sort_args(argv, base=None):
    """Build a SortConfig from NTsort-style arguments.

    ``/X`` tokens are flags only when X is a known flag; anything else
    starting with ``/`` is a path. Unknown ``--x`` options are rejected.
    """
    base = base or sortcore.SortConfig()
    values = {}
    tokens = list(argv)
    positional = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        name = _flag_name(token)
        i += 1
        if name is not None and name.startswith('+'):
            digits = name[1:]
            if not digits.isdigit() or int(digits) < 1:
                raise UsageError(f"malformed {token}: expected /+n with n >= 1")
            values['key_offset_n'] = int(digits)
        elif name in SWITCH_FLAGS:
            values[SWITCH_FLAGS[name]] = True
        elif name in VALUE_FLAGS:
            if i >= len(tokens):
                raise UsageError(f"{token} needs a value")
            values[VALUE_FLAGS[name]] = (token, tokens[i])
            i += 1
        elif token.startswith('-') and token != '-':
            raise UsageError(f"unknown option {token}")
        else:
            positional.append(token)

    if len(positional) > 1:
        raise UsageError(f"only one input file may be given, got {' '.join(positional)}")

    fields = {}
    if positional and positional[0] != '-':
        fields['input'] = Path(positional[0])
    if 'key_offset_n' in values:
        fields['key_offset_n'] = values['key_offset_n']
    if values.get('reverse'):
        fields['reverse'] = True
    if values.get('no_overlap'):
        fields['overlap_io'] = False
    if values.get('direct_io'):
        fields['direct_io'] = True
    if 'locale' in values:
        flag, locale = values['locale']
        if locale.upper() != 'C':
            raise UsageError(
                f"{flag} {locale}: only the \"C\" locale is supported. "
                "It is currently the only alternative."
            )
        fields['locale'] = 'C'
    if 'record_max' in values:
        flag, raw = values['record_max']
        record_max = _int_value(flag, raw, 'a character count')
        if not 1 <= record_max <= sortcore.RECORD_MAXIMUM_LIMIT:
            raise UsageError(
                f"{flag} {record_max}: record maximum must be between 1 and "
                f"{sortcore.RECORD_MAXIMUM_LIMIT}"
            )
        fields['record_max'] = record_max
    if 'memory' in values:
        flag, raw = values['memory']
        kilobytes = _int_value(flag, raw, 'a size in kilobytes')
        if kilobytes <= 0:
            raise UsageError(f"{flag} {kilobytes}: memory must be positive")
        fields['memory_kilobytes'] = kilobytes
    if 'temp_dir' in values:
        fields['temp_dir'] = Path(values['temp_dir'][1])
    if 'output' in values:
        fields['output'] = Path(values['output'][1])
    return replace(base, **fields)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(stream, line):
    stream.write((line + '\n').encode('utf-8'))
    stream.flush()


def _default_config():
    return sortcore.SortConfig.from_settings()


def _memory_budget():
    return settings.NTSORT['MEMORY_BYTES']


def cmd_sort(args, io):
    verbose = _pop_verbose(args)
    config = parse_sort_args(args, base=_default_config())
    summary = sortcore.sort(
        config,
        available_memory_bytes=_memory_budget(),
        stdin=io.stdin,
        stdout=io.stdout,
        started_at=io.started_at,
    )
    if verbose:
        io.stderr.write(summary.plan.describe() + '\n')
        io.stderr.write(summary.format() + '\n')
        io.stderr.write(summary.counters.format() + '\n')
    return EXIT_OK


def cmd_gen(args, io):
    parser = _Parser(prog='gen')
    parser.add_argument('--records', type=int, required=True)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--record-bytes', type=int, default=100)
    parser.add_argument('--key-bytes', type=int, default=10)
    parser.add_argument('--out')
    parser.add_argument('--verbose', action='store_true')
    opts = parser.parse_args(args)
    _apply_verbose(opts.verbose)
    spec = recgen.GenSpec(
        record_count=opts.records,
        seed=opts.seed,
        record_bytes=opts.record_bytes,
        key_bytes=opts.key_bytes,
    )
    cfg = iopipe.BlockStreamConfig.from_settings()
    target = opts.out if opts.out else io.stdout
    with iopipe.open_block_writer(target, cfg) as writer:
        summary = recgen.generate(spec, writer)
    if opts.out:
        _emit(io.stdout, summary.format())
    else:
        io.stderr.write(summary.format() + '\n')
    return EXIT_OK


def cmd_validate(args, io):
    verbose = _pop_verbose(args)
    against = None
    if '--against' in args:
        at = args.index('--against')
        if at + 1 >= len(args):
            raise UsageError('--against needs a path')
        against = args[at + 1]
        del args[at:at + 2]
    config = parse_sort_args(args, base=_default_config())
    if config.input is None:
        raise UsageError('validate needs a file to check')
    cfg = config.stream_config()
    with iopipe.open_block_reader(config.input, cfg) as reader:
        report = recgen.validate(reader, config)
    _emit(io.stdout, report.format())
    if verbose:
        logger.info("validated %s", config.input)
    if not report.is_sorted:
        return EXIT_DATA
    if against is not None:
        with iopipe.open_block_reader(against, cfg) as reader:
            other = recgen.validate(reader, config)
        if (other.record_count, other.key_checksum) != (report.record_count, report.key_checksum):
            io.stderr.write(
                f"permutation mismatch: {config.input} has records={report.record_count} "
                f"checksum={report.key_checksum:016x}, {against} has "
                f"records={other.record_count} checksum={other.key_checksum:016x}\n"
            )
            return EXIT_DATA
    return EXIT_OK


def cmd_bench(args, io):
    parser = _Parser(prog='bench')
    parser.add_argument('--mode', required=True, choices=[m.value for m in benchmetrics.Mode])
    parser.add_argument('--price', required=True)
    parser.add_argument('--category', default=benchmetrics.Category.INDY.value,
                        choices=[c.value for c in benchmetrics.Category])
    parser.add_argument('--records', type=int)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--product', default='ntsort')
    parser.add_argument('--work-dir')
    parser.add_argument('--csv')
    parser.add_argument('--save', action='store_true')
    parser.add_argument('--verbose', action='store_true')
    opts, rest = parser.parse_known_args(args)
    _apply_verbose(opts.verbose)
    config = parse_sort_args(rest, base=_default_config())
    try:
        price = benchmetrics.PriceModel(opts.price)
    except ArithmeticError:
        raise UsageError(f"--price needs a dollar amount, got {opts.price!r}") from None
    conf = settings.NTSORT
    work_dir = opts.work_dir or config.temp_dir or tempfile.gettempdir()
    result = benchmetrics.run_benchmark(
        opts.mode,
        config,
        price,
        opts.category,
        work_dir=work_dir,
        records=opts.records,
        seed=opts.seed,
        product=opts.product,
        available_memory_bytes=_memory_budget(),
        window_seconds=conf['MINUTE_SECONDS'],
        max_probes=conf['SEARCH_PROBES'],
    )
    _emit(io.stdout, result.format())
    rendered = benchmetrics.render_report([result], format='csv')
    if opts.csv:
        _append_csv(Path(opts.csv), rendered)
    else:
        io.stdout.write(rendered)
        io.stdout.flush()
    if opts.save:
        from ntsort.models import BenchmarkRun

        BenchmarkRun.objects.create_from_result(result)
    if not result.valid:
        raise BenchmarkInvalid(f"{result.mode.value} run is invalid: {result.failure}", result)
    return EXIT_OK


def _append_csv(path, rendered):
    header, _, rows = rendered.partition(b'\r\n')
    with open(path, 'ab') as f:
        if f.tell() == 0:
            f.write(header + b'\r\n')
        f.write(rows)


def cmd_report(args, io):
    parser = _Parser(prog='report')
    parser.add_argument('files', nargs='*')
    parser.add_argument('--format', default='text', choices=['text', 'csv'])
    parser.add_argument('--history', action='store_true')
    parser.add_argument('--reference', action='store_true')
    parser.add_argument('--from-db', action='store_true')
    parser.add_argument('--verbose', action='store_true')
    opts = parser.parse_args(args)
    _apply_verbose(opts.verbose)
    results = []
    if opts.reference:
        results += benchmetrics.reference_results()
    for name in opts.files:
        try:
            results += benchmetrics.parse_csv(Path(name).read_bytes())
        except (KeyError, ValueError, ArithmeticError) as exc:
            raise UsageError(f"{name} is not a benchmark results file: {exc}") from None
    if opts.from_db:
        from ntsort.models import BenchmarkRun

        results += [run.to_result() for run in BenchmarkRun.objects.all()]
    io.stdout.write(benchmetrics.render_report(results, format=opts.format, history=opts.history))
    io.stdout.flush()
    return EXIT_OK


def cmd_copy(args, io):
    verbose = _pop_verbose(args)
    if len(args) != 2:
        raise UsageError('copy needs SRC and DST')
    report = iopipe.copy_baseline(args[0], args[1], iopipe.BlockStreamConfig.from_settings())
    _emit(io.stdout, report.format())
    if verbose:
        io.stderr.write(report.counters.format() + '\n')
    return EXIT_OK


VERBS = {
    'sort': cmd_sort,
    'gen': cmd_gen,
    'validate': cmd_validate,
    'bench': cmd_bench,
    'report': cmd_report,
    'copy': cmd_copy,
}


def _apply_verbose(verbose):
    if verbose:
        logging.getLogger('ntsort').setLevel(logging.INFO)


def _pop_verbose(args):
    found = False
    for spelling in ('--verbose', '--VERBOSE', '/VERBOSE', '/verbose'):
        while spelling in args:
            args.remove(spelling)
            found = True
    _apply_verbose(found)
    return found


class _Streams:
    def __init__(self, stdin, stdout, stderr, started_at):
        self.stdin = stdin
        self.stdout = stdout
        self.stderr = stderr
        self.started_at = started_at


def main(argv=None, stdin=None, stdout=None, stderr=None, started_at=None):
    """Run one verb and return its exit code.

    ``stdin``/``stdout`` are binary streams, ``stderr`` a text stream.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    io = _Streams(
        stdin or sys.stdin.buffer,
        stdout or sys.stdout.buffer,
        stderr or sys.stderr,
        started_at,
    )
    if not argv or argv[0] not in VERBS:
        if argv:
            io.stderr.write(f"error: unknown verb {argv[0]!r}\n")
        io.stderr.write(USAGE)
        return UsageError.exit_code
    verb, args = argv[0], argv[1:]
    try:
        return VERBS[verb](args, io)
    except NtsortError as exc:
        io.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        io.stderr.write(f"error: {exc}\n")
        return EXIT_IO
