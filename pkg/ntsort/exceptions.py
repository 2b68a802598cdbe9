"""Error hierarchy shared by every ntsort module.

Each class carries the exit code the command line reports for it.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3
EXIT_BENCHMARK_INVALID = 4


class NtsortError(Exception):
    exit_code = EXIT_USAGE


class UsageError(NtsortError):
    exit_code = EXIT_USAGE


class ConfigurationError(UsageError):
    """A parameter object violates one of its invariants."""


# price and budget arithmetic outside its domain
DomainError = ConfigurationError


class PlanInfeasible(ConfigurationError):
    def __init__(self, input_bytes, available_bytes, minimum_memory_bytes):
        self.input_bytes = input_bytes
        self.available_bytes = available_bytes
        self.minimum_memory_bytes = minimum_memory_bytes
        super().__init__(
            f"two-pass infeasible: {input_bytes} input bytes need at least "
            f"{minimum_memory_bytes} bytes of memory, {available_bytes} available"
        )


class DataFormatError(NtsortError):
    exit_code = EXIT_DATA

    def __init__(self, message, record_index=None):
        self.record_index = record_index
        super().__init__(message)


class SortIOError(NtsortError):
    exit_code = EXIT_IO

    def __init__(self, message, offset=None, run_index=None):
        self.offset = offset
        self.run_index = run_index
        parts = [message]
        if run_index is not None:
            parts.append(f"run={run_index}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__(" ".join(parts))


class BenchmarkInvalid(NtsortError):
    exit_code = EXIT_BENCHMARK_INVALID

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)
