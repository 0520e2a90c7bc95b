"""Exception types shared across the benchmark packages."""


class BenchmarkError(Exception):
    """Base class for all errors raised by the benchmark."""


class SpecError(BenchmarkError, ValueError):
    """Malformed network specification."""


class ShapeError(BenchmarkError, ValueError):
    """Tensor shapes do not line up."""


class StaleTraceError(BenchmarkError, ValueError):
    """Backward pass called with a trace from another state or step."""


class NumericError(BenchmarkError, RuntimeError):
    """Non-finite values appeared during training or estimation."""


class DatasetFormatError(BenchmarkError, ValueError):
    """IDX file is malformed or inconsistent."""


class UnknownPresetError(BenchmarkError, KeyError):
    """Task preset or model family name is not known."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class D1AccessError(BenchmarkError, RuntimeError):
    """D1 data was read while the access guard was locked."""


class AllRunsFailedError(BenchmarkError, RuntimeError):
    """Every run of an experiment failed."""


class RecordError(BenchmarkError, ValueError):
    """A persisted record is missing, unreadable or corrupt."""


class ConfigError(BenchmarkError, ValueError):
    """Experiment configuration is unreadable or invalid."""
