"""Exception hierarchy shared across groundgate."""

from __future__ import annotations


class GroundGateError(Exception):
    """Base class for all groundgate failures."""


class SchemaError(GroundGateError):
    """A corpus line does not match the record schema."""


class ConfigurationError(GroundGateError):
    """Bad provider/template/CLI configuration."""


# providers


class ProviderError(GroundGateError):
    """Any failure raised by a model provider."""


class TransportError(ProviderError):
    """Network-level failure; retryable."""


class RateLimitError(TransportError):
    """Remote signalled HTTP 429."""


class MalformedResponseError(ProviderError):
    """Remote answered, but the payload could not be interpreted."""


class FixtureMissingError(ProviderError):
    """Scripted mock has no completion for the requested key."""


# detectors


class DetectorError(GroundGateError):
    """A detector could not produce a verdict for one record."""


class UnparseableVerdict(DetectorError):
    def __init__(self, raw: str):
        super().__init__(f"could not parse verdict from completion: {raw[:200]!r}")
        self.raw = raw


class ExtractionFailed(DetectorError):
    pass


class VerificationFailed(DetectorError):
    pass


class DegenerateCase(DetectorError):
    """Zero triplets/claims while running in strict mode."""


# calibration / data


class DegenerateCalibration(GroundGateError):
    """Calibration input holds only one class."""


class RejectedAdaptation(GroundGateError):
    pass


class AnnotationFailed(GroundGateError):
    pass
