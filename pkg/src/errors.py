"""
Exception hierarchy for sizeprobe.

Every error a campaign can raise derives from SizeProbeError so callers can
catch the whole family at the CLI boundary.
"""

from typing import Optional


class SizeProbeError(Exception):
    """Base class for all sizeprobe errors."""


# ============================================================
# CORE MODEL
# ============================================================

class DegenerateBaseline(SizeProbeError):
    """Baseline size is zero (empty function body); the candidate is discarded."""


# ============================================================
# MUTATION ENGINE
# ============================================================

class UnknownLanguage(SizeProbeError):
    """No LanguageProfile is configured for the requested language."""


class NoEligibleInstruction(SizeProbeError):
    """The catalog has no instruction eligible under the active strategy."""


class ProviderError(SizeProbeError):
    """Anything that stops the mutation provider from producing code."""


class ProviderTimeout(ProviderError):
    """The provider did not answer within the request timeout."""


class ProviderUnavailable(ProviderError):
    """Transport failure that persisted through every retry."""


class ExtractionFailed(ProviderError):
    """The provider response contained no recognizable code."""


# ============================================================
# TOOLCHAIN
# ============================================================

class ToolchainMissing(SizeProbeError):
    """A configured compiler or tool binary does not exist. Campaign-fatal."""


class CompileTimeout(SizeProbeError):
    """A compiler invocation exceeded its timeout."""

    def __init__(self, message: str, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class MeasurementFailed(SizeProbeError):
    """Assembling or sizing a successful compile's output failed."""


class SignatureCorrupted(SizeProbeError):
    """The function under test is missing or can no longer be called by the driver."""


class EnvironmentUnstable(SizeProbeError):
    """Repeated compiles of the same input produced different sizes."""


# ============================================================
# DEDUP
# ============================================================

class NotBisectable(SizeProbeError):
    """The revision range does not go from not-exhibiting to exhibiting."""


# ============================================================
# CONFIG / REPORTS
# ============================================================

class ConfigError(SizeProbeError):
    """Configuration validation failure naming the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.detail = message


class ReportError(SizeProbeError):
    """A violation report could not be read or has the wrong schema."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
