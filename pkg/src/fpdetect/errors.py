"""Exception hierarchy shared across the engine.

Every error carries a short category string so the CLI can map failures to
stable exit codes and diagnostics.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ConfigurationError(EngineError):
    """Invalid configuration: bad granularity spec, thresholds, profile, ..."""

    category = "config"


class ContractError(EngineError):
    """A documented precondition was violated by the caller."""

    category = "contract"


class FormatError(EngineError):
    """Malformed or version-incompatible persisted data."""

    category = "format"


class ScoringError(EngineError):
    """Scoring is impossible, e.g. no profile exists for an entity."""

    category = "scoring"


class EvaluationError(EngineError):
    """Evaluation is undefined for the given inputs."""

    category = "evaluation"
