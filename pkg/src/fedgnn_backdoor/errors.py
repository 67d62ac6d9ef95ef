"""Exception hierarchy. Every structured failure mode gets its own class so
the CLI can map them to distinct message prefixes and exit codes."""


class SimError(Exception):
    """Base class for all structured errors raised by this package."""

    prefix = "error"


class ParseError(SimError):
    """A dataset file could not be parsed; names the file and line."""

    prefix = "parse error"

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class GenerationError(SimError):
    """Synthetic dataset generation could not fill a class bucket."""

    prefix = "generation error"


class ConfigError(SimError):
    """Invalid configuration value or file."""

    prefix = "config error"


class LayoutError(SimError):
    """Parameter-vector layouts do not match."""

    prefix = "layout error"


class InjectionError(SimError):
    """Trigger does not fit into the target graph."""

    prefix = "injection error"


class PoisoningError(SimError):
    """A malicious client has no graphs eligible for poisoning."""

    prefix = "poisoning error"


class EvaluationError(SimError):
    """An evaluation set is empty."""

    prefix = "evaluation error"


class DefenseError(SimError):
    """A defense produced an unusable outcome (e.g. all-zero weights)."""

    prefix = "defense error"


class FederationError(SimError):
    """A client failed during a federation round."""

    prefix = "federation error"


class UndefinedCorrelationError(SimError):
    """Pearson correlation requested on a zero-variance series."""

    prefix = "metric error"
