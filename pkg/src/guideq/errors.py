"""Exception types raised across the engine.

Every error the library raises on purpose derives from GuideqError, so
callers can catch one base class at a process boundary (CLI, HTTP) and
map everything else to a bug.
"""


class GuideqError(Exception):
    """Base class for all errors raised by guideq."""


class DimensionError(GuideqError, ValueError):
    """Vector lengths do not agree with the concept count K."""


class DomainError(GuideqError, ValueError):
    """An input value is outside the mathematical domain (NaN/inf, negative where forbidden)."""


class ArgumentError(GuideqError, ValueError):
    """A structurally invalid argument: empty collection, bad enum value, out-of-range count."""


class NumericError(GuideqError, ArithmeticError):
    """A non-finite value appeared mid-optimization; message carries the step index."""


class UnknownConceptError(GuideqError, LookupError):
    """A concept id was referenced that the concept set does not contain."""


class BankValidationError(GuideqError, ValueError):
    """An item-bank file violates the schema; message names the field and item id."""


class ConflictError(GuideqError, ValueError):
    """Duplicate ids or dangling references inside an item bank."""


class DegenerateCorpusError(GuideqError, ValueError):
    """Corpus statistics cannot be formed (zero length spread)."""


class StageError(GuideqError, RuntimeError):
    """A dataset-pipeline stage failed; message carries the retry count."""


class LlmParseError(GuideqError, ValueError):
    """Model output could not be parsed; the raw text is kept on .raw."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class GatewayError(GuideqError, RuntimeError):
    """The chat-completion transport failed after all retries."""


class ConfigurationError(GuideqError, RuntimeError):
    """Gateway misconfiguration (missing key, bad endpoint). Never includes the key value."""


class ScriptExhaustedError(GatewayError):
    """The mock script has no reply left for this request."""


class TemplateError(GuideqError, ValueError):
    """A prompt template is missing a required slot or was given empty content."""


class EmptyCandidateError(GuideqError, LookupError):
    """No text fragment exists for the requested focus concept."""


class RestoreError(GuideqError, ValueError):
    """A persisted session file is corrupt; message names the failing field."""


class SessionBusyError(GuideqError, RuntimeError):
    """A second turn was requested while one is already running for the session."""


class SessionTerminatedError(GuideqError, RuntimeError):
    """A turn was requested on a session that has already exited."""
