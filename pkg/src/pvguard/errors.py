"""Exception types raised across the package.

Every error that a caller is expected to handle has its own class; all of
them derive from :class:`PvGuardError` so batch drivers can catch the lot.
"""


class PvGuardError(Exception):
    """Base class for all package errors."""


# --- document ingestion ---------------------------------------------------

class MalformedDocument(PvGuardError):
    """Input bytes are not syntactically valid for the requested format."""


class UnsupportedFormat(PvGuardError):
    """Requested parse format is not one of the supported formats."""


class MissingRequiredField(PvGuardError):
    """Document lacks case_id or language."""


# --- lexicon / matching ----------------------------------------------------

class UnknownLanguage(PvGuardError):
    """Language not in the lexicon's declared closed language set."""


class UnknownId(PvGuardError):
    """Canonical id not present in the lexicon."""


class LexiconFormatError(PvGuardError):
    """Lexicon file violates the TSV format or a lexicon invariant."""


# --- guardrails ------------------------------------------------------------

class PreconditionViolation(PvGuardError):
    """Caller violated a documented precondition."""


class EmptyInput(PvGuardError):
    """Operation requires a non-empty input."""


class DimensionMismatch(PvGuardError):
    """Vectors of differing dimension where one dimension is required."""


class DuplicateId(PvGuardError):
    """Duplicate doc_id while building an embedding cache."""


class KTooLarge(PvGuardError):
    """Requested neighbor count exceeds the cache size."""


class InvalidFpr(PvGuardError):
    """Target false-positive rate outside the open interval (0, 1)."""


class EmbeddingFailed(PvGuardError):
    """Embedder failed for a specific document."""

    def __init__(self, doc_id: str, message: str):
        super().__init__(f"embedding failed for {doc_id!r}: {message}")
        self.doc_id = doc_id


class CacheFormatError(PvGuardError):
    """Embedding cache file is corrupt or has an unsupported version."""


class InvalidDistribution(PvGuardError):
    """Token probability distribution has negative mass or does not sum to 1."""


class LengthMismatch(PvGuardError):
    """Parallel lists have different lengths."""


class EmptyStratum(PvGuardError):
    """A stratum passed to the rank test has no observations."""


# --- metrics ----------------------------------------------------------------

class EmptyReferences(PvGuardError):
    """BLEU called without references."""


class InvalidProbability(PvGuardError):
    """Probability outside (0, 1]."""


class DegenerateMarginals(PvGuardError):
    """Expected weighted disagreement is zero; kappa undefined."""


class OneClassOnly(PvGuardError):
    """AUROC needs at least one positive and one negative."""


# --- model adapter -----------------------------------------------------------

class AdapterUnavailable(PvGuardError):
    """Adapter cannot be reached (connect failure or timeout after retries)."""


class GenerationFailed(PvGuardError):
    """Adapter accepted the request but could not produce a generation."""


class ProtocolError(PvGuardError):
    """Inference server response violates the wire schema."""


# --- pipeline / review -------------------------------------------------------

class SpanOutOfBounds(PvGuardError):
    """Annotation span exceeds the bounds of the text it annotates."""


class UnknownCase(PvGuardError):
    """No review case stored under the given case_id."""


class DuplicateReviewer(PvGuardError):
    """Reviewer already submitted an assessment for this case."""


class CaseClosed(PvGuardError):
    """Case no longer accepts assessments."""


class InsufficientData(PvGuardError):
    """Not enough dual-reviewed cases to compute agreement."""


class FixtureMissing(PvGuardError):
    """Assessment suite cannot find a required fixture."""


class ConfigError(PvGuardError):
    """Pipeline configuration is invalid."""
