"""Exception hierarchy shared by all modules."""


class RenormError(Exception):
    """Base class for domain errors (CLI exit status 1)."""

    code = "domain-error"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class ParameterOutOfRange(RenormError):
    code = "parameter-out-of-range"


class NonFiniteInput(RenormError):
    code = "non-finite-input"


class OrbitEscape(RenormError):
    code = "orbit-escape"


class NoOrientationReversingFixedPoint(RenormError):
    code = "no-orientation-reversing-fixed-point"


class EntryNotFound(RenormError):
    code = "entry-not-found"


class PullbackDegenerate(RenormError):
    code = "pullback-degenerate"


class PrecisionExhausted(RenormError):
    code = "precision-exhausted"


class NotRenormalizable(RenormError):
    code = "not-renormalizable"


class ValidationFailure(RenormError):
    code = "validation-failure"


class NoSuccessor(RenormError):
    code = "no-successor-within-horizon"


class NuNotFound(RenormError):
    code = "nu-not-found-within-horizon"


class OrderAmbiguity(RenormError):
    code = "order-ambiguity"


class InvalidCombinatorics(RenormError):
    code = "invalid-combinatorics"


class CombinatorialExplosion(RenormError):
    code = "combinatorial-explosion"


class NMismatch(RenormError):
    code = "N-mismatch"


class NotFoundInBox(RenormError):
    code = "not-found-in-box"


class VerificationMismatch(RenormError):
    code = "verification-mismatch"


class WordMismatch(RenormError):
    code = "word-mismatch"


class DisconnectedJulia(RenormError):
    code = "disconnected-julia"


class DomainsNotFound(RenormError):
    code = "domains-not-found"


class BoundaryContinuationFailure(RenormError):
    code = "boundary-continuation-failure"


class ParseError(ValueError):
    """Malformed textual input (canonical strings, word specs); CLI exit 2."""


class ConfigError(ValueError):
    """Invalid run configuration; CLI exit 2."""
