"""
Exception hierarchy for sigprice.

Input-shaped problems subclass ValueError, numerical failures subclass
RuntimeError, so the CLI can map them onto exit codes 2 and 1.
"""


class SigPriceError(Exception):
    """Base class for every error raised by sigprice."""


class AlphabetMismatchError(SigPriceError, ValueError):
    """Two weighted words (or a word and a signature) use different alphabets."""


class WordParseError(SigPriceError, ValueError):
    """A word or weighted word could not be parsed from text."""


class DepthError(SigPriceError, ValueError):
    """A word is longer than the signature depth, or the depth is unusable."""


class PathError(SigPriceError, ValueError):
    """A sampled path violates its invariants."""


class LiftError(SigPriceError, ValueError):
    """An operation needs a geometric (Stratonovich) lift but got another one."""


class ScenarioError(SigPriceError, ValueError):
    """A scenario file or CSV input could not be read or validated."""


class SimulationError(SigPriceError, RuntimeError):
    """A process could not be simulated (e.g. Cholesky failure)."""


class QuadratureError(SigPriceError, RuntimeError):
    """Numerical integration did not converge to the requested tolerance."""
