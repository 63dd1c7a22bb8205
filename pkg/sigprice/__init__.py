"""
sigprice: truncated path signatures, signature correlators and
correlator-expansion pricing of path-dependent payoffs.
"""

from sigprice.algebra import WeightedWord, concat, fock_norm_sq, shuffle, shuffle_power
from sigprice.signature import (
    LiftKind,
    SampledPath,
    TruncatedSignature,
    chen_combine,
    decay_check,
    ito_lift,
    lift,
    pair,
    stratonovich_lift,
    time_enhance,
)

__version__ = "0.1.0"

__all__ = [
    "WeightedWord",
    "concat",
    "shuffle",
    "shuffle_power",
    "fock_norm_sq",
    "LiftKind",
    "SampledPath",
    "TruncatedSignature",
    "chen_combine",
    "decay_check",
    "ito_lift",
    "lift",
    "pair",
    "stratonovich_lift",
    "time_enhance",
]
