"""
Words over the alphabet {1..d} and weighted words (the free algebra R<A>).

A ``Word`` is a plain tuple of letters; the empty tuple is the empty word.
``WeightedWord`` is an immutable sparse linear combination of words that
carries its alphabet size, so mixing raw-path words with time-enhanced words
is caught on every binary operation.

Text grammar (used by the CLI and scenario files):
    word           e | 21 | 2.1.11        ('e' is the empty word; dots for d > 9)
    weighted word  2*e + 3*1 - 0.5*12     (a bare word means coefficient 1)
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, Mapping, Tuple, Union

from sigprice.errors import AlphabetMismatchError, WordParseError

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]
EMPTY_WORD: Word = ()

TermsLike = Union[Mapping[Word, float], Iterable[Tuple[Word, float]]]


def graded_lex_key(word: Word) -> Tuple[int, Word]:
    """Sort key: length first, then lexicographic."""
    return len(word), word


def check_word(word: Word, alphabet_size: int) -> Word:
    word = tuple(int(letter) for letter in word)
    for letter in word:
        if not 1 <= letter <= alphabet_size:
            raise AlphabetMismatchError(
                f"Letter {letter} of word {format_word(word, alphabet_size)} "
                f"is outside the alphabet {{1..{alphabet_size}}}"
            )
    return word


class WeightedWord:
    """
    Sparse linear combination of words with real coefficients.

    Zero coefficients are never stored and terms are kept in graded-lex
    order, so equal values compare equal and serialize identically.
    """

    __slots__ = ("alphabet_size", "_terms")

    def __init__(self, alphabet_size: int, terms: TermsLike = ()):
        if alphabet_size < 1:
            raise ValueError(f"alphabet_size must be >= 1, got {alphabet_size}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: Dict[Word, float] = {}
        for word, coef in items:
            word = check_word(word, alphabet_size)
            acc[word] = acc.get(word, 0.0) + float(coef)
        ordered = {w: acc[w] for w in sorted(acc, key=graded_lex_key) if acc[w] != 0.0}
        self.alphabet_size = alphabet_size
        self._terms = MappingProxyType(ordered)

    # ---------- constructors ----------

    @classmethod
    def zero(cls, alphabet_size: int) -> "WeightedWord":
        return cls(alphabet_size)

    @classmethod
    def unit(cls, alphabet_size: int, coef: float = 1.0) -> "WeightedWord":
        """``coef`` times the empty word."""
        return cls(alphabet_size, {EMPTY_WORD: coef})

    @classmethod
    def word(cls, alphabet_size: int, *letters: int, coef: float = 1.0) -> "WeightedWord":
        return cls(alphabet_size, {tuple(letters): coef})

    @classmethod
    def parse(cls, text: str, alphabet_size: int) -> "WeightedWord":
        return parse_weighted_word(text, alphabet_size)

    # ---------- accessors ----------

    @property
    def terms(self) -> Mapping[Word, float]:
        return self._terms

    def items(self) -> Iterator[Tuple[Word, float]]:
        return iter(self._terms.items())

    def words(self) -> Tuple[Word, ...]:
        return tuple(self._terms)

    def coefficient(self, word: Word) -> float:
        return self._terms.get(tuple(word), 0.0)

    def is_zero(self) -> bool:
        return not self._terms

    def max_length(self) -> int:
        """Length of the longest word (0 for the zero element)."""
        return max((len(w) for w in self._terms), default=0)

    # ---------- vector space ----------

    def _check_same_alphabet(self, other: "WeightedWord") -> None:
        if not isinstance(other, WeightedWord):
            raise TypeError(f"expected WeightedWord, got {type(other).__name__}")
        if other.alphabet_size != self.alphabet_size:
            raise AlphabetMismatchError(
                f"alphabet sizes differ: {self.alphabet_size} vs {other.alphabet_size}"
            )

    def __add__(self, other: "WeightedWord") -> "WeightedWord":
        self._check_same_alphabet(other)
        return WeightedWord(self.alphabet_size, [*self._terms.items(), *other._terms.items()])

    def __neg__(self) -> "WeightedWord":
        return WeightedWord(self.alphabet_size, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "WeightedWord") -> "WeightedWord":
        return self + (-other)

    def __mul__(self, scalar: float) -> "WeightedWord":
        if isinstance(scalar, WeightedWord):
            return NotImplemented
        return WeightedWord(self.alphabet_size, {w: c * scalar for w, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedWord):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and dict(self._terms) == dict(other._terms)

    def __hash__(self) -> int:
        return hash((self.alphabet_size, tuple(self._terms.items())))

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return f"WeightedWord(d={self.alphabet_size}, {format_weighted_word(self)!r})"

    def __str__(self) -> str:
        return format_weighted_word(self)


# ---------- products ----------

def concat(left: WeightedWord, right: WeightedWord) -> WeightedWord:
    """Bilinear extension of word concatenation."""
    left._check_same_alphabet(right)
    out: Counter = Counter()
    for u, a in left.items():
        for v, b in right.items():
            out[u + v] += a * b
    return WeightedWord(left.alphabet_size, out)


@lru_cache(maxsize=65536)
def _shuffle_words(u: Word, v: Word) -> Tuple[Tuple[Word, int], ...]:
    # (ua) sh (vb) = (u sh vb)a + (ua sh v)b
    if not u:
        return ((v, 1),)
    if not v:
        return ((u, 1),)
    out: Counter = Counter()
    for w, count in _shuffle_words(u[:-1], v):
        out[w + u[-1:]] += count
    for w, count in _shuffle_words(u, v[:-1]):
        out[w + v[-1:]] += count
    return tuple(out.items())


def shuffle(left: WeightedWord, right: WeightedWord) -> WeightedWord:
    """Bilinear extension of the shuffle product of words."""
    left._check_same_alphabet(right)
    out: Counter = Counter()
    for u, a in left.items():
        for v, b in right.items():
            for w, count in _shuffle_words(u, v):
                out[w] += a * b * count
    return WeightedWord(left.alphabet_size, out)


def shuffle_power(pi: WeightedWord, n: int) -> WeightedWord:
    """pi_0 = e, pi_n = shuffle(pi_{n-1}, pi)."""
    if n < 0:
        raise ValueError(f"shuffle power must be >= 0, got {n}")
    result = WeightedWord.unit(pi.alphabet_size)
    for _ in range(n):
        result = shuffle(result, pi)
    return result


def fock_norm_sq(pi: WeightedWord) -> float:
    """Squared norm in the Fock space with orthonormal word basis."""
    return float(sum(c * c for c in pi.terms.values()))


# ---------- text grammar ----------

_COEF = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_WORD = r"(?:e|\d+(?:\.\d+)*)"
_TERM = re.compile(rf"\s*(?P<sign>[+-])?\s*(?:(?P<coef>{_COEF})\s*\*\s*)?(?P<word>{_WORD})\s*")


def parse_word(text: str, alphabet_size: int) -> Word:
    text = text.strip()
    if text in ("", "e"):
        return EMPTY_WORD
    if not re.fullmatch(r"\d+(?:\.\d+)*", text):
        raise WordParseError(f"Cannot parse word {text!r}")
    if "." in text or alphabet_size > 9:
        letters = tuple(int(part) for part in text.split("."))
    else:
        letters = tuple(int(ch) for ch in text)
    try:
        return check_word(letters, alphabet_size)
    except AlphabetMismatchError as e:
        raise WordParseError(f"Word {text!r}: {e}") from e


def format_word(word: Word, alphabet_size: int) -> str:
    if not word:
        return "e"
    if alphabet_size > 9:
        return ".".join(str(letter) for letter in word)
    return "".join(str(letter) for letter in word)


def parse_weighted_word(text: str, alphabet_size: int) -> WeightedWord:
    """Parse ``coef*word`` terms joined by ``+``/``-``."""
    if not text or not text.strip():
        raise WordParseError("Empty weighted word")
    terms = []
    pos = 0
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos:
            raise WordParseError(f"Cannot parse weighted word {text!r} at position {pos}")
        if terms and match.group("sign") is None:
            raise WordParseError(f"Missing '+' or '-' before position {match.start()} in {text!r}")
        coef = float(match.group("coef")) if match.group("coef") else 1.0
        if match.group("sign") == "-":
            coef = -coef
        terms.append((parse_word(match.group("word"), alphabet_size), coef))
        pos = match.end()
    return WeightedWord(alphabet_size, terms)


def format_weighted_word(pi: WeightedWord) -> str:
    if pi.is_zero():
        return "0*e"
    parts = []
    for i, (word, coef) in enumerate(pi.items()):
        sign = "-" if coef < 0 else "+"
        body = f"{abs(coef)!r}*{format_word(word, pi.alphabet_size)}"
        if i == 0:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)
