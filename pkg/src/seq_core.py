"""
DNA alphabet utilities shared by every evaluator.

Sequences are `DnaSequence` value objects; nothing here mutates its input.
"""
import itertools
import numpy as np
from pydantic import ValidationError
from src.models import DnaSequence
from src.settings import BASES, COMPLEMENT, GAP
from src.exceptions import SequenceParseError

# Integer codes used by the vectorised evaluators: complement(code) == 3 - code.
BASE_CODES = {"A": 0, "C": 1, "G": 2, "T": 3}


def parse_sequence(text, path=None, line=None):
    """
    Parse a raw base string into a `DnaSequence`.

    Whitespace anywhere in `text` is ignored and lowercase bases are
    normalized to uppercase.

    Parameters
    ----------
    text : str
        Raw sequence text.
    path, line : optional
        Source location, only used to enrich the error message.

    Raises
    ------
    SequenceParseError
        On an empty sequence or the first character outside the alphabet
        (1-based `position` in `text`).
    """
    bases = []
    for position, char in enumerate(text, start=1):
        if char.isspace():
            continue
        upper = char.upper()
        if upper not in BASES:
            raise SequenceParseError(
                f"Invalid character {char!r}", position=position, path=path, line=line
            )
        bases.append(upper)
    if not bases:
        raise SequenceParseError("Empty sequence", path=path, line=line)
    try:
        return DnaSequence(bases="".join(bases))
    except ValidationError as e:  # unreachable after the scan above
        raise SequenceParseError(str(e), path=path, line=line) from e


def render(s):
    """Plain uppercase base string, the inverse of `parse_sequence`."""
    return s.bases


def complement_base(base):
    return COMPLEMENT[base]


def reverse(s):
    return DnaSequence(bases=s.bases[::-1])


def reverse_complement(s):
    """Position i of the result is the complement of position n+1-i of `s`."""
    return DnaSequence(bases="".join(complement_base(b) for b in reversed(s.bases)))


def runs(s):
    """Maximal runs of identical bases, in order, as (base, length) tuples."""
    return [(base, len(list(group))) for base, group in itertools.groupby(s.bases)]


def aligned_pairs(x, y, k):
    """
    Pair every position of `x` with the base of `y` shifted by `k`.

    Position i (1-based) pairs x_i with y_{i-k} when that index exists and with
    the gap symbol otherwise. Sequences of unequal length are padded with gaps
    to the longer length N, and |k| <= N is required.
    """
    width = max(len(x), len(y))
    if abs(k) > width:
        raise ValueError(f"Shift {k} outside [-{width}, {width}]")
    pairs = []
    for i in range(1, width + 1):
        left = x.bases[i - 1] if i <= len(x) else GAP
        j = i - k
        right = y.bases[j - 1] if 1 <= j <= len(y) else GAP
        pairs.append((left, right))
    return pairs


def encode(s):
    """Integer code array (A=0, C=1, G=2, T=3) of a sequence or base string."""
    bases = s.bases if isinstance(s, DnaSequence) else s
    return np.fromiter((BASE_CODES[b] for b in bases), dtype=np.int8, count=len(bases))


def decode(codes):
    return DnaSequence(bases="".join(BASES[c] for c in codes))


def is_gc_balanced(s):
    """Exactly half G/C for even lengths, within half a base for odd lengths."""
    n = len(s)
    gc = sum(1 for b in s.bases if b in "GC")
    return abs(2 * gc - n) <= (n % 2)


def random_genome(length, rng, gc_balanced=True):
    """
    Uniform random genome drawn from `rng` (a numpy Generator).

    With `gc_balanced` the draw is rejection-sampled until the G/C count is
    balanced, so all randomness still comes from `rng`.
    """
    while True:
        codes = rng.integers(0, 4, size=length)
        genome = decode(codes)
        if not gc_balanced or is_gc_balanced(genome):
            return genome
