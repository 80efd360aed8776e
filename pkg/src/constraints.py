"""
Non-thermodynamic constraint evaluators: Similarity, H-measure, GC content,
Continuity, Hairpin and Self-Dimer.

Similarity and H-measure are scored over every alignment at once. An
alignment is a row of `alignment_index`: for each position of the (padded)
source sequence, the position of the target it faces, or the gap slot.
"""
import functools
import numpy as np
from src.models import ConstraintProfile
from src.exceptions import SetSizeError
from src.seq_core import encode, reverse, reverse_complement, runs
from src.thermo import tm
from src.logs import setup_logging

logger = setup_logging(__name__)

# Source positions beyond the end of a shorter sequence.
SOURCE_GAP = 5
# Target lookups, indexed by base code with the extra slot for the gap.
IDENTITY_LOOKUP = np.array([0, 1, 2, 3, -1], dtype=np.int8)
COMPLEMENT_LOOKUP = np.array([3, 2, 1, 0, -1], dtype=np.int8)


@functools.lru_cache(maxsize=128)
def alignment_index(width, target_length, gap_model):
    """
    Distinct alignments of a target of `target_length` bases against `width`
    source positions.

    Parameters
    ----------
    width : int
        Number of source positions (the longer of both lengths).
    target_length : int
        Length of the target sequence. The value `target_length` marks a gap.
    gap_model : str
        `shift` slides the target across the source with gap padding only.
        `concat` slides `target + gap*g + target` for every g in [0, width-1].

    Returns
    -------
    numpy.ndarray
        Read-only (alignments x width) array of target positions.
    """
    positions = np.arange(width)
    gap = target_length
    rows = []
    if gap_model == "shift":
        for k in range(-width, width + 1):
            j = positions - k
            rows.append(np.where((j >= 0) & (j < target_length), j, gap))
    elif gap_model == "concat":
        for g in range(width):
            total = 2 * target_length + g
            for k in range(-width + 1, total):
                j = positions + k
                first = (j >= 0) & (j < target_length)
                second = (j >= target_length + g) & (j < total)
                rows.append(
                    np.where(first, j, np.where(second, j - target_length - g, gap))
                )
    else:
        raise ValueError(f"Unknown gap model {gap_model!r}")

    index = np.unique(np.array(rows), axis=0)
    index.flags.writeable = False
    return index


def source_codes(x, width):
    codes = encode(x)
    padding = np.full(width - len(codes), SOURCE_GAP, dtype=np.int8)
    return np.concatenate([codes, padding])


def target_codes(y, width, gap_model, complementary):
    """
    Base codes faced by each source position, one row per alignment.

    For H-measure (`complementary=True`) the target is read 3'->5' and
    complemented, so equality with the source means Watson-Crick pairing.
    Gaps map to -1, which equals neither a base nor `SOURCE_GAP`.
    """
    if complementary:
        lookup, codes = COMPLEMENT_LOOKUP, encode(reverse(y))
    else:
        lookup, codes = IDENTITY_LOOKUP, encode(y)
    padded = lookup[np.append(codes, len(lookup) - 1)]
    return padded[alignment_index(width, len(y), gap_model)]


def run_term(matches, cs, run_mode):
    """
    Continuity part of Similarity / H-measure over the last axis of `matches`.

    `start` counts each maximal run once with its full length. `suffix`
    counts, from every position, the length of the run remaining there.
    Only lengths above `cs` contribute.
    """
    remaining = np.zeros(matches.shape, dtype=np.int16)
    run = np.zeros(matches.shape[:-1], dtype=np.int16)
    for col in range(matches.shape[-1] - 1, -1, -1):
        run = (run + 1) * matches[..., col]
        remaining[..., col] = run

    if run_mode == "start":
        starts = matches.copy()
        starts[..., 1:] &= ~matches[..., :-1]
        lengths = np.where(starts, remaining, 0)
    else:
        lengths = remaining
    return np.where(lengths > cs, lengths, 0).sum(axis=-1)


def score_alignments(matches, fraction, cs, run_mode):
    """Discontinuity (strict threshold at fraction*width) plus run term, per alignment."""
    width = matches.shape[-1]
    counts = matches.sum(axis=-1)
    return np.where(counts > fraction * width, counts, 0) + run_term(matches, cs, run_mode)


def similarity_pair(x, y, p):
    width = max(len(x), len(y))
    matches = target_codes(y, width, p.gap_model, False) == source_codes(x, width)
    return int(score_alignments(matches, p.ds, p.cs, p.run_mode).max())


def h_measure_pair(x, y, p):
    """Similarity structure with base equality replaced by complementarity against reversed `y`."""
    width = max(len(x), len(y))
    matches = target_codes(y, width, p.gap_model, True) == source_codes(x, width)
    return int(score_alignments(matches, p.dh, p.ch, p.run_mode).max())


def _row_totals(sequences, pair_fn, p):
    if len(sequences) < 2:
        raise SetSizeError(f"Set-level measures need at least 2 sequences, got {len(sequences)}")
    aggregate = sum if p.row_aggregate == "sum" else max
    rows = [
        aggregate(pair_fn(x, y, p) for j, y in enumerate(sequences) if j != i)
        for i, x in enumerate(sequences)
    ]
    return rows, sum(rows)


def similarity_total(sequences, p):
    """Per-sequence aggregate over the other members, and their grand total."""
    return _row_totals(sequences, similarity_pair, p)


def h_measure_total(sequences, p):
    return _row_totals(sequences, h_measure_pair, p)


def gc_content(s):
    return sum(1 for b in s.bases if b in "GC") / len(s)


def g_count(s):
    return s.bases.count("G")


def continuity(s, threshold):
    return sum(length ** 2 for _, length in runs(s) if length > threshold)


@functools.lru_cache(maxsize=128)
def hairpin_candidates(n, p_min, r_min, mode):
    """
    Every (stem length p, ring length r, stem start i) candidate of an n-mer
    with the 0-based position arrays of the bases it pairs.

    `mirrored` pairs (i+p+1-j, i+p+r+j) across the ring; `literal` pairs
    (i+j, n-j). In both, j runs 1..min(p+i, n-p-i-r) with 1-based positions.
    """
    candidates = []
    for p in range(p_min, (n - r_min) // 2 + 1):
        for r in range(r_min, n - 2 * p + 1):
            for i in range(1, n - 2 * p - r + 1):
                pri = min(p + i, n - p - i - r)
                j = np.arange(1, pri + 1)
                if mode == "mirrored":
                    left, right = i + p + 1 - j, i + p + r + j
                else:
                    left, right = i + j, n - j
                candidates.append((p, r, i, left - 1, right - 1))
    return tuple(candidates)


def hairpin(s, hp):
    codes = encode(s)
    total = 0
    for _, _, _, left, right in hairpin_candidates(len(s), hp.p_min, hp.r_min, hp.mode):
        # A.T and C.G are the only code pairs summing to 3.
        count = int(np.count_nonzero(codes[left] + codes[right] == 3))
        if count > len(left) / 2:
            total += count
    return total


def self_dimer(s):
    """Best count of equal positions between `s` and its shifted reverse complement."""
    codes = encode(s)
    rc = encode(reverse_complement(s))
    n = len(codes)
    best = 0
    for k in range(-n + 1, n):
        if k >= 0:
            overlap = codes[k:] == rc[:n - k]
        else:
            overlap = codes[:n + k] == rc[-k:]
        best = max(best, int(np.count_nonzero(overlap)))
    return best


def profile_set(sequences, params, model, names=None):
    """
    Table of all seven measures, plus the guanine count, for a sequence set.

    Similarity and H-measure are set-relative aggregates; every other column
    depends on the sequence alone.

    Parameters
    ----------
    sequences : list of DnaSequence
    params : ConstraintParams
    model : TmModel
    names : list of str, optional
        Row labels, `S1..Sm` by default.
    """
    names = names or [f"S{i}" for i in range(1, len(sequences) + 1)]
    similarities, sim_total = similarity_total(sequences, params.similarity)
    h_measures, h_total = h_measure_total(sequences, params.similarity)
    logger.debug(f"Profiled {len(sequences)} sequences: similarity {sim_total}, h-measure {h_total}")

    return [
        ConstraintProfile(
            name=name,
            sequence=s.bases,
            similarity=similarity,
            h_measure=h_value,
            continuity=continuity(s, params.continuity_threshold),
            hairpin=hairpin(s, params.hairpin),
            gc=gc_content(s),
            g_count=g_count(s),
            tm=tm(s, model),
            self_dimer=self_dimer(s),
        )
        for name, s, similarity, h_value in zip(names, sequences, similarities, h_measures)
    ]
