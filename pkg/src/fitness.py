"""
Incremental G-score evaluation for genome evolution.

G(a) = agg_j Similarity(a, V_j) + agg_j H-measure(a, V_j) over a frozen set
of opponent genomes V_j, with agg the configured row aggregate.
"""
import functools
import numpy as np
from src.constraints import run_term, target_codes
from src.seq_core import encode


@functools.lru_cache(maxsize=4096)
def genome_targets(genome, width, gap_model):
    """Read-only (measure, alignment, position) targets of one opponent genome."""
    targets = np.stack([target_codes(genome, width, gap_model, complementary) for complementary in (False, True)])
    targets.flags.writeable = False
    return targets


class FitnessContext:
    """
    Scores genomes of one length against frozen opponents.

    The targets faced by every source position are precomputed for both
    measures, so a single-base trial only recomputes one column of matches
    and the run term of the alignments that can still hold a long run.

    Parameters
    ----------
    opponents : list of DnaSequence
        Genomes the candidate is compared with. Empty means G = 0.
    length : int
        Genome length; every opponent must have it.
    params : SimilarityParams
    """

    def __init__(self, opponents, length, params):
        self.params = params
        self.length = length
        self.opponents = list(opponents)
        self.evaluations = 0
        self.current = None
        self._pending = None
        if any(len(v) != length for v in self.opponents):
            raise ValueError(f"Every opponent must have length {length}")

        if self.opponents:
            self._targets = np.stack(
                [genome_targets(v, length, params.gap_model) for v in self.opponents], axis=1
            )  # (measure, opponent, alignment, position)
        self._thresholds = np.array([params.ds * length, params.dh * length]).reshape(2, 1, 1)
        self._run_lengths = (params.cs, params.ch)
        self._aggregate = np.sum if params.row_aggregate == "sum" else np.max

    def _total(self, pair_scores):
        return int(self._aggregate(pair_scores, axis=-1).sum())

    def _pair_scores(self, matches, counts, position=None, column=None):
        """Best alignment score per (measure, opponent)."""
        scores = np.where(counts > self._thresholds, counts, 0)
        for m, cs in enumerate(self._run_lengths):
            candidates = counts[m] > cs
            if not candidates.any():
                continue
            rows = matches[m][candidates]
            if position is not None:
                rows[:, position] = column[m][candidates]
            scores[m][candidates] += run_term(rows, cs, self.params.run_mode)
        return scores.max(axis=-1)

    def evaluate(self, genome):
        """G of `genome`, without touching the incremental state."""
        self.evaluations += 1
        if not self.opponents:
            return 0
        matches = self._targets == encode(genome)
        return self._total(self._pair_scores(matches, matches.sum(axis=-1)))

    def reset(self, genome):
        """Make `genome` the current genome and return its G."""
        self.evaluations += 1
        self._codes = encode(genome).copy()
        self._pending = None
        if not self.opponents:
            self.current = 0
            return 0
        self._matches = self._targets == self._codes
        self._counts = self._matches.sum(axis=-1)
        self.current = self._total(self._pair_scores(self._matches, self._counts))
        return self.current

    def propose(self, position, code):
        """G of the current genome with base `code` at `position`; call `accept` to keep it."""
        self.evaluations += 1
        self._pending = (position, code)
        if not self.opponents:
            return 0
        column = self._targets[..., position] == code
        counts = self._counts - self._matches[..., position] + column
        self._pending = (position, code, column, counts)
        return self._total(self._pair_scores(self._matches, counts, position, column))

    def accept(self, score):
        if self.opponents:
            position, code, column, counts = self._pending
            self._matches[..., position] = column
            self._counts = counts
        else:
            position, code = self._pending
        self._codes[position] = code
        self._pending = None
        self.current = score

    @property
    def codes(self):
        return self._codes.copy()
