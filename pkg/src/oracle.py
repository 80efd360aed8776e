"""
Naive reference implementations of the constraint evaluators and a
random-search baseline for the epidemic.

The reference evaluators enumerate every alignment as literal symbol lists
and scan them character by character. They must not reuse the alignment
code of `src.constraints`, which they exist to check.
"""
import time
from typing import NamedTuple
import numpy as np
from src.logs import setup_logging
from src.models import DnaSequence, HairpinParams, OracleMismatch, OracleReport, SimilarityParams
from src.settings import BASES, COMPLEMENT, GAP, ORACLE_MAX_LENGTH
from src.seq_core import random_genome
from src.fitness import FitnessContext
from src.svs_engine import design_result, screen_library
from src import constraints

logger = setup_logging(__name__)

HAIRPIN_MAX_LENGTH = 40


class HairpinTerm(NamedTuple):
    p: int
    r: int
    i: int
    pri: int
    count: int
    contributes: bool


def _check_scale(*sequences, limit=ORACLE_MAX_LENGTH):
    for s in sequences:
        if len(s) > limit:
            raise ValueError(f"Oracle evaluators accept at most {limit} bases, got {len(s)}")


def _alignments(x, y, gap_model):
    """Yield (source symbols, target symbols) for every alignment of y against x."""
    width = max(len(x), len(y))
    source = list(x) + [GAP] * (width - len(x))
    if gap_model == "shift":
        for k in range(-width, width + 1):
            target = []
            for i in range(1, width + 1):
                j = i - k
                target.append(y[j - 1] if 1 <= j <= len(y) else GAP)
            yield source, target
        return
    for g in range(width):
        doubled = list(y) + [GAP] * g + list(y)
        for k in range(-width, len(doubled) + 1):
            target = []
            for i in range(width):
                j = i + k
                target.append(doubled[j] if 0 <= j < len(doubled) else GAP)
            yield source, target


def _score(flags, fraction, cs, run_mode):
    width = len(flags)
    count = sum(flags)
    total = count if count > fraction * width else 0
    if run_mode == "start":
        run = 0
        for flag in flags + [False]:
            if flag:
                run += 1
                continue
            if run > cs:
                total += run
            run = 0
    else:
        for i in range(width):
            length = 0
            while i + length < width and flags[i + length]:
                length += 1
            if length > cs:
                total += length
    return total


def naive_similarity_pair(x, y, p):
    _check_scale(x, y)
    best = 0
    for source, target in _alignments(x.bases, y.bases, p.gap_model):
        flags = [a != GAP and b != GAP and a == b for a, b in zip(source, target)]
        best = max(best, _score(flags, p.ds, p.cs, p.run_mode))
    return best


def naive_h_measure_pair(x, y, p):
    _check_scale(x, y)
    best = 0
    for source, target in _alignments(x.bases, y.bases[::-1], p.gap_model):
        flags = [a != GAP and b != GAP and COMPLEMENT[a] == b for a, b in zip(source, target)]
        best = max(best, _score(flags, p.dh, p.ch, p.run_mode))
    return best


def naive_self_dimer(x):
    """max over k in (-n, n) of n - |k| - Ham(x, shifted reverse complement of x)."""
    _check_scale(x)
    bases = x.bases
    n = len(bases)
    reverse_complement = "".join(COMPLEMENT[b] for b in reversed(bases))
    best = 0
    for k in range(-n + 1, n):
        hamming = 0
        for i in range(1, n + 1):
            j = i - k
            if 1 <= j <= n and bases[i - 1] != reverse_complement[j - 1]:
                hamming += 1
        best = max(best, n - abs(k) - hamming)
    return best


def enumerate_hairpins(x, hp):
    """Every (p, r, i) hairpin candidate with its complementary pair count."""
    _check_scale(x, limit=HAIRPIN_MAX_LENGTH)
    bases = x.bases
    n = len(bases)
    terms = []
    for p in range(hp.p_min, (n - hp.r_min) // 2 + 1):
        for r in range(hp.r_min, n - 2 * p + 1):
            for i in range(1, n - 2 * p - r + 1):
                pri = min(p + i, n - p - i - r)
                count = 0
                for j in range(1, pri + 1):
                    if hp.mode == "mirrored":
                        left, right = i + p + 1 - j, i + p + r + j
                    else:
                        left, right = i + j, n - j
                    if COMPLEMENT[bases[left - 1]] == bases[right - 1]:
                        count += 1
                terms.append(HairpinTerm(p, r, i, pri, count, count > pri / 2))
    return terms


def naive_hairpin(x, hp):
    return sum(term.count for term in enumerate_hairpins(x, hp) if term.contributes)


# ======================================================
# =====           EQUIVALENCE REPORTS              =====
# ======================================================

def random_sequence(rng, min_length, max_length):
    length = int(rng.integers(min_length, max_length + 1))
    return DnaSequence(bases="".join(BASES[c] for c in rng.integers(0, 4, size=length)))


def compare(name, cases, fast, naive):
    """
    Run `fast` and `naive` on every case (a tuple of arguments).

    Returns
    -------
    OracleReport
    """
    report = OracleReport(name=name)
    for args in cases:
        fast_value, naive_value = fast(*args), naive(*args)
        report.cases += 1
        if fast_value != naive_value:
            report.mismatches.append(OracleMismatch(
                inputs=[a.bases for a in args if isinstance(a, DnaSequence)],
                fast=fast_value,
                oracle=naive_value,
            ))
    if report.passed:
        logger.info(f"Oracle check {name}: {report.cases} cases, no mismatch")
    else:
        logger.warning(f"Oracle check {name}: {len(report.mismatches)} mismatches out of {report.cases}")
    return report


def run_oracle_checks(cases=200, seed=1, length_range=(8, 30), similarity=None, hairpin=None):
    """
    Compare every fast evaluator with its naive counterpart on random inputs,
    under both run modes, both gap models and both hairpin indexings.

    Parameters
    ----------
    cases : int, default = 200
        Random pairs (or sequences) per comparison.
    seed : int, default = 1
    length_range : tuple of int, default = (8, 30)
    similarity : SimilarityParams, optional
        Thresholds to use; the modes are overridden per comparison.
    hairpin : HairpinParams, optional

    Returns
    -------
    reports : list of OracleReport
    """
    start_time = time.time()
    rng = np.random.default_rng(seed)
    similarity = similarity or SimilarityParams()
    hairpin = hairpin or HairpinParams()
    low, high = length_range
    pairs = [(random_sequence(rng, low, high), random_sequence(rng, low, high)) for _ in range(cases)]
    singles = [random_sequence(rng, low, min(high, HAIRPIN_MAX_LENGTH)) for _ in range(cases)]

    reports = []
    for gap_model in ("concat", "shift"):
        for run_mode in ("start", "suffix"):
            p = similarity.model_copy(update={"gap_model": gap_model, "run_mode": run_mode})
            reports.append(compare(
                f"similarity[{gap_model},{run_mode}]",
                [(x, y, p) for x, y in pairs],
                constraints.similarity_pair,
                naive_similarity_pair,
            ))
            reports.append(compare(
                f"h_measure[{gap_model},{run_mode}]",
                [(x, y, p) for x, y in pairs],
                constraints.h_measure_pair,
                naive_h_measure_pair,
            ))
    reports.append(compare("self_dimer", [(x,) for x in singles], constraints.self_dimer, naive_self_dimer))
    for mode in ("mirrored", "literal"):
        hp = hairpin.model_copy(update={"mode": mode})
        reports.append(compare(
            f"hairpin[{mode}]", [(x, hp) for x in singles], constraints.hairpin, naive_hairpin
        ))
    logger.info(f"Oracle checks completed in {time.time() - start_time:.3f} secs.")
    return reports


def format_reports(reports):
    lines = []
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        lines.append(f"{status} {report.name}: {report.cases} cases, {len(report.mismatches)} mismatches")
        for mismatch in report.mismatches[:10]:
            lines.append(f"    {' / '.join(mismatch.inputs)}: fast={mismatch.fast} oracle={mismatch.oracle}")
    return "\n".join(lines) + "\n"


# ======================================================
# =====              RANDOM SEARCH                 =====
# ======================================================

def mean_pairwise_score(sequences, p):
    """Mean Similarity + H-measure over all ordered pairs of distinct members."""
    if len(sequences) < 2:
        return float("nan")
    scores = [
        constraints.similarity_pair(x, y, p) + constraints.h_measure_pair(x, y, p)
        for i, x in enumerate(sequences)
        for j, y in enumerate(sequences)
        if i != j
    ]
    return float(np.mean(scores))


def random_search_baseline(params, constraint_params, model, criteria, budget=None):
    """
    Random-search comparison floor for the epidemic.

    Keeps `num_virus` random GC-balanced genomes. Round-robin, each member is
    challenged by a fresh random genome that replaces it when its G (against
    the other members) is not higher. Stops after `budget` G evaluations and
    screens the members exactly like an epidemic library.

    Parameters
    ----------
    params : SvsParams
        Uses `seed`, `num_virus`, `sequence_length`, and, for the default
        budget, `evolutions * epidemic_time * num_virus`.
    constraint_params : ConstraintParams
    model : TmModel
    criteria : ScreenCriteria
    budget : int, optional
        G evaluations to spend, e.g. those of an epidemic run.

    Returns
    -------
    DesignResult
    """
    start_time = time.time()
    rng = np.random.default_rng(params.seed)
    n = params.sequence_length
    p = constraint_params.similarity
    if budget is None:
        budget = params.evolutions * params.epidemic_time * params.num_virus
    members = [random_genome(n, rng) for _ in range(params.num_virus)]

    evaluations = 0
    member = 0
    while evaluations < budget:
        context = FitnessContext(members[:member] + members[member + 1:], n, p)
        current = context.evaluate(members[member])
        candidate = random_genome(n, rng)
        if context.evaluate(candidate) <= current:
            members[member] = candidate
        evaluations += context.evaluations
        member = (member + 1) % len(members)

    kept, shortfall = screen_library(members, criteria, constraint_params, model)
    logger.info(f"Random search completed in {time.time() - start_time:.3f} secs ({evaluations} G evaluations).")
    return design_result(
        "random_search",
        params.seed,
        kept,
        shortfall,
        constraint_params,
        model,
        evaluations=evaluations,
        termination="budget",
    )
