"""
Static Virus Spread: an epidemic over fixed hosts whose viruses are DNA
genomes. Infected hosts evolve their genome by accept/reject mutation, spread
it to susceptible neighbours, die, self-cure or become immune. Every genome
the viruses carried along the way is archived, and the archive (or only the
final library) is screened into a sequence set.
"""
import time
import numpy as np
from tqdm import tqdm
from src.logs import setup_logging
from src.data import save_checkpoint
from src.fitness import FitnessContext
from src.constraints import (
    continuity,
    hairpin,
    h_measure_pair,
    profile_set,
    self_dimer,
    similarity_pair,
)
from src.thermo import tm
from src.seq_core import decode, encode, is_gc_balanced, random_genome
from src.exceptions import (
    ConfigError,
    EmptyLibraryError,
    EpidemicFinishedError,
    SvsError,
)
from src.models import (
    DesignResult,
    DnaSequence,
    EpidemicState,
    HistoryRecord,
    Host,
    HostState,
    ShortfallReport,
    Virus,
)
from src.settings import INFECTIOUSNESS_OFFSET

logger = setup_logging(__name__)


# ======================================================
# =====            INITIALIZATION                  =====
# ======================================================

def _sample_timer(rng, timer_range):
    low, high = timer_range
    return int(rng.integers(low, high + 1))


def init_state(params):
    """
    Place `num_host` susceptible hosts uniformly in the space and generate
    `num_virus` GC-balanced genomes for the outbreak.

    Raises
    ------
    ConfigError
        More viruses than hosts.
    """
    if params.num_virus > params.num_host:
        raise ConfigError(
            f"num_virus ({params.num_virus}) cannot exceed num_host ({params.num_host})"
        )
    rng = np.random.default_rng(params.seed)
    locations = rng.uniform((0.0, 0.0), params.space, size=(params.num_host, 2))
    death_probabilities = rng.uniform(0.0, 1.0, size=params.num_host)

    hosts = [
        Host(
            id=i,
            loc=(float(locations[i, 0]), float(locations[i, 1])),
            dp=float(death_probabilities[i]),
            death_timer=_sample_timer(rng, params.death_timer),
            cure_timer=_sample_timer(rng, params.cure_timer),
            transform_timer=_sample_timer(rng, params.transform_timer),
        )
        for i in range(params.num_host)
    ]
    outbreak = [
        Virus(id=i, genome=random_genome(params.sequence_length, rng), gen=1)
        for i in range(params.num_virus)
    ]
    state = EpidemicState(hosts=hosts, outbreak=outbreak, next_virus_id=params.num_virus)
    state._rng = rng
    state.sync_rng_state()
    return state


def neighbors(state, radius):
    """Per host: ids and distances of the other hosts within `radius`, by ascending id."""
    if state._neighbors is None:
        locations = np.array([host.loc for host in state.hosts])
        distances = np.sqrt(((locations[:, None, :] - locations[None, :, :]) ** 2).sum(axis=-1))
        state._neighbors = []
        for i in range(len(state.hosts)):
            ids = np.nonzero(distances[i] <= radius)[0]
            ids = ids[ids != i]
            state._neighbors.append((ids, distances[i, ids]))
    return state._neighbors


def seed_outbreak(state, params):
    """
    Infect `num_virus` distinct hosts (type I, one initial virus each), then
    give a `natural_immunity` fraction of the remaining hosts natural immunity.
    """
    if state.t != 0 or not state.outbreak:
        raise SvsError("The outbreak can only be seeded once, at t = 0")
    rng = state.rng
    chosen = rng.choice(len(state.hosts), size=len(state.outbreak), replace=False)
    for host_id, virus in zip(chosen, state.outbreak):
        _infect(state.hosts[int(host_id)], virus, HostState.INFECTED_I, 0, params, rng)
    state.outbreak = []

    susceptible = [host.id for host in state.hosts if host.state == HostState.SUSCEPTIBLE]
    n_immune = min(int(round(params.natural_immunity * len(state.hosts))), len(susceptible))
    if n_immune:
        for host_id in rng.choice(susceptible, size=n_immune, replace=False):
            state.hosts[int(host_id)].state = HostState.IMMUNE

    _record(state, best_g=None)
    _check_termination(state, params)
    logger.debug(f"Outbreak seeded: {len(chosen)} infected, {n_immune} naturally immune")
    return state


# ======================================================
# =====             HOST DYNAMICS                  =====
# ======================================================

def toxicity(v):
    return 100.0 if v.gen == 1 else 100.0 / v.gen + 40.0


def death_check(host, v, params):
    """1 when the virus is lethal for this host (toxicity * Dp >= death threshold)."""
    return 1 if toxicity(v) * host.dp >= params.death_threshold else 0


def infectiousness(g, library_size):
    """Spread capacity S(v) of a genome with score G in a library of `library_size` viruses."""
    opponents = library_size - 1
    if opponents <= 0:
        return INFECTIOUSNESS_OFFSET
    return max(0.0, INFECTIOUSNESS_OFFSET - g / opponents)


def distance_index(d):
    if d < 0.5:
        return 1.0
    if d > 3:
        return 0.0
    # Clamped: 1.2 - 0.4 * 3 rounds below zero.
    return max(0.0, 1.2 - 0.4 * d)


def infection_probability(s_value, d, params):
    """(omega1 * tanh(S/60) + omega2 * Dt(d)) / 3, always within [0, 2/3]."""
    return (params.omega1 * np.tanh(s_value / 60.0) + params.omega2 * distance_index(d)) / 3.0


def _infect(host, virus, kind, t, params, rng):
    host.carried = virus
    host.state = kind
    host.infected_at = t
    if kind == HostState.INFECTED_I:
        host.wd = death_check(host, virus, params)
        host.can_transform = False
    else:
        host.wd = None
        host.can_transform = bool(rng.random() < params.transform_probability)


def _cure(host, params, rng):
    """Self-cure: immune when the draw exceeds 1 - immune_probability, else susceptible."""
    tran = rng.random()
    host.state = HostState.IMMUNE if tran > 1.0 - params.immune_probability else HostState.SUSCEPTIBLE
    host.carried = None
    host.wd = None
    host.can_transform = False
    host.infected_at = None
    host.death_timer = _sample_timer(rng, params.death_timer)
    host.cure_timer = _sample_timer(rng, params.cure_timer)
    host.transform_timer = _sample_timer(rng, params.transform_timer)


def mutate_genome(v, context, evolutions, rng):
    """
    Evolve a virus genome by `evolutions` single-base trials.

    Each trial draws a position, then one of the three other bases; the change
    is kept when it does not raise G against the context's frozen opponents.

    Parameters
    ----------
    v : Virus
    context : FitnessContext
        Opponents of this genome; left holding the evolved genome's G.
    evolutions : int
    rng : numpy.random.Generator

    Returns
    -------
    Virus
        `v` itself when nothing changed, otherwise a copy with the new genome.
    """
    codes = encode(v.genome).copy()
    context.reset(v.genome)
    changed = False
    for _ in range(evolutions):
        position = int(rng.integers(len(codes)))
        code = (int(codes[position]) + int(rng.integers(1, 4))) % 4
        score = context.propose(position, code)
        if score <= context.current:
            context.accept(score)
            codes[position] = code
            changed = True
    if not changed:
        return v
    return v.model_copy(update={"genome": decode(codes)})


def _opponents(state, host):
    return [other.carried.genome for other in state.hosts if other.infected and other.id != host.id]


def _evolve(host, state, params, constraint_params):
    context = FitnessContext(_opponents(state, host), params.sequence_length, constraint_params.similarity)
    host.carried = mutate_genome(host.carried, context, params.evolutions, state.rng)
    state.evaluations += context.evaluations
    return context.current


def _spread(host, g, state, params):
    rng = state.rng
    s_value = infectiousness(g, len(state.library))
    ids, distances = neighbors(state, params.spread_radius)[host.id]
    infections = 0
    for other_id, d in zip(ids, distances):
        other = state.hosts[int(other_id)]
        if other.state != HostState.SUSCEPTIBLE:
            continue
        if rng.random() >= infection_probability(s_value, float(d), params):
            continue
        copy = Virus(id=state.next_virus_id, genome=host.carried.genome, gen=host.carried.gen + 1)
        state.next_virus_id += 1
        kind = HostState.INFECTED_II if rng.random() >= 1.0 - params.type_ii_probability else HostState.INFECTED_I
        _infect(other, copy, kind, state.t + 1, params, rng)
        infections += 1
    return infections


def process_type_I(host, state, params, constraint_params):
    """
    One step of a spreading (type I) host: death countdown when the virus is
    lethal, otherwise self-cure countdown; a surviving host evolves its virus
    and exposes its susceptible neighbours.

    Returns
    -------
    g : int or None
        G of the evolved genome, None when the host died or was cured.
    """
    rng = state.rng
    if host.wd == 1:
        host.death_timer -= 1
        if host.death_timer == 0:
            host.state = HostState.DEAD
            host.carried = None
            host.wd = None
            return None
    else:
        host.cure_timer -= 1
        if host.cure_timer == 0:
            _cure(host, params, rng)
            return None

    g = _evolve(host, state, params, constraint_params)
    _spread(host, g, state, params)
    return g


def process_type_II(host, state, params, constraint_params):
    """
    One step of a non-spreading (type II) host: self-cure countdown, genome
    evolution, then, when eligible, the countdown to becoming type I with the
    same virus. A type II host never dies.
    """
    host.cure_timer -= 1
    if host.cure_timer == 0:
        _cure(host, params, state.rng)
        return None

    g = _evolve(host, state, params, constraint_params)
    if host.can_transform:
        host.transform_timer -= 1
        if host.transform_timer == 0:
            host.state = HostState.INFECTED_I
            host.can_transform = False
            host.wd = death_check(host, host.carried, params)
    return g


# ======================================================
# =====               EPIDEMIC LOOP                =====
# ======================================================

def _record(state, best_g):
    for virus in state.library:
        state.archive.setdefault(virus.genome.bases, state.t)
    counts = state.counts()
    state.history.append(HistoryRecord(
        step=state.t,
        susceptible=counts[HostState.SUSCEPTIBLE],
        infected_i=counts[HostState.INFECTED_I],
        infected_ii=counts[HostState.INFECTED_II],
        immune=counts[HostState.IMMUNE],
        dead=counts[HostState.DEAD],
        library_size=len(state.library),
        best_g=best_g,
    ))


def _check_termination(state, params):
    immune = state.counts()[HostState.IMMUNE]
    if immune > 0 and immune / len(state.hosts) >= params.barrier_fraction:
        state.finished, state.termination = True, "barrier"
    elif state.t >= params.epidemic_time:
        state.finished, state.termination = True, "time"


def step(state, params, constraint_params):
    """
    Advance the epidemic by one step, processing hosts by ascending id.

    Hosts infected during this step are only processed from the next step on.

    Raises
    ------
    EpidemicFinishedError
        The epidemic already reached its time limit or the immunity barrier.
    """
    if state.finished:
        raise EpidemicFinishedError(f"Epidemic finished at t={state.t} ({state.termination})")
    scores = []
    for host in state.hosts:
        if not host.infected or host.infected_at == state.t + 1:
            continue
        if host.state == HostState.INFECTED_I:
            g = process_type_I(host, state, params, constraint_params)
        else:
            g = process_type_II(host, state, params, constraint_params)
        if g is not None:
            scores.append(g)

    state.t += 1
    _record(state, best_g=float(min(scores)) if scores else None)
    _check_termination(state, params)
    record = state.history[-1]
    logger.debug(
        f"Step {state.t}: O={record.susceptible} I={record.infected_i} II={record.infected_ii} "
        f"N={record.immune} D={record.dead} best G={record.best_g}"
    )
    return state


def state_violations(state, num_host):
    """Broken state invariants, as messages; empty when the state is consistent."""
    violations = []
    counts = state.counts()
    if sum(counts.values()) != num_host:
        violations.append(f"state counts sum to {sum(counts.values())}, expected {num_host}")
    for host in state.hosts:
        if host.infected != (host.carried is not None):
            violations.append(f"host {host.id} is {host.state.value} with carried={host.carried is not None}")
    carried = [host.carried for host in state.hosts if host.carried is not None]
    if len({v.id for v in carried}) != len(carried):
        violations.append("two hosts carry the same virus id")
    missing = [v.id for v in carried if v.genome.bases not in state.archive]
    if missing:
        violations.append(f"viruses {missing} carry genomes missing from the archive")
    if state.history and state.history[-1].library_size != len(carried):
        violations.append(
            f"last history record has library size {state.history[-1].library_size}, hosts carry {len(carried)}"
        )
    return violations


# ======================================================
# =====                 SCREENING                  =====
# ======================================================

def library_scores(genomes, p):
    """G of every genome against all the others."""
    if len({len(g) for g in genomes}) <= 1:
        return [
            FitnessContext(genomes[:i] + genomes[i + 1:], len(genome), p).evaluate(genome)
            for i, genome in enumerate(genomes)
        ]
    aggregate = sum if p.row_aggregate == "sum" else max
    scores = []
    for i, genome in enumerate(genomes):
        others = genomes[:i] + genomes[i + 1:]
        if not others:
            scores.append(0)
            continue
        scores.append(
            aggregate(similarity_pair(genome, other, p) for other in others)
            + aggregate(h_measure_pair(genome, other, p) for other in others)
        )
    return scores


def _passes_pairwise(candidate, kept, constraint_params, criteria):
    p = constraint_params.similarity
    for other in kept:
        if max(similarity_pair(candidate, other, p), similarity_pair(other, candidate, p)) > criteria.similarity_cap:
            return False
        if max(h_measure_pair(candidate, other, p), h_measure_pair(other, candidate, p)) > criteria.h_measure_cap:
            return False
    return True


def screen_library(genomes, criteria, constraint_params, model):
    """
    Deduplicate, apply the hard filters, rank by G and greedily keep
    candidates whose pairwise Similarity / H-measure against every kept one
    stays within the caps.

    Returns
    -------
    kept : list of DnaSequence
    shortfall : ShortfallReport or None
        Present when fewer than `criteria.min_out` sequences were kept.
    """
    unique = list({genome.bases: genome for genome in genomes}.values())
    rejected = dict.fromkeys(("gc", "continuity", "hairpin", "self_dimer", "tm", "pairwise"), 0)
    survivors = []
    for genome in unique:
        if criteria.gc_balanced and not is_gc_balanced(genome):
            rejected["gc"] += 1
        elif continuity(genome, constraint_params.continuity_threshold) > criteria.continuity_max:
            rejected["continuity"] += 1
        elif hairpin(genome, constraint_params.hairpin) > criteria.hairpin_max:
            rejected["hairpin"] += 1
        elif self_dimer(genome) > criteria.self_dimer_cap:
            rejected["self_dimer"] += 1
        elif not criteria.tm_window[0] <= tm(genome, model) <= criteria.tm_window[1]:
            rejected["tm"] += 1
        else:
            survivors.append(genome)

    scores = library_scores(survivors, constraint_params.similarity)
    ranked = sorted(zip(scores, (g.bases for g in survivors), survivors), key=lambda item: item[:2])

    kept = []
    for _, _, genome in ranked:
        if criteria.max_out is not None and len(kept) == criteria.max_out:
            break
        if _passes_pairwise(genome, kept, constraint_params, criteria):
            kept.append(genome)
        else:
            rejected["pairwise"] += 1

    shortfall = None
    if len(kept) < criteria.min_out:
        shortfall = ShortfallReport(
            required=criteria.min_out,
            kept=len(kept),
            candidates=len(genomes),
            unique=len(unique),
            rejected=rejected,
        )
        logger.warning(f"Screening kept {len(kept)} of {criteria.min_out} required sequences: {rejected}")
    logger.info(f"Screening kept {len(kept)} sequences out of {len(unique)} unique genomes")
    return kept, shortfall


def screen(state, criteria, constraint_params, model):
    """
    Screen a finished epidemic: every archived genome, or only the genomes
    carried by infected hosts at the end when `criteria.pool` is `final`.

    Raises
    ------
    SvsError
        The epidemic is still running.
    EmptyLibraryError
        No infected host is left.
    """
    if not state.finished:
        raise SvsError("Screening needs a finished epidemic")
    library = state.library
    if not library:
        raise EmptyLibraryError(f"No living virus at t={state.t} ({state.termination})")
    if criteria.pool == "final":
        genomes = [v.genome for v in library]
    else:
        genomes = [DnaSequence(bases=bases) for bases in state.archive]
    logger.info(f"Screening the {criteria.pool} pool: {len(genomes)} genomes")
    return screen_library(genomes, criteria, constraint_params, model)


def design_result(method, seed, kept, shortfall, constraint_params, model, **fields):
    profiles = profile_set(kept, constraint_params, model) if len(kept) >= 2 else []
    return DesignResult(
        method=method,
        seed=seed,
        sequences=kept,
        profiles=profiles,
        shortfall=shortfall,
        **fields,
    )


def run(
    params,
    constraint_params,
    model,
    criteria,
    state=None,
    checkpoint_frequency=0,
    checkpoint_folderpath=None,
    progress=True,
):
    """
    Full design run: initialize, seed, step until the time limit or the
    immunity barrier, then screen.

    Parameters
    ----------
    params : SvsParams
    constraint_params : ConstraintParams
    model : TmModel
    criteria : ScreenCriteria
    state : EpidemicState, optional
        A checkpointed state to continue instead of a fresh outbreak.
    checkpoint_frequency : int, default = 0
        Save the state every N steps (0 disables checkpoints).
    checkpoint_folderpath : str, optional
        Folder of the run's checkpoints.
    progress : bool, default = True
        Show a tqdm progress bar.

    Returns
    -------
    result : DesignResult
    state : EpidemicState
        The finished epidemic.
    """
    start_time = time.time()
    if state is None:
        state = seed_outbreak(init_state(params), params)
    else:
        logger.info(f"Continuing epidemic from step {state.t}")

    with tqdm(total=params.epidemic_time, initial=state.t, desc="Epidemic", unit="step", disable=not progress) as pbar:
        while not state.finished:
            step(state, params, constraint_params)
            pbar.update(1)
            if checkpoint_frequency and checkpoint_folderpath and state.t % checkpoint_frequency == 0:
                save_checkpoint(state, checkpoint_folderpath)

    logger.info(
        f"Epidemic finished at t={state.t} ({state.termination}), "
        f"{len(state.library)} living viruses, {len(state.archive)} archived genomes, "
        f"{state.evaluations} G evaluations"
    )
    kept, shortfall = screen(state, criteria, constraint_params, model)
    state.sync_rng_state()
    result = design_result(
        "svs",
        params.seed,
        kept,
        shortfall,
        constraint_params,
        model,
        history=state.history,
        evaluations=state.evaluations,
        termination=state.termination,
    )
    logger.info(f"Design run completed in {time.time() - start_time:.3f} secs.")
    return result, state
