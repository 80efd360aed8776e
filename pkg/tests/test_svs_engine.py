import math
import numpy as np
import pytest
from src import svs_engine
from src.constraints import continuity, hairpin, h_measure_pair, self_dimer, similarity_pair
from src.exceptions import ConfigError, EmptyLibraryError, EpidemicFinishedError, SvsError
from src.fitness import FitnessContext
from src.models import (
    ConstraintParams,
    DnaSequence,
    EpidemicState,
    Host,
    HostState,
    ScreenCriteria,
    SimilarityParams,
    SvsParams,
    Virus,
)
from src.seq_core import decode, is_gc_balanced, random_genome
from src.thermo import tm
from src.svs_engine import (
    death_check,
    distance_index,
    infection_probability,
    infectiousness,
    init_state,
    mutate_genome,
    process_type_I,
    process_type_II,
    run,
    screen,
    screen_library,
    seed_outbreak,
    state_violations,
    step,
    toxicity,
)


class FixedDraws:
    """Stands in for the numpy Generator with scripted uniform draws."""

    def __init__(self, draws):
        self.draws = list(draws)

    def random(self):
        return self.draws.pop(0)

    def integers(self, low, high=None, size=None):
        return low


def genome(bases):
    return DnaSequence(bases=bases)


def make_state(locations, rng, **host_fields):
    hosts = [
        Host(id=i, loc=loc, dp=0.0, death_timer=3, cure_timer=3, transform_timer=3, **host_fields)
        for i, loc in enumerate(locations)
    ]
    state = EpidemicState(hosts=hosts)
    state._rng = rng
    return state


def infect(host, bases, kind=HostState.INFECTED_I, gen=1, virus_id=0, wd=0):
    host.carried = Virus(id=virus_id, genome=genome(bases), gen=gen)
    host.state = kind
    host.wd = wd if kind == HostState.INFECTED_I else None
    host.infected_at = 0


# Tiny, fast epidemic: nobody dies or cures within the horizon.
SMALL = dict(
    evolutions=3,
    epidemic_time=4,
    num_virus=5,
    num_host=40,
    space=(6.0, 6.0),
    sequence_length=10,
    death_threshold=1000.0,
    cure_timer=(50, 50),
    natural_immunity=0.0,
)
OPEN_SCREEN = ScreenCriteria(
    min_out=0,
    gc_balanced=False,
    continuity_max=1000,
    hairpin_max=1000,
    self_dimer_cap=100,
    tm_window=(-100.0, 200.0),
    similarity_cap=100,
    h_measure_cap=100,
)


# ======================================================
# =====               INITIALIZATION               =====
# ======================================================

def test_init_state_default_scale():
    params = SvsParams()
    state = init_state(params)
    assert len(state.hosts) == 300
    assert len(state.outbreak) == 20
    assert state.t == 0
    assert all(host.state == HostState.SUSCEPTIBLE for host in state.hosts)
    assert all(0 <= host.loc[0] <= 20 and 0 <= host.loc[1] <= 20 for host in state.hosts)
    assert all(2 <= host.death_timer <= 5 and 3 <= host.cure_timer <= 8 for host in state.hosts)
    assert all(len(v.genome) == 20 and is_gc_balanced(v.genome) for v in state.outbreak)


def test_init_state_is_seeded():
    params = SvsParams(num_host=50, num_virus=5)
    assert init_state(params).model_dump() == init_state(params).model_dump()
    other = init_state(params.model_copy(update={"seed": 2}))
    assert other.model_dump() != init_state(params).model_dump()


def test_more_viruses_than_hosts():
    with pytest.raises(ConfigError):
        init_state(SvsParams(num_host=5, num_virus=6))


def test_params_validation():
    with pytest.raises(ValueError):
        SvsParams(omega1=0.6, omega2=0.6)
    with pytest.raises(ValueError):
        SvsParams(cure_timer=(5, 2))


def test_seed_outbreak():
    params = SvsParams(natural_immunity=0.0)
    state = seed_outbreak(init_state(params), params)
    counts = state.counts()
    assert counts[HostState.INFECTED_I] == 20
    assert counts[HostState.SUSCEPTIBLE] == 280
    assert sorted(v.id for v in state.library) == list(range(20))
    assert all(v.gen == 1 for v in state.library)
    assert state.history[0].step == 0
    assert state.history[0].library_size == 20
    with pytest.raises(SvsError):
        seed_outbreak(state, params)


def test_natural_immunity():
    params = SvsParams()
    state = seed_outbreak(init_state(params), params)
    assert state.counts()[HostState.IMMUNE] == 15


# ======================================================
# =====               HOST DYNAMICS                =====
# ======================================================

def test_toxicity():
    assert toxicity(Virus(id=0, genome=genome("ACGT"), gen=1)) == 100
    assert toxicity(Virus(id=0, genome=genome("ACGT"), gen=2)) == 90
    assert 40 < toxicity(Virus(id=0, genome=genome("ACGT"), gen=10_000)) < 40.1


@pytest.mark.parametrize("dp, expected", [(0.5, 0), (0.6, 1), (0.0, 0)])
def test_death_check(dp, expected):
    host = Host(id=0, loc=(0, 0), dp=dp, death_timer=1, cure_timer=1, transform_timer=1)
    virus = Virus(id=0, genome=genome("ACGT"), gen=1)
    assert death_check(host, virus, SvsParams()) == expected


def test_infectiousness():
    assert infectiousness(500, 1) == 120
    assert infectiousness(200, 11) == 100
    assert infectiousness(10_000, 2) == 0


@pytest.mark.parametrize("d, expected", [(0.2, 1.0), (0.5, 1.0), (1.0, 0.8), (3.0, 0.0), (4.0, 0.0)])
def test_distance_index(d, expected):
    assert distance_index(d) == pytest.approx(expected)


def test_infection_probability():
    params = SvsParams()
    assert infection_probability(60, 1.0, params) == pytest.approx(0.2603, abs=1e-4)
    assert infection_probability(60, 4.0, params) == pytest.approx(0.5 * math.tanh(1) / 3)
    for s_value in (0, 30, 120, 1e6):
        for d in (0, 0.4, 1.7, 2.9, 3.0, 10):
            assert 0 <= infection_probability(s_value, d, params) <= 2 / 3


def test_lethal_type_I_host_dies():
    params = SvsParams(evolutions=0)
    state = make_state([(0, 0), (10, 10)], FixedDraws([]))
    host = state.hosts[0]
    infect(host, "ACGTACGTAC", wd=1)
    host.death_timer = 1
    assert process_type_I(host, state, params, ConstraintParams()) is None
    assert host.state == HostState.DEAD
    assert host.carried is None
    assert state.library == []


@pytest.mark.parametrize("draw, outcome", [(0.9, HostState.IMMUNE), (0.2, HostState.SUSCEPTIBLE)])
def test_type_I_self_cure(draw, outcome):
    params = SvsParams(evolutions=0)
    state = make_state([(0, 0)], FixedDraws([draw]))
    host = state.hosts[0]
    infect(host, "ACGTACGTAC")
    host.cure_timer = 1
    assert process_type_I(host, state, params, ConstraintParams()) is None
    assert host.state == outcome
    assert host.carried is None
    # Timers are drawn again for the next infection.
    assert (host.death_timer, host.cure_timer, host.transform_timer) == (2, 3, 2)


def test_type_I_spreads_to_a_close_neighbour():
    params = SvsParams(evolutions=0, sequence_length=10)
    # Draws: infection accepted, then type I (below 1 - 0.3).
    state = make_state([(0, 0), (0.1, 0)], FixedDraws([0.0, 0.0]))
    state.next_virus_id = 7
    host, neighbour = state.hosts
    infect(host, "ACGTACGTAC", gen=2)
    process_type_I(host, state, params, ConstraintParams())
    assert neighbour.state == HostState.INFECTED_I
    assert neighbour.carried.genome == host.carried.genome
    assert neighbour.carried.gen == 3
    assert neighbour.carried.id == 7
    assert neighbour.infected_at == 1
    assert neighbour.wd == 0


def test_type_II_infection_draws_transform_eligibility():
    params = SvsParams(evolutions=0, sequence_length=10)
    state = make_state([(0, 0), (0.1, 0)], FixedDraws([0.0, 0.8, 0.1]))
    host, neighbour = state.hosts
    infect(host, "ACGTACGTAC")
    process_type_I(host, state, params, ConstraintParams())
    assert neighbour.state == HostState.INFECTED_II
    assert neighbour.can_transform
    assert neighbour.wd is None


def test_distant_hosts_are_never_infected():
    params = SvsParams(evolutions=0, sequence_length=10, omega1=0.0, omega2=1.0, spread_radius=10.0)
    state = make_state([(0, 0), (4, 0), (0, 5)], np.random.default_rng(0))
    host = state.hosts[0]
    infect(host, "ACGTACGTAC")
    host.cure_timer = 10
    for _ in range(5):
        process_type_I(host, state, params, ConstraintParams())
    assert [h.state for h in state.hosts[1:]] == [HostState.SUSCEPTIBLE] * 2


def test_type_II_transforms_into_type_I():
    params = SvsParams(evolutions=0, sequence_length=10)
    state = make_state([(0, 0)], FixedDraws([]))
    host = state.hosts[0]
    infect(host, "ACGTACGTAC", kind=HostState.INFECTED_II, gen=3)
    host.can_transform = True
    host.transform_timer = 1
    host.cure_timer = 5
    carried = host.carried
    process_type_II(host, state, params, ConstraintParams())
    assert host.state == HostState.INFECTED_I
    assert host.carried == carried
    assert host.wd == 0


def test_type_II_self_cure_to_susceptible():
    params = SvsParams(evolutions=0)
    state = make_state([(0, 0)], FixedDraws([0.2]))
    host = state.hosts[0]
    infect(host, "ACGTACGTAC", kind=HostState.INFECTED_II)
    host.cure_timer = 1
    assert process_type_II(host, state, params, ConstraintParams()) is None
    assert host.state == HostState.SUSCEPTIBLE


def test_mutation_never_raises_g():
    rng = np.random.default_rng(5)
    p = SimilarityParams()
    opponents = [random_genome(16, rng) for _ in range(6)]
    for _ in range(20):
        context = FitnessContext(opponents, 16, p)
        virus = Virus(id=0, genome=random_genome(16, rng))
        before = context.evaluate(virus.genome)
        evolved = mutate_genome(virus, context, 50, rng)
        assert context.current <= before
        assert context.evaluate(evolved.genome) == context.current
        assert evolved.id == virus.id and evolved.gen == virus.gen


def test_mutation_without_trials_keeps_the_virus():
    rng = np.random.default_rng(0)
    virus = Virus(id=0, genome=random_genome(10, rng))
    context = FitnessContext([random_genome(10, rng)], 10, SimilarityParams())
    assert mutate_genome(virus, context, 0, rng) is virus


def test_single_genome_accepts_every_change():
    rng = np.random.default_rng(0)
    virus = Virus(id=0, genome=genome("AAAAAAAAAA"))
    evolved = mutate_genome(virus, FitnessContext([], 10, SimilarityParams()), 10, rng)
    assert evolved.genome != virus.genome


# ======================================================
# =====               EPIDEMIC LOOP                =====
# ======================================================

def test_step_without_infected_hosts_only_advances_time():
    params = SvsParams(**SMALL)
    state = init_state(params)
    state.outbreak = []
    step(state, params, ConstraintParams())
    assert state.t == 1
    assert state.counts()[HostState.SUSCEPTIBLE] == params.num_host


def test_epidemic_ends_at_time_limit():
    params = SvsParams(**SMALL)
    state = seed_outbreak(init_state(params), params)
    while not state.finished:
        step(state, params, ConstraintParams())
    assert state.t == params.epidemic_time
    assert state.termination == "time"
    assert len(state.history) == params.epidemic_time + 1
    with pytest.raises(EpidemicFinishedError):
        step(state, params, ConstraintParams())


def test_zero_barrier_ends_at_seeding():
    params = SvsParams(barrier_fraction=0.0, num_host=40, num_virus=4, space=(6.0, 6.0))
    state = seed_outbreak(init_state(params), params)
    assert state.finished
    assert state.termination == "barrier"


def test_invariants_hold_every_step():
    params = SvsParams(
        evolutions=4, epidemic_time=10, num_virus=6, num_host=60, space=(6.0, 6.0), sequence_length=12
    )
    state = seed_outbreak(init_state(params), params)
    locations = [host.loc for host in state.hosts]
    dead = set()
    while not state.finished:
        type_ii = {host.id for host in state.hosts if host.state == HostState.INFECTED_II}
        immune = {host.id for host in state.hosts if host.state == HostState.IMMUNE}
        step(state, params, ConstraintParams())
        assert state_violations(state, params.num_host) == []
        assert [host.loc for host in state.hosts] == locations
        assert all(state.hosts[i].state == HostState.DEAD for i in dead)
        assert all(state.hosts[i].state != HostState.DEAD for i in type_ii)
        assert all(not state.hosts[i].infected for i in immune)
        dead = {host.id for host in state.hosts if host.state == HostState.DEAD}
    for record in state.history:
        total = record.susceptible + record.infected_i + record.infected_ii + record.immune + record.dead
        assert total == params.num_host


def test_state_violations_detects_a_broken_host():
    params = SvsParams(**SMALL)
    state = seed_outbreak(init_state(params), params)
    next(host for host in state.hosts if host.infected).carried = None
    assert state_violations(state, params.num_host)


def test_state_violations_detects_a_stale_archive_and_history():
    params = SvsParams(**SMALL)
    state = seed_outbreak(init_state(params), params)
    assert state_violations(state, params.num_host) == []
    host = next(host for host in state.hosts if host.infected)
    host.carried = host.carried.model_copy(update={"genome": genome("ACGTACGTAC")})
    assert any("archive" in v for v in state_violations(state, params.num_host))

    state = seed_outbreak(init_state(params), params)
    state.history[-1] = state.history[-1].model_copy(update={"library_size": 0})
    assert any("history" in v for v in state_violations(state, params.num_host))


def test_archive_keeps_every_carried_genome():
    params = SvsParams(**SMALL)
    state = seed_outbreak(init_state(params), params)
    assert set(state.archive) == {v.genome.bases for v in state.library}
    assert set(state.archive.values()) == {0}
    seen = set(state.archive)
    while not state.finished:
        step(state, params, ConstraintParams())
        assert seen <= set(state.archive)
        assert {v.genome.bases for v in state.library} <= set(state.archive)
        seen = set(state.archive)
    assert all(0 <= first_seen <= state.t for first_seen in state.archive.values())
    assert len(state.archive) > params.num_virus


# ======================================================
# =====                 SCREENING                  =====
# ======================================================

def test_screen_keeps_the_published_set(svs_set, constraint_params, tm_model):
    garbage = [
        genome("AAAAAAAAAAAAAAAAAAAA"),
        genome("GGGGGGGGGGCCCCCCCCCC"),
        genome("AAAAACCCCCGGGGGTTTTT"),
        genome("ATATATATATGCGCGCGCGC"),
    ]
    library = garbage + svs_set + [svs_set[1]]
    kept, shortfall = screen_library(library, ScreenCriteria(), constraint_params, tm_model)
    assert shortfall is None
    assert sorted(s.bases for s in kept) == sorted(s.bases for s in svs_set)


def test_screen_reports_shortfall(constraint_params, tm_model):
    library = [genome("AAAAAAAAAAAAAAAAAAAA"), genome("TTTTTTTTTTTTTTTTTTTT")]
    kept, shortfall = screen_library(library, ScreenCriteria(), constraint_params, tm_model)
    assert kept == []
    assert shortfall.required == 7
    assert shortfall.candidates == 2
    assert shortfall.rejected["gc"] == 2


def test_screen_caps_the_output_size(svs_set, constraint_params, tm_model):
    kept, shortfall = screen_library(svs_set, ScreenCriteria(min_out=3, max_out=3), constraint_params, tm_model)
    assert len(kept) == 3
    assert shortfall is None


def test_screen_pool_final_uses_the_last_library(constraint_params, tm_model):
    params = SvsParams(**SMALL)
    _, state = run(params, constraint_params, tm_model, OPEN_SCREEN, progress=False)
    final = OPEN_SCREEN.model_copy(update={"pool": "final"})
    from_library, _ = screen(state, final, constraint_params, tm_model)
    from_archive, _ = screen(state, OPEN_SCREEN, constraint_params, tm_model)
    assert {s.bases for s in from_library} == {v.genome.bases for v in state.library}
    assert {s.bases for s in from_archive} == set(state.archive)


def test_screen_needs_a_finished_epidemic(constraint_params, tm_model):
    params = SvsParams(**SMALL)
    state = seed_outbreak(init_state(params), params)
    with pytest.raises(SvsError):
        screen(state, OPEN_SCREEN, constraint_params, tm_model)
    for host in state.hosts:
        if host.infected:
            host.state, host.carried = HostState.DEAD, None
    state.finished = True
    with pytest.raises(EmptyLibraryError):
        screen(state, OPEN_SCREEN, constraint_params, tm_model)


def test_run_is_deterministic(constraint_params, tm_model):
    params = SvsParams(**SMALL)
    first, first_state = run(params, constraint_params, tm_model, OPEN_SCREEN, progress=False)
    second, _ = run(params, constraint_params, tm_model, OPEN_SCREEN, progress=False)
    assert first.model_dump() == second.model_dump()
    assert first.termination == "time"
    assert first.evaluations == first_state.evaluations > 0
    assert first.sequences


def test_run_resumes_from_a_saved_state(constraint_params, tm_model):
    params = SvsParams(**SMALL)
    full, _ = run(params, constraint_params, tm_model, OPEN_SCREEN, progress=False)

    state = seed_outbreak(init_state(params), params)
    step(state, params, constraint_params)
    state.sync_rng_state()
    restored = EpidemicState.model_validate(state.model_dump())
    resumed, _ = run(params, constraint_params, tm_model, OPEN_SCREEN, state=restored, progress=False)
    assert resumed.model_dump() == full.model_dump()


# ======================================================
# =====               FULL SCALE                   =====
# ======================================================

def test_default_run_keeps_a_full_set(tm_model):
    criteria = ScreenCriteria()
    constraint_params = ConstraintParams()
    result, state = run(SvsParams(seed=1), constraint_params, tm_model, criteria, progress=False)
    assert result.shortfall is None
    assert len(result.sequences) >= criteria.min_out
    assert len(result.profiles) == len(result.sequences)
    p = constraint_params.similarity
    for s in result.sequences:
        assert s.bases in state.archive
        assert is_gc_balanced(s)
        assert continuity(s, constraint_params.continuity_threshold) == 0
        assert hairpin(s, constraint_params.hairpin) == 0
        assert self_dimer(s) <= criteria.self_dimer_cap
        assert criteria.tm_window[0] <= tm(s, tm_model) <= criteria.tm_window[1]
        for other in result.sequences:
            if other != s:
                assert similarity_pair(s, other, p) <= criteria.similarity_cap
                assert h_measure_pair(s, other, p) <= criteria.h_measure_cap


@pytest.mark.slow
def test_full_scale_invariants(constraint_params, monkeypatch):
    probabilities = []
    real_probability = svs_engine.infection_probability

    def recorded_probability(s_value, d, params):
        value = real_probability(s_value, d, params)
        probabilities.append(value)
        return value

    class MonotoneContext(FitnessContext):
        trials = 0
        rechecked = 0

        def propose(self, position, code):
            MonotoneContext.trials += 1
            return super().propose(position, code)

        def accept(self, score):
            previous = self.current
            super().accept(score)
            assert self.current <= previous
            if MonotoneContext.trials % 50 == 0:
                assert self.evaluate(decode(self.codes)) == self.current
                MonotoneContext.rechecked += 1

    monkeypatch.setattr(svs_engine, "infection_probability", recorded_probability)
    monkeypatch.setattr(svs_engine, "FitnessContext", MonotoneContext)

    for seed in range(1, 11):
        params = SvsParams(seed=seed)
        state = seed_outbreak(init_state(params), params)
        locations = [host.loc for host in state.hosts]
        dead = set()
        while not state.finished:
            type_ii = {host.id for host in state.hosts if host.state == HostState.INFECTED_II}
            immune = {host.id for host in state.hosts if host.state == HostState.IMMUNE}
            step(state, params, constraint_params)
            assert state_violations(state, params.num_host) == []
            assert [host.loc for host in state.hosts] == locations
            assert all(state.hosts[i].state == HostState.DEAD for i in dead)
            assert all(state.hosts[i].state != HostState.DEAD for i in type_ii)
            assert all(not state.hosts[i].infected for i in immune)
            dead = {host.id for host in state.hosts if host.state == HostState.DEAD}
        assert all(
            r.susceptible + r.infected_i + r.infected_ii + r.immune + r.dead == 300 for r in state.history
        )

    assert MonotoneContext.trials >= 1000
    assert MonotoneContext.rechecked > 0
    assert probabilities
    assert all(0 <= value <= 2 / 3 for value in probabilities)
