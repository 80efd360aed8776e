import enum
import uuid
import json
import datetime
from typing import Any, Literal, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from src.settings import (
    BASES,
    COMPLEMENT,
    DEFAULT_DS,
    DEFAULT_CS,
    DEFAULT_DH,
    DEFAULT_CH,
    DEFAULT_RUN_MODE,
    DEFAULT_GAP_MODEL,
    DEFAULT_ROW_AGGREGATE,
    DEFAULT_R_MIN,
    DEFAULT_P_MIN,
    DEFAULT_HAIRPIN_MODE,
    DEFAULT_CONTINUITY_THRESHOLD,
    DEFAULT_EVOLUTIONS,
    DEFAULT_EPIDEMIC_TIME,
    DEFAULT_NUM_VIRUS,
    DEFAULT_NUM_HOST,
    DEFAULT_SPACE,
    DEFAULT_SEQUENCE_LENGTH,
    DEFAULT_DEATH_THRESHOLD,
    DEFAULT_OMEGA,
    DEFAULT_IMMUNE_PROBABILITY,
    DEFAULT_TYPE_II_PROBABILITY,
    DEFAULT_TRANSFORM_PROBABILITY,
    DEFAULT_BARRIER_FRACTION,
    DEFAULT_NATURAL_IMMUNITY,
    DEFAULT_SPREAD_RADIUS,
    DEFAULT_DEATH_TIMER,
    DEFAULT_CURE_TIMER,
    DEFAULT_TRANSFORM_TIMER,
    DEFAULT_SEED,
    DEFAULT_MIN_OUT,
    DEFAULT_SELF_DIMER_CAP,
    DEFAULT_TM_WINDOW,
    DEFAULT_SIMILARITY_CAP,
    DEFAULT_H_MEASURE_CAP,
    DEFAULT_SCREEN_POOL,
    DEFAULT_TM_PARAMETER_FILE,
    DEFAULT_OUTPUT_FORMAT,
    DEFAULT_CHECKPOINT_FREQUENCY,
)


class GeneralEncoder(json.JSONEncoder):
    """ An optional json.JSONEncoder subclass to serialize data types not supported
    by the standard JSON serializer (e.g. datetime.datetime, UUID or numpy values).

    It will encode datetimes in ISO Format, UUIDs in hexadecimal string, numpy
    scalars as their Python counterpart and enums by value.
    """

    def default(self, obj):
        if isinstance(obj, uuid.UUID):
            return obj.hex
        elif isinstance(obj, (datetime.datetime, datetime.date, datetime.time)):
            return obj.isoformat()
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, enum.Enum):
            return obj.value
        return super().default(obj)


# ======================================================
# =====             SEQUENCE MODELS                =====
# ======================================================

class DnaSequence(BaseModel):
    """Validated 5'->3' base string. Immutable value object."""
    model_config = ConfigDict(frozen=True)

    bases: str

    @field_validator("bases")
    def check_alphabet(cls, bases):
        if not bases:
            raise ValueError("A DNA sequence needs at least one base")
        invalid = [b for b in bases if b not in BASES]
        if invalid:
            raise ValueError(f"Invalid base {invalid[0]!r}, allowed: {BASES}")
        return bases

    def __len__(self):
        return len(self.bases)

    def __str__(self):
        return self.bases


# ======================================================
# =====            CONSTRAINT MODELS               =====
# ======================================================

class SimilarityParams(BaseModel):
    ds: float = Field(DEFAULT_DS, ge=0, le=1)
    cs: int = Field(DEFAULT_CS, ge=1)
    dh: float = Field(DEFAULT_DH, ge=0, le=1)
    ch: int = Field(DEFAULT_CH, ge=1)
    # `start`: a run is counted once at its first position; `suffix`: from every position.
    run_mode: Literal["start", "suffix"] = DEFAULT_RUN_MODE
    # `shift`: y slid across x with padding only; `concat`: y, g gaps, y slid across x.
    gap_model: Literal["concat", "shift"] = DEFAULT_GAP_MODEL
    row_aggregate: Literal["sum", "max"] = DEFAULT_ROW_AGGREGATE


class HairpinParams(BaseModel):
    r_min: int = Field(DEFAULT_R_MIN, ge=1)
    p_min: int = Field(DEFAULT_P_MIN, ge=1)
    mode: Literal["mirrored", "literal"] = DEFAULT_HAIRPIN_MODE


class ConstraintParams(BaseModel):
    similarity: SimilarityParams = Field(default_factory=SimilarityParams)
    hairpin: HairpinParams = Field(default_factory=HairpinParams)
    continuity_threshold: int = Field(DEFAULT_CONTINUITY_THRESHOLD, ge=1)


class ConstraintProfile(BaseModel):
    name: str
    sequence: str
    similarity: int = Field(ge=0)
    h_measure: int = Field(ge=0)
    continuity: int = Field(ge=0)
    hairpin: int = Field(ge=0)
    gc: float = Field(ge=0, le=1)
    g_count: int = Field(ge=0)
    tm: float
    self_dimer: int = Field(ge=0)


# ======================================================
# =====              THERMO MODELS                 =====
# ======================================================

STACKS = [a + b for a in BASES for b in BASES]


class TmModel(BaseModel):
    """Nearest-neighbour parameter set plus experimental conditions."""
    name: str
    formula: Literal["le_novere", "santalucia"]
    enthalpy: dict[str, float]  # kcal/mol per stack
    entropy: dict[str, float]   # cal/(mol*K) per stack
    init_enthalpy: float = 0.0  # kcal/mol, once per duplex
    init_entropy: float = 0.0
    terminal_at_enthalpy: float = 0.0  # per terminal A.T pair
    terminal_at_entropy: float = 0.0
    terminal_gc_enthalpy: float = 0.0  # per terminal G.C pair
    terminal_gc_entropy: float = 0.0
    symmetry_entropy: float = 0.0  # self-complementary duplexes only
    strand_concentration: float = Field(gt=0)  # C_T, mol/L
    salt: float = Field(gt=0)  # monovalent, mol/L

    @field_validator("enthalpy", "entropy")
    def check_stacks(cls, table):
        missing = [s for s in STACKS if s not in table]
        if missing:
            raise ValueError(f"Missing nearest-neighbour stacks: {', '.join(missing)}")
        for stack in STACKS:
            partner = COMPLEMENT[stack[1]] + COMPLEMENT[stack[0]]
            if abs(table[stack] - table[partner]) > 1e-9:
                raise ValueError(f"Stacks {stack} and {partner} must share a value")
        return table


# ======================================================
# =====             EPIDEMIC MODELS                =====
# ======================================================

class SvsParams(BaseModel):
    evolutions: int = Field(DEFAULT_EVOLUTIONS, ge=0)  # Ne, per infected host per step
    epidemic_time: int = Field(DEFAULT_EPIDEMIC_TIME, ge=1)  # T
    num_virus: int = Field(DEFAULT_NUM_VIRUS, ge=1)  # m
    num_host: int = Field(DEFAULT_NUM_HOST, ge=1)  # h
    space: tuple[float, float] = DEFAULT_SPACE  # Lm x Ln
    sequence_length: int = Field(DEFAULT_SEQUENCE_LENGTH, ge=2)
    death_threshold: float = Field(DEFAULT_DEATH_THRESHOLD, ge=0)  # TD
    omega1: float = Field(DEFAULT_OMEGA[0], ge=0, le=1)
    omega2: float = Field(DEFAULT_OMEGA[1], ge=0, le=1)
    immune_probability: float = Field(DEFAULT_IMMUNE_PROBABILITY, ge=0, le=1)
    type_ii_probability: float = Field(DEFAULT_TYPE_II_PROBABILITY, ge=0, le=1)
    transform_probability: float = Field(DEFAULT_TRANSFORM_PROBABILITY, ge=0, le=1)
    barrier_fraction: float = Field(DEFAULT_BARRIER_FRACTION, ge=0, le=1)
    natural_immunity: float = Field(DEFAULT_NATURAL_IMMUNITY, ge=0, le=1)
    spread_radius: float = Field(DEFAULT_SPREAD_RADIUS, gt=0)
    death_timer: tuple[int, int] = DEFAULT_DEATH_TIMER
    cure_timer: tuple[int, int] = DEFAULT_CURE_TIMER
    transform_timer: tuple[int, int] = DEFAULT_TRANSFORM_TIMER
    seed: int = Field(DEFAULT_SEED, ge=0)

    @field_validator("space")
    def check_space(cls, space):
        if min(space) <= 0:
            raise ValueError("Space extents must be positive")
        return space

    @field_validator("death_timer", "cure_timer", "transform_timer")
    def check_timer_range(cls, timer):
        low, high = timer
        if low < 1 or high < low:
            raise ValueError(f"Timer range must satisfy 1 <= low <= high, got {timer}")
        return timer

    @model_validator(mode="after")
    def check_weights(self):
        if abs(self.omega1 + self.omega2 - 1.0) > 1e-9:
            raise ValueError("omega1 + omega2 must equal 1")
        return self


class Virus(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    genome: DnaSequence
    gen: int = Field(1, ge=1)


class HostState(str, enum.Enum):
    SUSCEPTIBLE = "O"
    INFECTED_I = "I"
    INFECTED_II = "II"
    IMMUNE = "N"
    DEAD = "D"


INFECTED_STATES = (HostState.INFECTED_I, HostState.INFECTED_II)


class Host(BaseModel):
    model_config = ConfigDict(validate_assignment=True)

    id: int = Field(frozen=True)
    loc: tuple[float, float] = Field(frozen=True)
    state: HostState = HostState.SUSCEPTIBLE
    dp: float = Field(ge=0, le=1)
    death_timer: int = Field(ge=0)
    cure_timer: int = Field(ge=0)
    transform_timer: int = Field(ge=0)
    wd: Optional[int] = None
    can_transform: bool = False
    infected_at: Optional[int] = None
    carried: Optional[Virus] = None

    @property
    def infected(self):
        return self.state in INFECTED_STATES


class HistoryRecord(BaseModel):
    step: int
    susceptible: int
    infected_i: int
    infected_ii: int
    immune: int
    dead: int
    library_size: int
    best_g: Optional[float] = None


class EpidemicState(BaseModel):
    t: int = 0
    hosts: list[Host] = Field(default_factory=list)
    history: list[HistoryRecord] = Field(default_factory=list)
    rng_state: dict[str, Any] = Field(default_factory=dict)
    finished: bool = False
    termination: Optional[Literal["time", "barrier"]] = None
    evaluations: int = 0
    next_virus_id: int = 0
    # Initial viruses waiting for the outbreak; empty once seeded.
    outbreak: list[Virus] = Field(default_factory=list)
    # Every genome ever carried by an infected host, with the step it first appeared.
    archive: dict[str, int] = Field(default_factory=dict)

    _rng: Optional[np.random.Generator] = PrivateAttr(default=None)
    _neighbors: Optional[list] = PrivateAttr(default=None)

    @property
    def rng(self):
        """Live generator, rebuilt from `rng_state` after deserialization."""
        if self._rng is None:
            self._rng = np.random.default_rng()
            self._rng.bit_generator.state = self.rng_state
        return self._rng

    def sync_rng_state(self):
        self.rng_state = self.rng.bit_generator.state

    @property
    def library(self):
        return [host.carried for host in self.hosts if host.infected]

    def counts(self):
        counts = {state: 0 for state in HostState}
        for host in self.hosts:
            counts[host.state] += 1
        return counts


class ScreenCriteria(BaseModel):
    min_out: int = Field(DEFAULT_MIN_OUT, ge=0)
    max_out: Optional[int] = Field(None, ge=1)
    gc_balanced: bool = True
    continuity_max: int = Field(0, ge=0)
    hairpin_max: int = Field(0, ge=0)
    self_dimer_cap: int = Field(DEFAULT_SELF_DIMER_CAP, ge=0)
    tm_window: tuple[float, float] = DEFAULT_TM_WINDOW
    similarity_cap: int = Field(DEFAULT_SIMILARITY_CAP, ge=0)
    h_measure_cap: int = Field(DEFAULT_H_MEASURE_CAP, ge=0)
    # `archive`: every genome the epidemic carried; `final`: the library at the last step.
    pool: Literal["archive", "final"] = DEFAULT_SCREEN_POOL

    @field_validator("tm_window")
    def check_window(cls, window):
        if window[0] > window[1]:
            raise ValueError(f"Empty Tm window {window}")
        return window


class ShortfallReport(BaseModel):
    required: int
    kept: int
    candidates: int
    unique: int
    rejected: dict[str, int] = Field(default_factory=dict)


class DesignResult(BaseModel):
    method: Literal["svs", "random_search"]
    seed: int
    sequences: list[DnaSequence] = Field(default_factory=list)
    profiles: list[ConstraintProfile] = Field(default_factory=list)
    history: list[HistoryRecord] = Field(default_factory=list)
    shortfall: Optional[ShortfallReport] = None
    evaluations: int = 0
    termination: Optional[str] = None


# ======================================================
# =====              ORACLE MODELS                 =====
# ======================================================

class OracleMismatch(BaseModel):
    inputs: list[str]
    fast: int
    oracle: int


class OracleReport(BaseModel):
    name: str
    cases: int = 0
    mismatches: list[OracleMismatch] = Field(default_factory=list)

    @property
    def passed(self):
        return not self.mismatches


# ======================================================
# =====               RUN CONFIG                   =====
# ======================================================

class TmSettings(BaseModel):
    parameter_file: str = DEFAULT_TM_PARAMETER_FILE
    strand_concentration: Optional[float] = Field(None, gt=0)
    salt: Optional[float] = Field(None, gt=0)


class RunConfig(BaseModel):
    mode: Literal["evaluate", "design", "stats", "oracle-check", "resume"]
    inputs: list[str] = Field(default_factory=list)
    output: Optional[str] = None
    format: Literal["csv", "json", "table"] = DEFAULT_OUTPUT_FORMAT
    seed: int = Field(DEFAULT_SEED, ge=0)
    svs: SvsParams = Field(default_factory=SvsParams)
    constraints: ConstraintParams = Field(default_factory=ConstraintParams)
    screen: ScreenCriteria = Field(default_factory=ScreenCriteria)
    tm: TmSettings = Field(default_factory=TmSettings)
    values_mode: bool = False
    compare: bool = False
    baseline: bool = False
    checkpoint_frequency: int = Field(DEFAULT_CHECKPOINT_FREQUENCY, ge=0)
    execution_id: Optional[str] = None
    oracle_cases: int = Field(200, ge=1)

    @model_validator(mode="after")
    def check_mode_fields(self):
        if self.mode in ("evaluate", "stats") and not self.inputs:
            raise ValueError(f"Mode {self.mode!r} needs at least one --input file")
        if self.mode == "resume" and not self.execution_id:
            raise ValueError("Mode 'resume' needs --execution_id")
        # The config seed is the only entropy source.
        if self.svs.seed != self.seed:
            self.svs = self.svs.model_copy(update={"seed": self.seed})
        return self
