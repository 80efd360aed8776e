# settings.py
import os

# Output format version written into every metadata block.
FORMAT_VERSION = "1.0"
CODE_VERSION = "0.3.0"

# DNA alphabet (5'->3'), complement pairs and the gap symbol used in alignments.
BASES = "ACGT"
COMPLEMENT = {"A": "T", "T": "A", "C": "G", "G": "C"}
GAP = "-"

# ======================================================
# =====          CONSTRAINT DEFAULTS               =====
# ======================================================

DEFAULT_DS = 0.17
DEFAULT_CS = 6
DEFAULT_DH = 0.17
DEFAULT_CH = 6
DEFAULT_RUN_MODE = "start"          # start | suffix
DEFAULT_GAP_MODEL = "shift"         # shift | concat
DEFAULT_ROW_AGGREGATE = "sum"       # sum | max
DEFAULT_R_MIN = 6
DEFAULT_P_MIN = 6
DEFAULT_HAIRPIN_MODE = "mirrored"   # mirrored | literal
DEFAULT_CONTINUITY_THRESHOLD = 2

# ======================================================
# =====            THERMO DEFAULTS                 =====
# ======================================================

PARAMS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "params")
DEFAULT_TM_PARAMETER_FILE = os.path.join(PARAMS_DIR, "sugimoto_1996.params")
# Calibrated once against the published SVS Tm column, then frozen.
DEFAULT_STRAND_CONCENTRATION = 1e-5  # mol/L
DEFAULT_SALT = 0.06                  # mol/L
GAS_CONSTANT = 1.987                 # cal/(K*mol)

# ======================================================
# =====          EPIDEMIC (SVS) DEFAULTS           =====
# ======================================================

DEFAULT_EVOLUTIONS = 20         # Ne
DEFAULT_EPIDEMIC_TIME = 20      # T
DEFAULT_NUM_VIRUS = 20          # m
DEFAULT_NUM_HOST = 300          # h
DEFAULT_SPACE = (20.0, 20.0)    # Lm x Ln
DEFAULT_SEQUENCE_LENGTH = 20
DEFAULT_DEATH_THRESHOLD = 60.0  # TD
DEFAULT_OMEGA = (0.5, 0.5)
DEFAULT_IMMUNE_PROBABILITY = 0.3
DEFAULT_TYPE_II_PROBABILITY = 0.3
DEFAULT_TRANSFORM_PROBABILITY = 0.5
DEFAULT_BARRIER_FRACTION = 0.7
DEFAULT_NATURAL_IMMUNITY = 0.05
DEFAULT_SPREAD_RADIUS = 3.0
DEFAULT_DEATH_TIMER = (2, 5)
DEFAULT_CURE_TIMER = (3, 8)
DEFAULT_TRANSFORM_TIMER = (2, 6)
DEFAULT_SEED = 1

# Infectiousness S(v) = max(0, offset - G(v)/m')
INFECTIOUSNESS_OFFSET = 120.0

# ======================================================
# =====            SCREENING DEFAULTS              =====
# ======================================================

DEFAULT_MIN_OUT = 7
DEFAULT_SELF_DIMER_CAP = 8
DEFAULT_TM_WINDOW = (61.5, 65.5)
DEFAULT_SIMILARITY_CAP = 12
DEFAULT_H_MEASURE_CAP = 12
# Genomes offered to the screen: every genome the epidemic carried, or only the final library.
DEFAULT_SCREEN_POOL = "archive"     # archive | final

# ======================================================
# =====              TOOL SETTINGS                 =====
# ======================================================

DEFAULT_CHECKPOINT_FREQUENCY = 0  # Each N steps (0 = disabled)
DEFAULT_CHECKPOINT_FOLDER = ".checkpoints"
DEFAULT_RESULT_FOLDER = "results"
DEFAULT_OUTPUT_FORMAT = "csv"
ORACLE_MAX_LENGTH = 64

# Logger settings.
LOG_DIR = ".logs"
