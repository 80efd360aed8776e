import io
import os
import json
import time
import uuid
import shutil
from typing import Optional
import pandas as pd
from pydantic import ValidationError
from src.logs import setup_logging
from src.seq_core import parse_sequence, render
from src.exceptions import ConfigError, SequenceParseError, ValueParseError
from src.models import DesignResult, DnaSequence, GeneralEncoder, RunConfig, EpidemicState
from src.settings import (
    CODE_VERSION,
    FORMAT_VERSION,
    DEFAULT_CHECKPOINT_FOLDER,
    DEFAULT_RESULT_FOLDER,
)


# Get an instance of a logger
logger = setup_logging(__name__)

# Flat config keys of the `constraints.` section and where they live in ConstraintParams.
CONSTRAINT_KEYS = {
    "ds": ("similarity", "ds"),
    "cs": ("similarity", "cs"),
    "dh": ("similarity", "dh"),
    "ch": ("similarity", "ch"),
    "run_mode": ("similarity", "run_mode"),
    "gap_model": ("similarity", "gap_model"),
    "row_aggregate": ("similarity", "row_aggregate"),
    "r_min": ("hairpin", "r_min"),
    "p_min": ("hairpin", "p_min"),
    "hairpin_mode": ("hairpin", "mode"),
    "continuity_threshold": ("continuity_threshold",),
}
SECTIONS = ("svs", "screen", "tm")
TOP_LEVEL_KEYS = ("seed", "format", "output", "checkpoint_frequency", "oracle_cases")


# ======================================================
# =====                 READERS                    =====
# ======================================================

def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read().splitlines()
    except OSError as e:
        raise SequenceParseError(f"Cannot read file: {e.strerror}", path=path) from e


def read_sequence_file(path: str) -> list[tuple[str, DnaSequence]]:
    """
    Read a plain-text, FASTA-tolerant sequence file.

    One sequence per line. A `>` header names the sequence that follows it;
    unnamed sequences get `S1, S2, ...` by position. Blank lines and `#`
    comment lines (e.g. a metadata block) are skipped.

    Parameters
    ----------
    path : str
        Sequence file path.

    Returns
    -------
    records : list of (str, DnaSequence)
        Name and parsed sequence, in file order.
    """
    records = []
    header = None
    for line_number, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith(">"):
            header = stripped[1:].strip() or None
            continue
        sequence = parse_sequence(line, path=path, line=line_number)
        records.append((header or f"S{len(records) + 1}", sequence))
        header = None

    if not records:
        raise SequenceParseError("No sequences found", path=path)
    logger.debug(f"Read {len(records)} sequences from {path}")
    return records


def read_values_file(path: str) -> list[float]:
    """Read one number per line (last whitespace-separated token); `#` and `>` lines are skipped."""
    values = []
    for line_number, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#>":
            continue
        token = stripped.split()[-1]
        try:
            values.append(float(token))
        except ValueError:
            raise ValueParseError(f"Not a number: {token!r}", path=path, line=line_number)

    if not values:
        raise ValueParseError("No values found", path=path)
    return values


def read_key_value_file(path: str) -> dict[str, str]:
    """
    Parse `key = value` lines. `#` starts a comment line; blank lines are skipped.

    Raises
    ------
    ConfigError
        Missing file or a line without `=`.
    """
    if not os.path.exists(path):
        raise ConfigError(f"File not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{path}: line {line_number} is not `key = value`: {stripped!r}")
            values[key.strip()] = value.strip()
    return values


# ======================================================
# =====              CONFIGURATION                 =====
# ======================================================

def parse_override(text):
    """Split a `--set key=value` argument."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override must be key=value, got {text!r}")
    return key.strip(), value.strip()


def _coerce(value):
    # Ranges and space extents are written as comma separated pairs.
    if "," in value:
        return [part.strip() for part in value.split(",")]
    return value


def nest_config_values(values):
    """
    Turn flat dotted keys (`svs.num_host`, `constraints.row_aggregate`, ...)
    into the nested dictionary `RunConfig` validates.
    """
    nested = {}
    for key, value in values.items():
        if key == "svs.seed":
            key = "seed"
        section, _, name = key.partition(".")
        value = _coerce(value)
        if not name and section in TOP_LEVEL_KEYS:
            nested[section] = value
        elif section == "constraints" and name in CONSTRAINT_KEYS:
            target = nested.setdefault("constraints", {})
            *parents, leaf = CONSTRAINT_KEYS[name]
            for parent in parents:
                target = target.setdefault(parent, {})
            target[leaf] = value
        elif section in SECTIONS and name:
            nested.setdefault(section, {})[name] = value
        else:
            raise ConfigError(f"Unknown configuration key {key!r}")
    return nested


def merge_config(base, update):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            merge_config(base[key], value)
        else:
            base[key] = value
    return base


def build_run_config(options: dict, config_file: Optional[str] = None, overrides=()) -> RunConfig:
    """
    Resolve a `RunConfig`: the config file, then explicit command-line
    options, then `--set` overrides, each layer replacing the previous one.
    Options left as None are not applied.

    Raises
    ------
    ConfigError
        Unknown keys or values rejected by the model validators.
    """
    raw = {}
    if config_file is not None:
        raw = nest_config_values(read_key_value_file(config_file))
    merge_config(raw, {key: value for key, value in options.items() if value is not None})
    if overrides:
        merge_config(raw, nest_config_values(dict(parse_override(o) for o in overrides)))
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def execution_id_for(config: RunConfig) -> str:
    """Deterministic id: identical resolved configs share their result folder."""
    payload = json.dumps(config.model_dump(exclude={"mode", "execution_id", "output"}), sort_keys=True, cls=GeneralEncoder)
    return uuid.uuid5(uuid.NAMESPACE_OID, payload).hex


# ======================================================
# =====                 WRITERS                    =====
# ======================================================

def metadata(config: RunConfig, **extra) -> dict:
    meta = {
        "format_version": FORMAT_VERSION,
        "code_version": CODE_VERSION,
        "seed": config.seed,
        "config": config.model_dump(exclude={"execution_id", "output"}),
    }
    meta.update(extra)
    return meta


def metadata_lines(meta):
    return "".join(
        f"# {key}: {json.dumps(value, sort_keys=True, cls=GeneralEncoder)}\n"
        for key, value in meta.items()
    )


def render_table(df: pd.DataFrame, fmt: str, meta: dict) -> str:
    """
    Render a DataFrame as csv, json or a plain table, metadata block first.

    CSV and table output prefix the metadata as `#` lines; JSON output keeps
    it under a `metadata` key next to the `rows`.
    """
    if fmt == "json":
        payload = {"metadata": meta, "rows": df.to_dict(orient="records")}
        return json.dumps(payload, ensure_ascii=False, indent=2, cls=GeneralEncoder) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        df.to_csv(buffer, index=False, lineterminator="\n")
        return metadata_lines(meta) + buffer.getvalue()
    return metadata_lines(meta) + df.to_string(index=False) + "\n"


def render_fasta(records, meta: dict) -> str:
    body = "".join(f">{name}\n{render(sequence)}\n" for name, sequence in records)
    return metadata_lines(meta) + body


def write_output(text: str, path: Optional[str] = None):
    """Write rendered output to `path`, or to stdout when no path is given."""
    if path is None:
        print(text, end="")
        return
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"Output saved: {path}")


def profiles_frame(profiles):
    return pd.DataFrame([profile.model_dump() for profile in profiles])


def history_frame(history):
    return pd.DataFrame([record.model_dump() for record in history])


def save_final_result(
    result: DesignResult,
    config: RunConfig,
    result_folderpath: str,
    checkpoint_folderpath: Optional[str] = None,
) -> dict[str, str]:
    """
    Save sequences, profiles and history of a design run into its result folder,
    then remove the run's checkpoint folder.

    Parameters
    ----------
    result : DesignResult
        Finished run.
    config : RunConfig
        Resolved configuration, written into every metadata block.
    result_folderpath : str
        Destination folder.
    checkpoint_folderpath : str, optional
        Checkpoint folder to delete once the result is saved.

    Returns
    -------
    paths : dict
        Written file per artifact (`sequences`, `profiles`, `history`).
    """
    os.makedirs(result_folderpath, exist_ok=True)
    meta = metadata(config, method=result.method, termination=result.termination)
    extension = {"csv": "csv", "json": "json", "table": "txt"}[config.format]
    paths = {
        "sequences": os.path.join(result_folderpath, "sequences.txt"),
        "profiles": os.path.join(result_folderpath, f"profiles.{extension}"),
        "history": os.path.join(result_folderpath, "history.csv"),
    }
    records = [(profile.name, sequence) for profile, sequence in zip(result.profiles, result.sequences)]
    write_output(render_fasta(records, meta), paths["sequences"])
    write_output(render_table(profiles_frame(result.profiles), config.format, meta), paths["profiles"])
    write_output(render_table(history_frame(result.history), "csv", meta), paths["history"])

    if checkpoint_folderpath is not None and os.path.exists(checkpoint_folderpath):
        shutil.rmtree(checkpoint_folderpath)
        logger.debug(f"Checkpoint folder `{checkpoint_folderpath}` and its contents have been removed.")
    return paths


# ======================================================
# =====               CHECKPOINTS                  =====
# ======================================================

def prepare_new_execution(config: RunConfig, base_folder: str = DEFAULT_CHECKPOINT_FOLDER) -> tuple[str, str]:
    """
    Create the checkpoint folder of a new design run and store its config.

    Returns
    -------
    execution_id : str
    checkpoint_folderpath : str
    """
    execution_id = execution_id_for(config)
    start_date = time.strftime("%Y%m%d_%H%M%S")
    checkpoint_folderpath = os.path.join(base_folder, f"{execution_id}_{start_date}")
    os.makedirs(checkpoint_folderpath, exist_ok=True)

    config_path = os.path.join(checkpoint_folderpath, "run_config.json")
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(config.model_dump(), f, ensure_ascii=False, indent=2, cls=GeneralEncoder)
    logger.info(f"New execution folder created: {checkpoint_folderpath}")
    return execution_id, checkpoint_folderpath


def save_checkpoint(state: EpidemicState, checkpoint_folderpath: str) -> str:
    """Replace the previous checkpoint of the run with the current epidemic state."""
    os.makedirs(checkpoint_folderpath, exist_ok=True)
    for filename in os.listdir(checkpoint_folderpath):
        if filename.startswith("checkpoint"):
            os.remove(os.path.join(checkpoint_folderpath, filename))

    state.sync_rng_state()
    checkpoint_filename = os.path.join(checkpoint_folderpath, f"checkpoint_{state.t}.json")
    with open(checkpoint_filename, "w", encoding="utf-8") as f:
        json.dump(state.model_dump(), f, ensure_ascii=False, indent=2, cls=GeneralEncoder)
    logger.info(f"Checkpoint created: {checkpoint_filename} (step {state.t})")
    return checkpoint_filename


def load_existing_execution(
    execution_id: str, base_folder: str = DEFAULT_CHECKPOINT_FOLDER
) -> tuple[RunConfig, Optional[EpidemicState], str]:
    """
    Load the stored config and latest epidemic checkpoint of an execution.

    Identical configs share an execution id, so several folders can match;
    the most recently started one (latest timestamp suffix) is loaded.

    Returns
    -------
    config : RunConfig
    state : EpidemicState or None
        None when the run stopped before its first checkpoint.
    checkpoint_folderpath : str

    Raises
    ------
    ConfigError
        No folder or no stored config for `execution_id`.
    """
    folders = []
    if os.path.isdir(base_folder):
        folders = sorted(
            folder for folder in os.listdir(base_folder)
            if folder.startswith(execution_id + "_") and os.path.isdir(os.path.join(base_folder, folder))
        )
    if not folders:
        raise ConfigError(f"Execution folder for ID {execution_id} not found in {base_folder}.")
    if len(folders) > 1:
        logger.warning(f"{len(folders)} folders found for execution ID {execution_id}, resuming the newest: {folders[-1]}")
    checkpoint_folderpath = os.path.join(base_folder, folders[-1])

    config_path = os.path.join(checkpoint_folderpath, "run_config.json")
    if not os.path.exists(config_path):
        raise ConfigError(f"run_config.json not found in {checkpoint_folderpath}.")
    with open(config_path, "r", encoding="utf-8") as f:
        config = RunConfig.model_validate(json.load(f))

    state = None
    for filename in os.listdir(checkpoint_folderpath):
        if filename.startswith("checkpoint"):
            with open(os.path.join(checkpoint_folderpath, filename), "r", encoding="utf-8") as f:
                state = EpidemicState.model_validate(json.load(f))
            break
    return config, state, checkpoint_folderpath


def result_folder_for(execution_id: str, base_folder: str = DEFAULT_RESULT_FOLDER) -> str:
    return os.path.join(base_folder, execution_id)
