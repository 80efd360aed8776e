"""
Workflows behind the `svs.py` command line. Every `cmd_*` takes a resolved
`RunConfig` and returns the process exit status; domain errors propagate as
`SvsError` and are turned into status 1 by the entry point.
"""
import os
import json
import time
from typing import Optional
import pandas as pd
from src.logs import setup_logging
from src.thermo import load_model, tm, values_stats
from src.constraints import profile_set, similarity_total, h_measure_total
from src.svs_engine import run
from src.oracle import format_reports, mean_pairwise_score, random_search_baseline, run_oracle_checks
from src.exceptions import ConfigError, SetSizeError, ShortfallError
from src.models import EpidemicState, GeneralEncoder, RunConfig, TmModel
from src.data import (
    execution_id_for,
    load_existing_execution,
    metadata,
    metadata_lines,
    prepare_new_execution,
    profiles_frame,
    read_sequence_file,
    read_values_file,
    render_table,
    result_folder_for,
    save_final_result,
    write_output,
)

logger = setup_logging(__name__)

EXTENSIONS = {"csv": "csv", "json": "json", "table": "txt"}


def tm_model_for(config: RunConfig) -> TmModel:
    return load_model(config.tm.parameter_file, config.tm.strand_concentration, config.tm.salt)


def _label(path):
    return os.path.splitext(os.path.basename(path))[0]


def _output_path(config: RunConfig, path: str) -> Optional[str]:
    """Destination for the result of one input file: the output itself, or a file inside it."""
    if config.output is None:
        return None
    if len(config.inputs) == 1:
        return config.output
    return os.path.join(config.output, f"{_label(path)}.{EXTENSIONS[config.format]}")


def cmd_evaluate(config: RunConfig) -> int:
    """Profile every input sequence set; one table per input file."""
    model = tm_model_for(config)
    for path in config.inputs:
        start_time = time.time()
        records = read_sequence_file(path)
        if len(records) < 2:
            raise SetSizeError(f"{path}: evaluation needs at least 2 sequences, got {len(records)}")
        names = [name for name, _ in records]
        sequences = [sequence for _, sequence in records]

        profiles = profile_set(sequences, config.constraints, model, names)
        _, similarity = similarity_total(sequences, config.constraints.similarity)
        _, h_measure = h_measure_total(sequences, config.constraints.similarity)
        meta = metadata(config, input=path, totals={"similarity": similarity, "h_measure": h_measure})
        write_output(render_table(profiles_frame(profiles), config.format, meta), _output_path(config, path))
        logger.info(f"Evaluated {len(profiles)} sequences of {path} in {time.time() - start_time:.3f} secs.")
    return 0


def cmd_stats(config: RunConfig) -> int:
    """Per-file mean and sample variance of Tm, optionally ordered by variance."""
    model = None if config.values_mode else tm_model_for(config)
    rows = []
    for path in config.inputs:
        if config.values_mode:
            values = read_values_file(path)
        else:
            values = [tm(sequence, model) for _, sequence in read_sequence_file(path)]
        mean, variance = values_stats(values)
        rows.append({"set": _label(path), "count": len(values), "mean": mean, "variance": variance})

    df = pd.DataFrame(rows, columns=["set", "count", "mean", "variance"])
    if config.compare:
        df = df.sort_values(["variance", "set"], kind="stable").reset_index(drop=True)
        df["rank"] = range(1, len(df) + 1)
        logger.info("Variance ordering: " + " < ".join(df["set"]))
    write_output(render_table(df, config.format, metadata(config)), config.output)
    return 0


def cmd_oracle_check(config: RunConfig) -> int:
    """Fast evaluators against the naive ones; status 1 on any mismatch."""
    reports = run_oracle_checks(
        cases=config.oracle_cases,
        seed=config.seed,
        similarity=config.constraints.similarity,
        hairpin=config.constraints.hairpin,
    )
    write_output(metadata_lines(metadata(config)) + format_reports(reports), config.output)
    return 0 if all(report.passed for report in reports) else 1


def _design(
    config: RunConfig,
    state: Optional[EpidemicState] = None,
    checkpoint_folderpath: Optional[str] = None,
    execution_id: Optional[str] = None,
) -> int:
    model = tm_model_for(config)
    execution_id = execution_id or execution_id_for(config)
    result, _ = run(
        config.svs,
        config.constraints,
        model,
        config.screen,
        state=state,
        checkpoint_frequency=config.checkpoint_frequency,
        checkpoint_folderpath=checkpoint_folderpath,
    )
    result_folderpath = config.output or result_folder_for(execution_id)
    paths = save_final_result(result, config, result_folderpath, checkpoint_folderpath)
    print(f"Execution ID: {execution_id}")
    print(f"Results saved in: {result_folderpath}")

    if config.baseline:
        baseline = random_search_baseline(
            config.svs, config.constraints, model, config.screen, budget=result.evaluations
        )
        p = config.constraints.similarity
        comparison = pd.DataFrame([
            {
                "method": outcome.method,
                "kept": len(outcome.sequences),
                "mean_pairwise": mean_pairwise_score(outcome.sequences, p),
                "evaluations": outcome.evaluations,
            }
            for outcome in (result, baseline)
        ])
        text = render_table(comparison, "csv", metadata(config))
        write_output(text, os.path.join(result_folderpath, "comparison.csv"))
        print(comparison.to_string(index=False))

    if result.shortfall is not None:
        shortfall_path = os.path.join(result_folderpath, "shortfall.json")
        with open(shortfall_path, "w", encoding="utf-8") as f:
            json.dump(result.shortfall.model_dump(), f, ensure_ascii=False, indent=2, cls=GeneralEncoder)
        raise ShortfallError(result.shortfall)
    logger.info(f"Design outputs: {', '.join(paths.values())}")
    return 0


def cmd_design(config: RunConfig) -> int:
    """Run the epidemic, screen its library and write sequences, profiles and history."""
    checkpoint_folderpath = None
    execution_id = None
    if config.checkpoint_frequency:
        execution_id, checkpoint_folderpath = prepare_new_execution(config)
    return _design(config, checkpoint_folderpath=checkpoint_folderpath, execution_id=execution_id)


def cmd_resume(config: RunConfig) -> int:
    """Continue a checkpointed design run with its stored configuration."""
    stored, state, checkpoint_folderpath = load_existing_execution(config.execution_id)
    if state is None:
        logger.warning(f"No checkpoint stored for {config.execution_id}, starting the epidemic again")
    logger.info(f"Resuming execution '{config.execution_id}' from folder: {checkpoint_folderpath}")
    if config.output is not None:
        stored = stored.model_copy(update={"output": config.output})
    return _design(stored, state=state, checkpoint_folderpath=checkpoint_folderpath, execution_id=config.execution_id)


COMMANDS = {
    "evaluate": cmd_evaluate,
    "design": cmd_design,
    "stats": cmd_stats,
    "oracle-check": cmd_oracle_check,
    "resume": cmd_resume,
}


def run_command(config: RunConfig) -> int:
    try:
        command = COMMANDS[config.mode]
    except KeyError:
        raise ConfigError(f"Unknown mode {config.mode!r}")
    return command(config)
