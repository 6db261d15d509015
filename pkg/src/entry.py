"""Command-line entry point of ``rcml``.

Every subcommand reads an optional flat config file (``--config``), applies
flag overrides, records the run (``run_manifest.json`` next to its outputs, or the
``run`` entry of the dataset manifest for ``gen-data``) and exits
with the code of the failure family:

- ``0``: success
- ``1``: usage error (unknown key, invalid value, bad flag)
- ``2``: data error (missing, malformed or inconsistent files)
- ``3``: numeric failure (failed gradient or reduction check, divergence)

Quick Start Examples
====================

.. code-block:: bash

    rcml gen-data --seed 42 --out data/
    rcml train --data data/ --out runs/full
    rcml eval --data data/ --checkpoint runs/full/checkpoint.npz --mode all
    rcml gradcheck --gradcheck-dim 8
    rcml clip-check --seed 42
    rcml ablate --config paper.config --data data/ --out runs/ablate
    rcml beta-sweep --data data/ --out runs/sweep --betas 0 0.5 1
    rcml dump-embeddings --data data/ --checkpoint runs/full/checkpoint.npz

Environment Variables
=====================
- **RCML_LOG_LEVEL**: default of ``--log-level``
- **RCML_DATA_DIR**: default of ``--data``
- **RCML_OUTPUT_DIR**: default of ``--out``
- **RCML_WORKERS**: default of ``--workers``
"""

from __future__ import annotations

import argparse
import logging
import sys
import types
import typing
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError
from pydantic.fields import FieldInfo

from . import __version__
from .config import Settings, get_settings
from .dataio import DatasetSplit, generate, load_directory, split_for_training, write_json
from .dataio.loader import EDGES_FILE, SAMPLES_FILE
from .dataio.vocabulary import generic_intra_tokens
from .evalsuite.report import dump_embeddings, format_table, write_csv, write_metrics_json
from .evalsuite.runners import AblationRunner, BetaSweepRunner, ExperimentSetup, evaluate
from .exceptions import RCMLError, TrainingDivergedError
from .fingerprint import file_sha256
from .modeling.checkpoint import load_checkpoint, save_checkpoint
from .models.cli import Command, LogLevel, RunConfig
from .models.domain.configs import ModelConfig
from .models.domain.records import RelationEdge, Sample
from .training import clip_check, fit, model_grad_check, random_samples

_LOG = logging.getLogger(__name__)

RUN_MANIFEST = "run_manifest.json"
CHECKPOINT_FILE = "checkpoint.npz"
CLIP_CHECK_SAMPLES = 64


class _UsageParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _flag_kwargs(info: FieldInfo) -> dict[str, Any]:
    """argparse options for one RunConfig field, derived from its annotation."""
    annotation = info.annotation
    if isinstance(annotation, typing.TypeAliasType):
        annotation = annotation.__value__
    origin = typing.get_origin(annotation)
    if annotation is bool:
        return {"action": "store_true"}
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        return {"choices": [member.value for member in annotation]}
    if origin is typing.Literal:
        return {"choices": list(typing.get_args(annotation))}
    if origin is tuple:
        return {"nargs": "+", "type": typing.get_args(annotation)[0]}
    if origin in (typing.Union, types.UnionType):
        inner = next(arg for arg in typing.get_args(annotation) if arg is not type(None))
        return {"type": inner}
    return {"type": annotation}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    paths = common.add_argument_group("paths and process")
    paths.add_argument("--config", type=str, default=None, help="Flat key = value config file")
    paths.add_argument("--data", type=str, default=None, help="Dataset directory (default: RCML_DATA_DIR)")
    paths.add_argument("--out", type=str, default=None, help="Output directory (default: RCML_OUTPUT_DIR)")
    paths.add_argument("--checkpoint", type=str, default=None, help="Checkpoint file (default: <out>/checkpoint.npz)")
    paths.add_argument(
        "--log-level",
        type=str,
        default=None,
        choices=[level.value for level in LogLevel],
        help="Logging level (default: RCML_LOG_LEVEL)",
    )
    settings = common.add_argument_group("run configuration (overrides --config)")
    for name, info in RunConfig.model_fields.items():
        settings.add_argument(
            f"--{name.replace('_', '-')}",
            dest=name,
            default=argparse.SUPPRESS,
            help=f"{info.description} (default: {info.default})",
            **_flag_kwargs(info),
        )
    return common


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Only flags that were actually given appear in the namespace for
    RunConfig fields, so file values survive unless overridden.

    Examples
    --------
    .. code-block:: python

        args = parse_args(["train", "--beta", "0.4", "--data", "data/"])

    """
    parser = _UsageParser(
        prog="rcml",
        description="Relation-conditioned multimodal contrastive learning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_options()
    helps = {
        Command.GEN_DATA: "Generate a synthetic relational dataset",
        Command.TRAIN: "Train a model and write a checkpoint",
        Command.EVAL: "Evaluate a checkpoint on the held-out edges",
        Command.GRADCHECK: "Compare tape gradients with finite differences",
        Command.CLIP_CHECK: "Check the reduction to the CLIP-style loss",
        Command.ABLATE: "Train and evaluate every ablation setting",
        Command.BETA_SWEEP: "Train and evaluate over a grid of beta values",
        Command.DUMP_EMBEDDINGS: "Write relation-conditioned embeddings of the test edges",
    }
    for command, text in helps.items():
        sub = commands.add_parser(command.value, parents=[common], help=text, description=text)
        if command is Command.GRADCHECK:
            sub.add_argument(
                "--inject-fault",
                action="store_true",
                help="Insert a primitive with a wrong gradient; the check must fail",
            )
    return parser.parse_args(argv)


def configure_logging(log_level: str) -> None:
    """Configure logging with the specified log level.

    Raises
    ------
    ValueError
        If an invalid log level is specified

    """
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        error_msg = f"Invalid log level: {log_level}"
        raise ValueError(error_msg)

    logging.basicConfig(
        level=numeric_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def create_run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Resolve the config file plus flag overrides into a RunConfig.

    Raises
    ------
    ConfigurationError
        If the file is unreadable or names an unknown key
    ValidationError
        If a value is out of range

    """
    overrides = {name: getattr(args, name) for name in RunConfig.model_fields if hasattr(args, name)}
    if "workers" not in overrides:
        overrides["workers"] = settings.workers
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig.resolve({}, overrides, origin="flags")


@dataclass(frozen=True)
class RunContext:
    """Everything a command handler needs."""

    command: Command
    config: RunConfig
    args: argparse.Namespace
    settings: Settings

    @property
    def data_dir(self) -> Path:
        return Path(self.args.data or self.settings.data_dir)

    @property
    def out_dir(self) -> Path:
        return Path(self.args.out or self.settings.output_dir)

    @property
    def checkpoint(self) -> Path:
        return Path(self.args.checkpoint) if self.args.checkpoint else self.out_dir / CHECKPOINT_FILE

    def run_record(self, inputs: Sequence[Path] = (), root: Path | None = None) -> dict[str, object]:
        """Command, resolved config, hash, seed, version and input hashes.

        Input paths are keyed relative to ``root`` when it is given.
        """
        return {
            "command": self.command.value,
            "version": __version__,
            "seed": self.config.seed,
            "config": self.config.model_dump(mode="json"),
            "config_hash": self.config.config_hash(),
            "inputs": {
                str(path.relative_to(root) if root else path): file_sha256(path) for path in inputs if path.is_file()
            },
        }

    def write_manifest(self, directory: Path, inputs: Sequence[Path] = ()) -> Path:
        """Write the run record to ``run_manifest.json`` in ``directory``."""
        return write_json(self.run_record(inputs), directory / RUN_MANIFEST)


@dataclass(frozen=True)
class LoadedData:
    split: DatasetSplit
    model: ModelConfig
    num_types: int | None
    inputs: tuple[Path, ...]


def model_config_for_data(
    base: ModelConfig, samples: Sequence[Sample], edges: Sequence[RelationEdge], vocab_size: int | None
) -> ModelConfig:
    """Widen ``base`` to fit every sequence and patch list of the dataset."""
    longest_text = max(
        base.max_text_len,
        max(len(s.text_tokens) for s in samples),
        max((len(e.relation_text_tokens) for e in edges), default=0),
        len(generic_intra_tokens()),
    )
    return base.model_copy(
        update={
            "vocab_size": vocab_size or base.vocab_size,
            "max_text_len": longest_text,
            "max_patches": max(len(s.image_patches) for s in samples) + 1,
            "patch_dim": len(samples[0].image_patches[0]),
        }
    )


def load_data(ctx: RunContext) -> LoadedData:
    files, samples, edges = load_directory(ctx.data_dir)
    cfg = ctx.config
    split = split_for_training(samples, edges, cfg.test_fraction, cfg.validation_fraction, cfg.seed)
    generated = files.manifest.get("config", {})
    model = model_config_for_data(cfg.to_model(), samples, edges, generated.get("vocab_size"))
    num_types = generated.get("num_relation_types")
    return LoadedData(split, model, num_types, (files.samples_path, files.edges_path))


def run_gen_data(ctx: RunContext) -> int:
    out = Path(ctx.args.out or ctx.settings.data_dir)
    files = generate(ctx.config.to_generator(), out)
    # the dataset directory holds exactly three files; the run record goes into manifest.json
    files.manifest["run"] = ctx.run_record((files.samples_path, files.edges_path), root=out)
    write_json(files.manifest, files.manifest_path)
    counts = files.manifest["counts"]
    print(f"wrote {counts['samples']} samples and {counts['edges']} edges to {out}")
    return 0


def run_train(ctx: RunContext) -> int:
    data = load_data(ctx)
    ctx.write_manifest(ctx.out_dir, data.inputs)
    try:
        result = fit(data.split, ctx.config.to_train(data.model))
    except TrainingDivergedError as e:
        if e.last_good is not None:
            save_checkpoint(e.last_good, ctx.out_dir / "checkpoint.diverged.npz")
        raise
    save_checkpoint(result.params, ctx.checkpoint)
    write_json(result.report.model_dump(mode="json"), ctx.out_dir / "train_report.json")
    print(
        f"trained {len(result.report.epochs)} epochs (best {result.report.best_epoch}), "
        f"final loss {result.report.final_loss}; checkpoint {ctx.checkpoint}"
    )
    return 0


def run_eval(ctx: RunContext) -> int:
    params = load_checkpoint(ctx.checkpoint)
    data = load_data(ctx)
    ctx.write_manifest(ctx.out_dir, (*data.inputs, ctx.checkpoint))
    report = evaluate(
        params,
        data.split,
        ctx.config.to_eval(),
        tasks=ctx.config.task,
        num_types=data.num_types,
        config_hash=ctx.config.config_hash(),
    )
    write_metrics_json(report, ctx.out_dir / "metrics.json")
    table = format_table([report])
    (ctx.out_dir / "metrics.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def run_gradcheck(ctx: RunContext) -> int:
    cfg = ctx.config
    report = model_grad_check(
        dim=cfg.gradcheck_dim,
        batch_size=cfg.gradcheck_batch,
        beta=cfg.beta,
        seed=cfg.seed,
        inject_fault=ctx.args.inject_fault,
    )
    ctx.write_manifest(ctx.out_dir)
    write_json(report.model_dump(mode="json"), ctx.out_dir / "gradcheck.json")
    print(
        f"max relative error {report.max_relative_error:.3e} in {report.worst_parameter} "
        f"(tolerance {report.tolerance:.0e}): {'pass' if report.passed else 'FAIL'}"
    )
    return 0 if report.passed else 3


def run_clip_check(ctx: RunContext) -> int:
    cfg = ctx.config
    samples = random_samples(
        max(CLIP_CHECK_SAMPLES, cfg.clip_batch_size),
        cfg.vocab_size,
        cfg.tokens_per_item,
        cfg.patches_per_item,
        cfg.patch_dim,
        cfg.seed,
    )
    model = model_config_for_data(cfg.to_model(), samples, [], None)
    report = clip_check(samples, model, cfg.tau, cfg.clip_batches, cfg.clip_batch_size, cfg.seed)
    ctx.write_manifest(ctx.out_dir)
    write_json(report.model_dump(mode="json"), ctx.out_dir / "clip_check.json")
    print(
        f"hard gap {report.max_gap:.3e} over {report.batches} batches: {'pass' if report.passed else 'FAIL'}; "
        f"soft beta=1 gap {report.soft_gap:.3e}"
    )
    return 0 if report.passed else 3


def _experiment_setup(ctx: RunContext, data: LoadedData) -> ExperimentSetup:
    return ExperimentSetup(
        split=data.split,
        train=ctx.config.to_train(data.model),
        evaluation=ctx.config.to_eval(),
        config_hash=ctx.config.config_hash(),
        num_types=data.num_types,
    )


def run_ablate(ctx: RunContext) -> int:
    data = load_data(ctx)
    ctx.write_manifest(ctx.out_dir, data.inputs)
    rows = AblationRunner(_experiment_setup(ctx, data)).run()
    write_csv(rows, ctx.out_dir / "ablation.csv")
    write_metrics_json(rows, ctx.out_dir / "ablation.json")
    print(format_table(rows), end="")
    return 0


def run_beta_sweep(ctx: RunContext) -> int:
    data = load_data(ctx)
    ctx.write_manifest(ctx.out_dir, data.inputs)
    rows = BetaSweepRunner(_experiment_setup(ctx, data), ctx.config.betas).run()
    write_csv(rows, ctx.out_dir / "beta_sweep.csv")
    write_metrics_json(rows, ctx.out_dir / "beta_sweep.json")
    print(format_table(rows), end="")
    return 0


def run_dump_embeddings(ctx: RunContext) -> int:
    params = load_checkpoint(ctx.checkpoint)
    data = load_data(ctx)
    ctx.write_manifest(ctx.out_dir, (*data.inputs, ctx.checkpoint))
    target = ctx.out_dir / "embeddings.jsonl"
    lines = dump_embeddings(params, data.split, target, ctx.config.chunk_size)
    print(f"wrote {lines} embeddings to {target}")
    return 0


HANDLERS: dict[Command, Callable[[RunContext], int]] = {
    Command.GEN_DATA: run_gen_data,
    Command.TRAIN: run_train,
    Command.EVAL: run_eval,
    Command.GRADCHECK: run_gradcheck,
    Command.CLIP_CHECK: run_clip_check,
    Command.ABLATE: run_ablate,
    Command.BETA_SWEEP: run_beta_sweep,
    Command.DUMP_EMBEDDINGS: run_dump_embeddings,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run one ``rcml`` command and return its exit code.

    Parameters
    ----------
    argv : Sequence[str] | None, optional
        Command-line arguments. If None, uses sys.argv.

    Examples
    --------
    .. code-block:: python

        code = main(["gen-data", "--num-samples", "100", "--out", "data/"])

    """
    args = parse_args(argv)
    try:
        settings = get_settings()
        configure_logging(args.log_level or settings.log_level)
        command = Command(args.command)
        ctx = RunContext(command, create_run_config(args, settings), args, settings)
        _LOG.info("Starting %s (config hash %s)", command.value, ctx.config.config_hash()[:12])
        code = HANDLERS[command](ctx)
    except RCMLError as e:
        _LOG.debug("Command failed", exc_info=True)
        print(f"rcml: error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"rcml: error: invalid configuration: {e}", file=sys.stderr)
        return 1
    _LOG.info("Finished %s with exit code %d", command.value, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
