#!/usr/bin/env python3
"""
Sparse meta-learning command line tool
"""

import click
import functools
import logging
import sys
from pathlib import Path
from rich.console import Console
from rich.table import Table
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from sparsemeta.config import settings
from sparsemeta.exceptions import SparseMetaError
from sparsemeta.models.episode import Split
from sparsemeta.schemas.bounds import BoundInputs
from sparsemeta.services.bound_service import summarize
from sparsemeta.services.checkpoint_service import load_checkpoint
from sparsemeta.services.experiment_service import (
    EVAL_FILE,
    evaluate_checkpoint,
    load_experiment_config,
    run_experiment,
)
from sparsemeta.services.metrics_service import MetricsWriter
from sparsemeta.services.pruning_service import sparsity_report
from cli.export import gapcurve

console = Console()


def reports_errors(command):
    """Turn toolkit errors into a red message and exit status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except SparseMetaError as e:
            console.print(f"[red]Error:[/red] {e}")
            sys.exit(1)
        except ValueError as e:
            console.print(f"[red]Invalid input:[/red] {e}")
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option(settings.app_version, prog_name=settings.app_name)
@click.option("--log-level", default=None, help="Override the configured log level")
def cli(log_level):
    """Sparse meta-learning CLI: Reptile with iterative pruning"""
    level = getattr(logging, log_level.upper(), None) if log_level else settings.log_level_value
    logging.basicConfig(level=level or logging.INFO, format=settings.log_format)


def _run(config, seed, out, workers, init=None, stop_after_pretrain=False):
    cfg = load_experiment_config(config, {"master_seed": seed, "output_dir": out})
    checkpoint = load_checkpoint(init) if init else None

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console,
    ) as progress:
        task = progress.add_task("Meta-training...", total=None)

        def on_progress(completed, total):
            progress.update(task, completed=completed, total=total)

        result = run_experiment(
            cfg,
            init=checkpoint,
            stop_after_pretrain=stop_after_pretrain,
            workers=workers,
            on_progress=on_progress,
        )

    if result.metrics:
        table = Table(title="Final evaluation")
        table.add_column("Iteration", style="cyan")
        table.add_column("Phase", style="magenta")
        table.add_column("Split")
        table.add_column("Score", style="green")
        table.add_column("95% CI")
        table.add_column("Loss")
        table.add_column("Zero rate", style="yellow")
        for record in result.metrics[-2:]:
            table.add_row(
                str(record.meta_iter),
                record.phase.value,
                record.split.value,
                f"{record.accuracy:.4f}",
                f"± {record.ci_halfwidth:.4f}",
                f"{record.loss:.4f}",
                f"{record.current_rate:.3f}",
            )
        console.print(table)

    console.print(f"[green]✓[/green] Metrics written to {result.metrics_path}")
    console.print(f"[green]✓[/green] Checkpoint written to {result.checkpoint_path}")


@cli.command()
@click.option("--config", "config", type=click.Path(), required=True, help="Experiment config file")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config)")
@click.option("--out", type=click.Path(), default=None, help="Output directory")
@click.option("--workers", type=int, default=None, help="Threads for inner loops")
@reports_errors
def pretrain(config, seed, out, workers):
    """Run only the dense pretraining phase and save pretrain.ckpt"""
    _run(config, seed, out, workers, stop_after_pretrain=True)


@cli.command()
@click.option("--config", "config", type=click.Path(), required=True, help="Experiment config file")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config)")
@click.option("--out", type=click.Path(), default=None, help="Output directory")
@click.option("--init", "init", type=click.Path(), default=None, help="Continue from this checkpoint")
@click.option("--workers", type=int, default=None, help="Threads for inner loops")
@reports_errors
def run(config, seed, out, init, workers):
    """Run the full pretrain / prune / retrain schedule"""
    _run(config, seed, out, workers, init=init)


@cli.command("eval")
@click.option("--config", "config", type=click.Path(), required=True, help="Experiment config file")
@click.option("--checkpoint", type=click.Path(), required=True, help="Checkpoint to evaluate")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config)")
@click.option("--split", type=click.Choice([s.value for s in Split]), default=Split.META_TEST.value)
@click.option("--workers", type=int, default=None, help="Threads for evaluation episodes")
@click.option("--out", type=click.Path(), default=None, help="Also write the record to DIR/eval.csv")
@reports_errors
def evaluate_command(config, checkpoint, seed, split, workers, out):
    """Few-shot evaluation of a checkpoint on one meta-split"""
    cfg = load_experiment_config(config, {"master_seed": seed})
    ckpt = load_checkpoint(checkpoint)
    record = evaluate_checkpoint(cfg, ckpt, Split(split), workers)

    console.print(f"[bold]Evaluation ({record.split.value} split, {cfg.eval_tasks} episodes)[/bold]")
    console.print(f"{cfg.resolved_metric.value}: {record.accuracy:.4f} ± {record.ci_halfwidth:.4f}")
    console.print(f"Loss: {record.loss:.4f}")
    console.print(f"Zero rate: {record.current_rate:.3f}")

    if out:
        with MetricsWriter(Path(out) / EVAL_FILE) as writer:
            writer.write(record)
        console.print(f"[green]✓[/green] Metrics written to {Path(out) / EVAL_FILE}")


@cli.command()
@click.option("--B", "B", type=float, required=True, help="Loss upper bound")
@click.option("--G", "G", type=float, required=True, help="Lipschitz constant")
@click.option("--H", "H", type=float, required=True, help="Smoothness constant")
@click.option("--R", "R", type=float, required=True, help="Parameter domain radius")
@click.option("--eta", type=float, required=True, help="Inner learning rate")
@click.option("--p", "p", type=int, required=True, help="Total parameters")
@click.option("--k", "k", type=int, required=True, help="Kept parameters")
@click.option("--M", "M", type=int, required=True, help="Meta-training tasks")
@click.option("--delta", type=float, required=True, help="Failure probability")
@click.option("--empirical-risk", type=float, default=None, help="Empirical margin risk")
@reports_errors
def bound(B, G, H, R, eta, p, k, M, delta, empirical_risk):
    """Evaluate the dense and sparse generalization-gap bounds"""
    try:
        inputs = BoundInputs(B=B, G=G, H=H, R=R, eta=eta, p=p, k=k, M=M, delta=delta)
    except ValueError as e:
        raise click.BadParameter(str(e))
    summary = summarize(inputs, empirical_risk)

    table = Table(title="Generalization gap bounds")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("dense gap", f"{summary.dense:.6f}")
    table.add_row("sparse gap", f"{summary.sparse:.6f}")
    table.add_row("support union term", f"{summary.union:.6f}")
    table.add_row("statement log term", f"{summary.statement_log_term:.6f}")
    table.add_row("sparse / dense", f"{summary.ratio:.4f}")
    if summary.margin is not None:
        table.add_row("margin risk bound", f"{summary.margin:.6f}")
    console.print(table)


@cli.command()
@click.argument("checkpoint", type=click.Path())
@reports_errors
def inspect(checkpoint):
    """Show a checkpoint's architecture and sparsity"""
    ckpt = load_checkpoint(checkpoint)
    net = ckpt.network()

    console.print(f"[bold]Checkpoint {checkpoint}[/bold]")
    console.print(f"Format version: {ckpt.version}")
    console.print(f"Master seed: {ckpt.master_seed}")
    console.print(f"Meta-iteration: {ckpt.meta_iter}")
    console.print(f"Parameters: {net.num_parameters}")
    console.print(f"Mask: {'present' if ckpt.mask is not None else 'none'}")

    report = sparsity_report(net)
    table = Table(title="Sparsity")
    table.add_column("Tensor", style="cyan")
    table.add_column("Size")
    table.add_column("Non-zero", style="green")
    table.add_column("Zero fraction", style="yellow")
    for row in report.tensors:
        table.add_row(row.name, str(row.size), str(row.nonzeros), f"{row.zero_fraction:.3f}")
    console.print(table)
    console.print(f"Global zero fraction (weights): {report.global_zero_fraction:.4f}")


cli.add_command(gapcurve)


if __name__ == "__main__":
    cli()
