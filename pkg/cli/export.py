#!/usr/bin/env python3
"""
Export generalization-gap curves from a metrics file
"""

import click
import sys
from pathlib import Path
from rich.console import Console
from rich.table import Table

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from sparsemeta.exceptions import SparseMetaError
from sparsemeta.services.metrics_service import gap_curve, read_metrics, write_gap_curve

console = Console()


@click.group()
def cli():
    """Export experiment data"""
    pass


@cli.command()
@click.argument("metrics_csv", type=click.Path())
@click.option('--format', type=click.Choice(['csv', 'json']), default='csv', help='Export format')
@click.option('--output', '-o', type=click.Path(), default=None, help='Output file path')
def gapcurve(metrics_csv, format, output):
    """Train minus test score per evaluated iteration"""
    try:
        rows = gap_curve(read_metrics(metrics_csv))
    except SparseMetaError as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(1)

    table = Table(title="Generalization gap")
    table.add_column("Iteration", style="cyan")
    table.add_column("Phase", style="magenta")
    table.add_column("Train", style="green")
    table.add_column("Test", style="green")
    table.add_column("Gap", style="yellow")
    for row in rows:
        table.add_row(
            str(row.meta_iter),
            row.phase.value,
            f"{row.train_accuracy:.4f}",
            f"{row.test_accuracy:.4f}",
            f"{row.gap:+.4f}",
        )
    console.print(table)

    if output:
        write_gap_curve(rows, output, format)
        console.print(f"[green]✓[/green] Exported {len(rows)} gap rows to {output}")


if __name__ == "__main__":
    cli()
