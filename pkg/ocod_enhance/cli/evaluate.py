"""``ocod evaluate``: score spans or classes against hand-labelled gold."""
from pathlib import Path
from typing import Optional

import click

from ocod_enhance.cli import cli, with_settings
from ocod_enhance.core.config import Settings
from ocod_enhance.services import pipeline
from ocod_enhance.services.evaluate import core_mean_fscore, format_report


@cli.command()
@click.argument("mode", type=click.Choice(["spans", "classes"]))
@click.option("--truth", type=click.Path(path_type=Path), help="Gold CSV; defaults to the configured one.")
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="labelled.csv or enhanced.csv to score.")
@click.option("--output", type=click.Path(path_type=Path), help="Score table CSV to write.")
@click.option("--by-title", is_flag=True, default=False, help="Score classes once per title.")
@with_settings
def evaluate(
    settings: Settings,
    mode: str,
    truth: Optional[Path],
    input_path: Optional[Path],
    output: Optional[Path],
    by_title: bool,
) -> None:
    """Precision, recall and F1 per class plus the micro average.

    Without --input, ``spans`` labels the gold addresses with the current
    rules and resolver.
    """
    if mode == "spans":
        truth = truth or settings.PATHS.span_truth
        if truth is None:
            raise click.UsageError("--truth is required")
        report = pipeline.evaluate_spans(settings, truth, input_path)
    else:
        truth = truth or settings.PATHS.class_truth
        if truth is None or input_path is None:
            raise click.UsageError("--truth and --input are required for class scoring")
        report = pipeline.evaluate_classes(truth, input_path, by_title)

    click.echo(format_report(report))
    if mode == "spans":
        click.echo(f"core mean f1: {core_mean_fscore(report):.3f}")
    if output is not None:
        pipeline.write_score_report(report, output, core=mode == "spans")
