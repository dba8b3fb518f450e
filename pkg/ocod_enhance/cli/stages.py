"""Pipeline stage subcommands."""
from pathlib import Path
from typing import Optional

import click

from ocod_enhance.cli import cli, with_settings
from ocod_enhance.core.config import Settings
from ocod_enhance.core.enums import Stage
from ocod_enhance.services import pipeline


def _default_output(settings: Settings, stage: Stage, output: Optional[Path]) -> Path:
    return output or Path(settings.PATHS.output_dir) / pipeline.ARTIFACTS[stage]


def _input(given: Optional[Path], fallback: Optional[Path], what: str) -> Path:
    path = given or fallback
    if path is None:
        raise click.UsageError(f"--input ({what}) is required")
    return Path(path)


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="Register CSV.")
@click.option("--output", type=click.Path(path_type=Path), help="labelled.csv to write.")
@with_settings
def label(settings: Settings, input_path: Optional[Path], output: Optional[Path]) -> None:
    """Label address spans and resolve overlaps."""
    source = _input(input_path, settings.PATHS.register, "register CSV")
    click.echo(pipeline.run_label(settings, source, _default_output(settings, Stage.LABEL, output)))


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="labelled.csv.")
@click.option("--output", type=click.Path(path_type=Path), help="parsed.csv to write.")
@with_settings
def parse(settings: Settings, input_path: Optional[Path], output: Optional[Path]) -> None:
    """Split labelled addresses into one row per property."""
    source = _input(input_path, Path(settings.PATHS.output_dir) / pipeline.ARTIFACTS[Stage.LABEL], "labelled CSV")
    click.echo(pipeline.run_parse(settings, source, _default_output(settings, Stage.PARSE, output)))


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="parsed.csv.")
@click.option("--output", type=click.Path(path_type=Path), help="expanded.csv to write.")
@with_settings
def expand(settings: Settings, input_path: Optional[Path], output: Optional[Path]) -> None:
    """Expand numbered ranges into individual properties."""
    source = _input(input_path, Path(settings.PATHS.output_dir) / pipeline.ARTIFACTS[Stage.PARSE], "parsed CSV")
    click.echo(pipeline.run_expand(settings, source, _default_output(settings, Stage.EXPAND, output)))


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="expanded.csv.")
@click.option("--output", type=click.Path(path_type=Path), help="enhanced.csv to write.")
@with_settings
def classify(settings: Settings, input_path: Optional[Path], output: Optional[Path]) -> None:
    """Locate, classify and contract properties."""
    source = _input(input_path, Path(settings.PATHS.output_dir) / pipeline.ARTIFACTS[Stage.EXPAND], "expanded CSV")
    click.echo(pipeline.run_classify(settings, source, _default_output(settings, Stage.CLASSIFY, output)))


@cli.command("pipeline")
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="Register CSV, or the artifact to resume from.")
@click.option("--output", type=click.Path(path_type=Path), help="Output directory.")
@click.option(
    "--start-at",
    type=click.Choice([s.value for s in Stage]),
    default=Stage.LABEL.value,
    show_default=True,
    help="First stage to run.",
)
@with_settings
def run_all(settings: Settings, input_path: Optional[Path], output: Optional[Path], start_at: str) -> None:
    """Run every stage from --start-at to the enhanced dataset."""
    output_dir = output or Path(settings.PATHS.output_dir)
    outputs = pipeline.run_pipeline(
        settings,
        output_dir,
        register=settings.PATHS.register,
        start_at=Stage(start_at),
        input_path=input_path,
    )
    for stage, path in outputs.items():
        click.echo(f"{stage.value}\t{path}")
