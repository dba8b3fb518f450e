"""``ocod analyze``."""
from pathlib import Path
from typing import Optional

import click

from ocod_enhance.cli import cli, with_settings
from ocod_enhance.core.config import Settings
from ocod_enhance.core.enums import Stage
from ocod_enhance.services import pipeline


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), help="enhanced.csv.")
@click.option("--output", type=click.Path(path_type=Path), help="Directory for the analysis tables.")
@with_settings
def analyze(settings: Settings, input_path: Optional[Path], output: Optional[Path]) -> None:
    """Metrics, UDP totals and per-area series for the domestic properties."""
    source = input_path or Path(settings.PATHS.output_dir) / pipeline.ARTIFACTS[Stage.CLASSIFY]
    output_dir = output or Path(settings.PATHS.output_dir) / "analysis"
    for name, path in pipeline.run_analyze(settings, source, output_dir).items():
        click.echo(f"{name}\t{path}")
