"""Command-line interface: ``ocod <stage> [options]``."""
import functools
from pathlib import Path
from typing import Any, Callable, Optional

import click

from ocod_enhance import __version__
from ocod_enhance.core.config import Settings, load_settings
from ocod_enhance.core.enums import ClassLabels, Resolver
from ocod_enhance.core.logging import setup_logging


def common_options(func: Callable) -> Callable:
    """Options every subcommand accepts; values given here override the config file."""
    options = [
        click.option("--config", "config_path", type=click.Path(path_type=Path), help="TOML config file."),
        click.option("--report-dir", type=click.Path(path_type=Path), help="Where issue reports are written."),
        click.option("--rules", type=click.Path(path_type=Path), help="YAML labelling rule file."),
        click.option("--resolver", type=click.Choice([r.value for r in Resolver]), help="Overlap resolver."),
        click.option("--class-labels", type=click.Choice([c.value for c in ClassLabels]), help="Labels used downstream."),
        click.option("--seed", type=int, help="Seed for the HMM and price sampling."),
        click.option("--replicates", type=int, help="Price sampling replicates."),
        click.option("--debug", is_flag=True, default=False, help="Verbose logging."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_settings(
    config_path: Optional[Path] = None,
    report_dir: Optional[Path] = None,
    rules: Optional[Path] = None,
    resolver: Optional[str] = None,
    class_labels: Optional[str] = None,
    seed: Optional[int] = None,
    replicates: Optional[int] = None,
    debug: bool = False,
) -> Settings:
    overrides: dict[str, Any] = {}
    if report_dir is not None:
        overrides.setdefault("PATHS", {})["report_dir"] = report_dir
    if rules is not None:
        overrides.setdefault("PATHS", {})["rules"] = rules
    if resolver is not None:
        overrides.setdefault("LABELLING", {})["resolver"] = resolver
    if class_labels is not None:
        overrides.setdefault("CLASSIFICATION", {})["class_labels"] = class_labels
    if seed is not None:
        overrides.setdefault("LABELLING", {})["seed"] = seed
        overrides.setdefault("ANALYSIS", {})["seed"] = seed
    if replicates is not None:
        overrides.setdefault("ANALYSIS", {})["replicates"] = replicates
    if debug:
        overrides["DEBUG"] = True
    settings = load_settings(config_path, overrides)
    setup_logging(settings.DEBUG)
    return settings


def with_settings(func: Callable) -> Callable:
    """Turn the common options into a ``settings`` argument."""
    @common_options
    @functools.wraps(func)
    def wrapper(config_path, report_dir, rules, resolver, class_labels, seed, replicates, debug, **kwargs):
        settings = build_settings(config_path, report_dir, rules, resolver, class_labels, seed, replicates, debug)
        return func(settings=settings, **kwargs)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="ocod")
def cli() -> None:
    """Enhance the overseas-companies property register."""


from ocod_enhance.cli import analyze, evaluate, stages  # noqa: E402,F401  (registers subcommands)
