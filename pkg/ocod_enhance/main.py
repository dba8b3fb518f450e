"""Process entry point for the ``ocod`` command."""
import sys
from typing import Optional, Sequence

import click

from ocod_enhance.cli import cli
from ocod_enhance.core.errors import PipelineError
from ocod_enhance.core.logging import get_logger


logger = get_logger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code.

    Pipeline errors print a one-line categorised message and exit with the
    error's code; anything unexpected exits 1 with the traceback logged.
    """
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="ocod", standalone_mode=False)
    except PipelineError as exc:
        click.echo(str(exc), err=True)
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except Exception:
        logger.exception("Unexpected failure")
        return 1
    return result if isinstance(result, int) else 0


def run() -> None:
    sys.exit(main())
