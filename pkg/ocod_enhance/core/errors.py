"""Pipeline exceptions and their process exit codes."""
from typing import Optional


class PipelineError(Exception):
    """Base class for errors that stop a pipeline stage."""
    exit_code = 1
    category = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.category}: {self.message}"


class ConfigurationError(PipelineError):
    """Invalid or incomplete configuration, including column maps."""
    exit_code = 3
    category = "configuration"


class RuleCompilationError(ConfigurationError):
    """A labelling rule failed to compile or collides with another rule."""
    category = "rules"

    def __init__(self, rule_id: str, message: str, position: Optional[int] = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"rule '{rule_id}'{where}: {message}")
        self.rule_id = rule_id
        self.position = position


class InputFileError(PipelineError):
    """An input file is missing or unreadable."""
    exit_code = 4
    category = "input"

    def __init__(self, path, message: str = "file not found"):
        super().__init__(f"{path}: {message}")
        self.path = path


class SchemaMismatchError(PipelineError):
    """An artifact does not have the columns its stage expects."""
    exit_code = 5
    category = "schema"


class AlignmentError(PipelineError):
    """Predictions and ground truth cover different records."""
    exit_code = 6
    category = "alignment"

    def __init__(self, missing: list[str]):
        preview = ", ".join(missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        super().__init__(f"{len(missing)} gold records have no prediction: {preview}{more}")
        self.missing = missing


class DataError(PipelineError):
    """Input data violates a precondition of a computation."""
    exit_code = 7
    category = "data"
