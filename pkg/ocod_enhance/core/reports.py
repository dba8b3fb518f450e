"""Sidecar issue reports for data-quality problems that do not stop a stage."""
from collections import Counter
from pathlib import Path
from typing import Any

import pandas as pd

from ocod_enhance.core.logging import get_logger


logger = get_logger(__name__)


class IssueReport:
    """Counters plus rejected rows, written next to a stage's artifact.

    Every rejected row carries a ``reason``; counters hold warnings that
    did not cost a row (e.g. an unparseable price).
    """

    def __init__(self, stage: str):
        self.stage = stage
        self.counters: Counter[str] = Counter()
        self.rejects: list[dict[str, Any]] = []

    def count(self, key: str, n: int = 1) -> None:
        self.counters[key] += n

    def reject(self, reason: str, **fields: Any) -> None:
        self.rejects.append({"reason": reason, **fields})
        self.counters[f"rejected_{reason}"] += 1

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)

    def to_frame(self) -> pd.DataFrame:
        if not self.rejects:
            return pd.DataFrame(columns=["reason"])
        frame = pd.DataFrame(self.rejects)
        columns = ["reason"] + [c for c in frame.columns if c != "reason"]
        return frame[columns]

    def summary(self) -> dict[str, int]:
        return dict(sorted(self.counters.items()))

    def write(self, directory: Path) -> Path:
        """Write the rejects CSV for this stage and return its path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.stage}_issues.csv"
        self.to_frame().to_csv(path, index=False)
        if self.counters:
            logger.info(
                "Issue report written",
                extra={"stage": self.stage, "counts": self.summary()},
            )
        return path
