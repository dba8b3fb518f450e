"""Evaluation schemas."""
from pydantic import BaseModel, ConfigDict, Field, model_validator


def f_score(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


class MetricCounts(BaseModel):
    """Confusion counts for one class."""
    model_config = ConfigDict(frozen=True)

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)

    @property
    def support(self) -> int:
        return self.tp + self.fn

    def __add__(self, other: "MetricCounts") -> "MetricCounts":
        return MetricCounts(tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn)


class ClassScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    fscore: float = Field(ge=0, le=1)
    support: int = Field(ge=0)

    @classmethod
    def from_counts(cls, counts: MetricCounts) -> "ClassScore":
        return cls(
            precision=ratio(counts.tp, counts.tp + counts.fp),
            recall=ratio(counts.tp, counts.tp + counts.fn),
            fscore=f_score(counts.tp, counts.fp, counts.fn),
            support=counts.support,
        )


class ScoreReport(BaseModel):
    """Per-class and micro-averaged precision, recall and F1."""
    model_config = ConfigDict(frozen=True)

    counts: dict[str, MetricCounts]
    per_class: dict[str, ClassScore]
    micro: ClassScore

    @model_validator(mode="after")
    def check_consistency(self) -> "ScoreReport":
        for label, counts in self.counts.items():
            score = self.per_class[label]
            if abs(score.fscore - f_score(counts.tp, counts.fp, counts.fn)) > 1e-12:
                raise ValueError(f"F1 for '{label}' disagrees with its counts")
        return self

    @classmethod
    def from_counts(cls, counts: dict[str, MetricCounts]) -> "ScoreReport":
        total = sum(counts.values(), MetricCounts())
        return cls(
            counts=dict(sorted(counts.items())),
            per_class={label: ClassScore.from_counts(c) for label, c in sorted(counts.items())},
            micro=ClassScore.from_counts(total),
        )

    @property
    def total(self) -> MetricCounts:
        return sum(self.counts.values(), MetricCounts())
