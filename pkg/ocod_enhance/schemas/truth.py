"""Ground-truth schemas."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from ocod_enhance.core.enums import UseClass
from ocod_enhance.schemas.labelling import Span


class GroundTruthRecord(BaseModel):
    """One hand-labelled address with its gold spans and/or gold use class."""
    model_config = ConfigDict(frozen=True)

    title_number: str
    address_text: str = ""
    spans: tuple[Span, ...] = ()
    use_class: Optional[UseClass] = None
    within_title_index: int = 0

    @model_validator(mode="after")
    def check_spans(self) -> "GroundTruthRecord":
        ordered = sorted(self.spans, key=lambda s: s.start)
        for span in ordered:
            if span.end > len(self.address_text):
                raise ValueError(f"gold span {span.start}:{span.end} lies outside the address")
        for left, right in zip(ordered, ordered[1:]):
            if right.start < left.end:
                raise ValueError(f"gold spans overlap at {right.start} in {self.title_number}")
        return self

    @property
    def key(self) -> tuple[str, int]:
        return (self.title_number, self.within_title_index)


class GroundTruthSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    records: tuple[GroundTruthRecord, ...] = ()

    def __len__(self) -> int:
        return len(self.records)
