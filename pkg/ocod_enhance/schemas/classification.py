"""Classification step schemas."""
from functools import cached_property
from typing import Literal, Optional

import regex
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocod_enhance.core.enums import UseClass


RowField = Literal[
    "address_text", "unit_id", "unit_type", "building_name", "street_number", "street_name", "city", "postcode"
]


class ClassificationStep(BaseModel):
    """One Type 1 step: every condition given must hold for the step to match."""
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    use_class: UseClass
    field: RowField = "address_text"
    pattern: Optional[str] = None
    present: tuple[RowField, ...] = ()
    absent: tuple[RowField, ...] = ()
    gazetteer: Optional[Literal["voa", "pricepaid"]] = None

    @model_validator(mode="after")
    def check_condition(self) -> "ClassificationStep":
        if self.pattern is None and self.gazetteer is None and not self.present and not self.absent:
            raise ValueError(f"step {self.name!r} has no condition")
        if self.pattern is not None:
            try:
                regex.compile(self.pattern, regex.IGNORECASE)
            except regex.error as exc:
                raise ValueError(f"step {self.name!r}: bad pattern ({exc})") from exc
        return self

    @cached_property
    def compiled(self):
        return regex.compile(self.pattern, regex.IGNORECASE) if self.pattern is not None else None
