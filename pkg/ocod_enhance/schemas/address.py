"""Parsed address and property row schemas."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocod_enhance.core.enums import (
    TERMINATORS,
    ClassSource,
    LocalisationSource,
    NumberFilter,
    UseClass,
)
from ocod_enhance.schemas.area import AreaCode


class NumberRange(BaseModel):
    """Inclusive integer range with an optional parity filter."""
    model_config = ConfigDict(frozen=True)

    low: int = Field(ge=0)
    high: int = Field(ge=0)
    filter: NumberFilter = NumberFilter.NONE

    @model_validator(mode="after")
    def check_order(self) -> "NumberRange":
        if self.low > self.high:
            raise ValueError(f"range low {self.low} exceeds high {self.high}")
        return self

    @property
    def width(self) -> int:
        return self.high - self.low

    def numbers(self) -> list[int]:
        step_start = self.low
        if self.filter is NumberFilter.ODD and self.low % 2 == 0:
            step_start += 1
        elif self.filter is NumberFilter.EVEN and self.low % 2 == 1:
            step_start += 1
        step = 1 if self.filter is NumberFilter.NONE else 2
        return list(range(step_start, self.high + 1, step))


class ParsedAddress(BaseModel):
    """One address row produced by the parser."""
    model_config = ConfigDict(frozen=True)

    title_number: str
    within_title_index: int = Field(default=0, ge=0)
    unit_id: Optional[str] = None
    unit_type: Optional[str] = None
    building_name: Optional[str] = None
    street_number: Optional[str] = None
    street_name: Optional[str] = None
    number_filter: NumberFilter = NumberFilter.NONE
    city: Optional[str] = None
    postcode: Optional[str] = None
    incomplete: bool = False

    @model_validator(mode="after")
    def check_terminator(self) -> "ParsedAddress":
        if not self.incomplete and not self.has_terminator:
            raise ValueError("a complete address row needs a unit type, unit id, building name or street number")
        return self

    @property
    def has_terminator(self) -> bool:
        return any(getattr(self, t.value) for t in TERMINATORS)


class PropertyRow(ParsedAddress):
    """One physical property in the enhanced dataset."""

    address_text: str = ""
    country_incorporated: str = ""
    region: str = ""
    recorded_price: Optional[float] = None
    nested: bool = False
    area: AreaCode = Field(default_factory=AreaCode)
    localisation_source: LocalisationSource = LocalisationSource.NONE
    class_type1: UseClass = UseClass.UNKNOWN
    class_type2: UseClass = UseClass.UNKNOWN
    use_class: UseClass = UseClass.UNKNOWN
    class_source: ClassSource = ClassSource.NONE
    matched_rule: str = "none"

    @property
    def key(self) -> tuple[str, int]:
        return (self.title_number, self.within_title_index)
