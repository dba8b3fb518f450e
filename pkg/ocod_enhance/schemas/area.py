"""Census geography schemas."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocod_enhance.core.enums import AreaLevel


class AreaCode(BaseModel):
    """OA/LSOA/MSOA/LAD codes of one location; the hierarchy nests upward."""
    model_config = ConfigDict(frozen=True)

    oa: Optional[str] = None
    lsoa: Optional[str] = None
    msoa: Optional[str] = None
    lad: Optional[str] = None

    @model_validator(mode="after")
    def check_hierarchy(self) -> "AreaCode":
        chain = [self.oa, self.lsoa, self.msoa, self.lad]
        for level, code in enumerate(chain):
            if code and not all(chain[level + 1:]):
                raise ValueError("area codes must nest upward: a lower level implies every higher level")
        return self

    @property
    def is_empty(self) -> bool:
        return not any((self.oa, self.lsoa, self.msoa, self.lad))

    def at(self, level: AreaLevel) -> Optional[str]:
        return getattr(self, level.value)


class AreaLookup(BaseModel):
    """Postcode directory plus address-keyed domestic and business gazetteers.

    Gazetteer keys are built by ``ingest.address_key``; the lookup is never
    mutated after ``build_area_lookup`` returns it.
    """
    model_config = ConfigDict(frozen=True)

    postcode_index: dict[str, AreaCode] = Field(default_factory=dict)
    domestic_gazetteer: dict[str, AreaCode] = Field(default_factory=dict)
    business_gazetteer: dict[str, AreaCode] = Field(default_factory=dict)
    # number|street|locality keys, consulted when a row has no usable postcode.
    domestic_by_locality: dict[str, AreaCode] = Field(default_factory=dict)
    business_by_locality: dict[str, AreaCode] = Field(default_factory=dict)
    business_counts_oa: dict[str, int] = Field(default_factory=dict)
    business_counts_lsoa: dict[str, int] = Field(default_factory=dict)
    lsoa_to_msoa: dict[str, str] = Field(default_factory=dict)
    msoa_to_lad: dict[str, str] = Field(default_factory=dict)

