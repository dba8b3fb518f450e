"""Register schemas."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class TitleRecord(BaseModel):
    """One row of the overseas-companies register."""
    model_config = ConfigDict(frozen=True)

    title_number: str = Field(min_length=1)
    address_text: str = Field(min_length=1)
    country_incorporated: str = ""
    recorded_price: Optional[float] = Field(default=None, ge=0)
    region: str = ""
