"""Analysis schemas."""
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocod_enhance.core.enums import SeriesKind


class ArealSeries(BaseModel):
    """Values aligned to an ordered list of area codes."""
    model_config = ConfigDict(frozen=True)

    name: str = ""
    area_ids: tuple[str, ...]
    values: tuple[float, ...]
    kind: SeriesKind = SeriesKind.COUNT

    @model_validator(mode="after")
    def check_values(self) -> "ArealSeries":
        if len(self.values) != len(self.area_ids):
            raise ValueError("values and area_ids must have equal length")
        if len(set(self.area_ids)) != len(self.area_ids):
            raise ValueError("area_ids must be unique")
        array = np.asarray(self.values, dtype=float)
        if np.any(array < 0) or np.any(~np.isfinite(array)):
            raise ValueError("values must be finite and non-negative")
        if self.kind is SeriesKind.PROBABILITY and np.any(array > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        return self

    @classmethod
    def from_series(cls, series: pd.Series, kind: SeriesKind, name: str = "") -> "ArealSeries":
        return cls(
            name=name or str(series.name or ""),
            area_ids=tuple(str(a) for a in series.index),
            values=tuple(float(v) for v in series.to_numpy()),
            kind=kind,
        )

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=pd.Index(self.area_ids, name="area_code"), name=self.name or None)

    @property
    def total(self) -> float:
        return float(self.to_array().sum())


class PriceDistribution(BaseModel):
    """Observed sale prices per area (normally MSOA)."""
    model_config = ConfigDict(frozen=True)

    prices: dict[str, tuple[float, ...]]

    @model_validator(mode="after")
    def check_prices(self) -> "PriceDistribution":
        for area, values in self.prices.items():
            if any(v <= 0 for v in values):
                raise ValueError(f"prices for {area} must be positive")
        return self


class SampledEstimate(BaseModel):
    """Resampled mean price: replicate means and their spread."""
    model_config = ConfigDict(frozen=True)

    replicate_means: tuple[float, ...] = Field(min_length=1)
    z: int = Field(ge=0)

    @property
    def point(self) -> float:
        return float(np.mean(self.replicate_means))

    @property
    def std(self) -> float:
        return float(np.std(self.replicate_means, ddof=1)) if len(self.replicate_means) > 1 else 0.0

    @property
    def lower(self) -> float:
        return float(np.percentile(self.replicate_means, 2.5))

    @property
    def upper(self) -> float:
        return float(np.percentile(self.replicate_means, 97.5))

    @property
    def replicates(self) -> int:
        return len(self.replicate_means)


class ValueEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    total: float
    lower: float
    upper: float
    count: int


class MetricsRow(BaseModel):
    """One row of the per-type metrics table."""
    model_config = ConfigDict(frozen=True)

    type: str
    counts: float
    total_value: Optional[float] = None
    mean_value: Optional[float] = None
    bits: Optional[float] = None
    morans_i: Optional[float] = None
