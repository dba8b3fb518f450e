"""Pydantic schemas."""
from ocod_enhance.schemas.register import TitleRecord
from ocod_enhance.schemas.area import AreaCode, AreaLookup
from ocod_enhance.schemas.labelling import LabelRule, Span, LabelledAddress, Token, TokenLattice
from ocod_enhance.schemas.truth import GroundTruthRecord, GroundTruthSet
from ocod_enhance.schemas.address import NumberRange, ParsedAddress, PropertyRow
from ocod_enhance.schemas.metrics import MetricCounts, ClassScore, ScoreReport
from ocod_enhance.schemas.analysis import (
    ArealSeries, PriceDistribution, SampledEstimate, ValueEstimate, MetricsRow
)
from ocod_enhance.schemas.hmm import HmmModel
from ocod_enhance.schemas.classification import ClassificationStep

__all__ = [
    "TitleRecord",
    "AreaCode", "AreaLookup",
    "LabelRule", "Span", "LabelledAddress", "Token", "TokenLattice",
    "GroundTruthRecord", "GroundTruthSet",
    "NumberRange", "ParsedAddress", "PropertyRow",
    "MetricCounts", "ClassScore", "ScoreReport",
    "ArealSeries", "PriceDistribution", "SampledEstimate", "ValueEstimate", "MetricsRow",
    "HmmModel",
    "ClassificationStep",
]
