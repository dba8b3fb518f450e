"""Enum definitions for the pipeline."""
from enum import Enum


class EntityClass(str, Enum):
    """Named-entity classes labelled in a property address."""
    UNIT_ID = "unit_id"
    UNIT_TYPE = "unit_type"
    BUILDING_NAME = "building_name"
    STREET_NUMBER = "street_number"
    STREET_NAME = "street_name"
    NUMBER_FILTER = "number_filter"
    CITY = "city"
    POSTCODE = "postcode"


# Anchor classes for parsing, highest priority first.
TERMINATORS = (
    EntityClass.UNIT_TYPE,
    EntityClass.UNIT_ID,
    EntityClass.BUILDING_NAME,
    EntityClass.STREET_NUMBER,
)


class NumberFilter(str, Enum):
    """Parity filter applied to a number range."""
    ODD = "odd"
    EVEN = "even"
    NONE = "none"


class UseClass(str, Enum):
    """Property use classes."""
    AIRSPACE = "airspace"
    BUSINESS = "business"
    CARPARK = "carpark"
    DOMESTIC = "domestic"
    LAND = "land"
    UNKNOWN = "unknown"


class ClassSource(str, Enum):
    """Which classification pass produced a use class."""
    TYPE1 = "type1"
    TYPE2 = "type2"
    NONE = "none"


class LocalisationSource(str, Enum):
    """Where a property's area codes came from."""
    POSTCODE = "postcode"
    PRICEPAID = "pricepaid"
    VOA = "voa"
    INHERITED = "inherited"
    NONE = "none"


class SeriesKind(str, Enum):
    """Kind of value held by an areal series."""
    COUNT = "count"
    PROBABILITY = "probability"
    PRICE = "price"


class Resolver(str, Enum):
    """Overlap resolver options."""
    LARGEST = "largest"
    HMM = "hmm"


class ClassLabels(str, Enum):
    """Which classification labels downstream analysis reads."""
    TYPE1 = "type1"
    TYPE2 = "type2"


class WeightMode(str, Enum):
    """Spatial weight transformation."""
    ROW = "row"
    BINARY = "binary"


class AreaLevel(str, Enum):
    """Census geography levels."""
    OA = "oa"
    LSOA = "lsoa"
    MSOA = "msoa"
    LAD = "lad"


class MatchMode(str, Enum):
    """Span matching criterion for evaluation."""
    EXACT = "exact"
    OVERLAP = "overlap"


class Stage(str, Enum):
    """Pipeline stages in execution order."""
    LABEL = "label"
    PARSE = "parse"
    EXPAND = "expand"
    CLASSIFY = "classify"
