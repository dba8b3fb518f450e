"""Expansion of numbered ranges into one row per property."""
from typing import Iterable, Optional

import regex

from ocod_enhance.core.enums import NumberFilter
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.address import NumberRange, ParsedAddress, PropertyRow
from ocod_enhance.schemas.register import TitleRecord


logger = get_logger(__name__)

DEFAULT_RANGE_CAP = 500
_RANGE = regex.compile(r"(\d+) ?(?:to|-|–|—) ?(\d+)", regex.IGNORECASE)


def detect_range(field_text: Optional[str], report: Optional[IssueReport] = None) -> Optional[NumberRange]:
    """Parse ``a to b`` / ``a-b`` / ``a – b``; alphanumeric endpoints never match."""
    if not field_text:
        return None
    match = _RANGE.fullmatch(field_text.strip())
    if match is None:
        return None
    low, high = int(match.group(1)), int(match.group(2))
    if low > high:
        if report is not None:
            report.count("reversed_range")
        return None
    return NumberRange(low=low, high=high)


def _expand_field(row: ParsedAddress, field: str, cap: int, report: Optional[IssueReport]) -> Optional[list[ParsedAddress]]:
    number_range = detect_range(getattr(row, field), report)
    if number_range is None:
        return None
    if number_range.width > cap:
        if report is not None:
            report.reject("range_over_cap", title_number=row.title_number, field=field, value=getattr(row, field))
        return None
    number_range = number_range.model_copy(update={"filter": row.number_filter})
    return [
        row.model_copy(update={field: str(n), "number_filter": NumberFilter.NONE})
        for n in number_range.numbers()
    ]


def expand_row(row: ParsedAddress, cap: int = DEFAULT_RANGE_CAP, report: Optional[IssueReport] = None) -> list[ParsedAddress]:
    """One row per number of a unit-id range, then of a street-number range."""
    units = _expand_field(row, "unit_id", cap, report)
    if units is not None:
        return [expanded for unit in units for expanded in expand_row(unit, cap, report)]
    numbers = _expand_field(row, "street_number", cap, report)
    if numbers is not None:
        return numbers
    if row.number_filter is not NumberFilter.NONE:
        if report is not None:
            report.count("filter_without_range")
        return [row.model_copy(update={"number_filter": NumberFilter.NONE})]
    return [row]


def expand_title(
    rows: Iterable[ParsedAddress],
    record: Optional[TitleRecord] = None,
    cap: int = DEFAULT_RANGE_CAP,
    report: Optional[IssueReport] = None,
) -> list[PropertyRow]:
    """Expand every row of a title, renumber the rows and set the nesting flag."""
    expanded = [e for row in rows for e in expand_row(row, cap, report)]
    nested = len(expanded) > 1
    extra = {}
    if record is not None:
        extra = {
            "address_text": record.address_text,
            "country_incorporated": record.country_incorporated,
            "region": record.region,
            "recorded_price": record.recorded_price,
        }
    return [
        PropertyRow(**{**row.model_dump(), **extra, "within_title_index": index, "nested": nested})
        for index, row in enumerate(expanded)
    ]
