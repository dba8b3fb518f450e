"""Turn a labelled address into one row per terminator span.

Each span becomes a row holding its own column. Empty columns are then
filled from the nearest later row that labels that column, so a row's own
span acts as a block for everything before it. Only rows anchored on the
highest-ranked terminator class present are kept.
"""
from typing import Optional

from ocod_enhance.core.enums import TERMINATORS, EntityClass, NumberFilter
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.address import ParsedAddress
from ocod_enhance.schemas.labelling import LabelledAddress, Span
from ocod_enhance.services.expander import detect_range
from ocod_enhance.services.ingest import canonical_postcode


logger = get_logger(__name__)

COLUMNS = tuple(EntityClass)


def filter_from_text(text: str) -> NumberFilter:
    lowered = text.lower()
    if "odd" in lowered:
        return NumberFilter.ODD
    if "even" in lowered:
        return NumberFilter.EVEN
    return NumberFilter.NONE


def _backfill(spans: list[Span], address: str) -> list[dict[EntityClass, str]]:
    rows: list[dict[EntityClass, str]] = [{span.entity: span.text(address)} for span in spans]
    nearest: dict[EntityClass, str] = {}
    for row in reversed(rows):
        for column in COLUMNS:
            if column in row:
                nearest[column] = row[column]
            elif column in nearest:
                row[column] = nearest[column]
    return rows


def _to_parsed(
    fields: dict[EntityClass, str],
    title_number: str,
    index: int,
    incomplete: bool,
    report: Optional[IssueReport],
) -> ParsedAddress:
    number_filter = NumberFilter.NONE
    filter_text = fields.get(EntityClass.NUMBER_FILTER)
    if filter_text:
        ranged = any(
            detect_range(fields.get(column) or "") is not None
            for column in (EntityClass.STREET_NUMBER, EntityClass.UNIT_ID)
        )
        if ranged:
            number_filter = filter_from_text(filter_text)
        elif report is not None:
            report.count("filter_without_range")
    return ParsedAddress(
        title_number=title_number,
        within_title_index=index,
        unit_id=fields.get(EntityClass.UNIT_ID),
        unit_type=fields.get(EntityClass.UNIT_TYPE),
        building_name=fields.get(EntityClass.BUILDING_NAME),
        street_number=fields.get(EntityClass.STREET_NUMBER),
        street_name=fields.get(EntityClass.STREET_NAME),
        number_filter=number_filter,
        city=fields.get(EntityClass.CITY),
        postcode=fields.get(EntityClass.POSTCODE),
        incomplete=incomplete,
    )


def parse_address(labelled: LabelledAddress, report: Optional[IssueReport] = None) -> list[ParsedAddress]:
    """Rows for every property named in one labelled address, in text order."""
    spans = sorted(labelled.spans, key=lambda s: (s.start, s.end))
    address = labelled.address_text

    if report is not None:
        postcodes = {canonical_postcode(s.text(address)) or s.text(address) for s in spans if s.entity is EntityClass.POSTCODE}
        if len(postcodes) > 1:
            report.count("multiple_postcodes")

    terminator = next((t for t in TERMINATORS if any(s.entity is t for s in spans)), None)
    if terminator is None:
        fields: dict[EntityClass, str] = {}
        for span in spans:
            fields.setdefault(span.entity, span.text(address))
        if report is not None:
            report.count("incomplete_address")
        return [_to_parsed(fields, labelled.title_number, 0, True, report)]

    rows = _backfill(spans, address)
    anchored = [row for span, row in zip(spans, rows) if span.entity is terminator]
    return [
        _to_parsed(fields, labelled.title_number, index, False, report)
        for index, fields in enumerate(anchored)
    ]
