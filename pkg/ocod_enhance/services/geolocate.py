"""Attach census areas to property rows."""
from collections import Counter, defaultdict
from typing import Iterable, Optional

from ocod_enhance.core.enums import LocalisationSource
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.address import PropertyRow
from ocod_enhance.schemas.area import AreaCode, AreaLookup
from ocod_enhance.services.ingest import address_key, canonical_postcode, postcode_key


logger = get_logger(__name__)


def _gazetteer_hit(row: PropertyRow, full: dict[str, AreaCode], by_locality: dict[str, AreaCode]) -> Optional[AreaCode]:
    candidates = [
        (full, address_key(row.street_number, row.street_name, postcode_key(row.postcode))),
        (full, address_key(row.street_number, row.street_name, row.city)),
        (by_locality, address_key(row.street_number, row.street_name, row.city)),
    ]
    for gazetteer, key in candidates:
        area = gazetteer.get(key) if key else None
        if area is not None and not area.is_empty:
            return area
    return None


def locate_row(row: PropertyRow, lookup: AreaLookup, report: Optional[IssueReport] = None) -> PropertyRow:
    """Locate one row from its own fields: postcode, then Price Paid, then VOA."""
    if not row.area.is_empty:
        return row

    postcode = canonical_postcode(row.postcode)
    if postcode is not None:
        area = lookup.postcode_index.get(postcode)
        if area is not None:
            return row.model_copy(update={"area": area, "localisation_source": LocalisationSource.POSTCODE})
        if report is not None:
            report.count("postcode_not_in_directory")

    area = _gazetteer_hit(row, lookup.domestic_gazetteer, lookup.domestic_by_locality)
    if area is not None:
        return row.model_copy(update={"area": area, "localisation_source": LocalisationSource.PRICEPAID})
    area = _gazetteer_hit(row, lookup.business_gazetteer, lookup.business_by_locality)
    if area is not None:
        return row.model_copy(update={"area": area, "localisation_source": LocalisationSource.VOA})
    return row


def _inherit(rows: list[PropertyRow], report: Optional[IssueReport]) -> list[PropertyRow]:
    located = [row.area for row in rows if not row.area.is_empty]
    if not located or len(located) == len(rows):
        return rows
    tally = Counter(located)
    if len(tally) > 1 and report is not None:
        report.count("conflicting_sibling_areas")
    best = max(tally.values())
    # Counter preserves insertion order, so ties resolve to the first sibling located.
    majority = next(area for area, n in tally.items() if n == best)
    return [
        row if not row.area.is_empty
        else row.model_copy(update={"area": majority, "localisation_source": LocalisationSource.INHERITED})
        for row in rows
    ]


def localise(rows: Iterable[PropertyRow], lookup: AreaLookup, report: Optional[IssueReport] = None) -> list[PropertyRow]:
    """Locate every row; unlocated rows of a title share their siblings' majority area."""
    titles: dict[str, list[PropertyRow]] = defaultdict(list)
    for row in rows:
        titles[row.title_number].append(locate_row(row, lookup, report))

    out = [row for group in titles.values() for row in _inherit(group, report)]
    sources = Counter(row.localisation_source.value for row in out)
    if report is not None:
        for source, n in sources.items():
            report.count(f"located_{source}", n)
    logger.info("Rows localised", extra={"stage": "classify", "counts": dict(sources)})
    return out
