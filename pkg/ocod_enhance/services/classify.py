"""Use-class assignment for property rows.

Type 1 applies an ordered list of evidence steps to each row. Type 2 then
deduces domestic or business for the rows Type 1 left unknown, using the
gazetteers and the business density of the row's area. Both labels are kept.
"""
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd
import regex
import yaml
from pydantic import ValidationError

from ocod_enhance.core.config import DEFAULT_CLASSIFICATION_STEPS
from ocod_enhance.core.enums import ClassLabels, ClassSource, UseClass
from ocod_enhance.core.errors import ConfigurationError, InputFileError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.address import PropertyRow
from ocod_enhance.schemas.area import AreaCode, AreaLookup
from ocod_enhance.schemas.classification import ClassificationStep
from ocod_enhance.services.ingest import address_key, canonical_postcode, postcode_key


logger = get_logger(__name__)

UNIT_PARK = regex.compile(r"\bunits?\b.*\bpark\b", regex.IGNORECASE)
NO_FILL_SOURCES = (UseClass.UNKNOWN, UseClass.AIRSPACE, UseClass.CARPARK)


def load_steps(path: Optional[Path] = None) -> list[ClassificationStep]:
    """Read the ordered Type 1 steps; step names must be unique."""
    path = Path(path or DEFAULT_CLASSIFICATION_STEPS)
    if not path.is_file():
        raise InputFileError(path, "classification step file not found")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("steps"), list):
        raise ConfigurationError(f"{path}: expected a mapping with a 'steps' list")

    steps = []
    for position, entry in enumerate(data["steps"]):
        try:
            steps.append(ClassificationStep.model_validate(entry))
        except ValidationError as exc:
            error = exc.errors()[0]
            raise ConfigurationError(f"{path}: step #{position}: {error['msg']}") from exc

    names = Counter(step.name for step in steps)
    duplicates = sorted(name for name, n in names.items() if n > 1)
    if duplicates:
        raise ConfigurationError(f"{path}: duplicate step names {duplicates}")
    return steps


def _gazetteer_keys(row: PropertyRow) -> list[str]:
    keys = [
        address_key(row.street_number, row.street_name, postcode_key(row.postcode)),
        address_key(row.street_number, row.street_name, row.city),
    ]
    return [key for key in keys if key]


def _in_gazetteer(row: PropertyRow, gazetteer: dict[str, AreaCode]) -> bool:
    return any(key in gazetteer for key in _gazetteer_keys(row))


def step_matches(step: ClassificationStep, row: PropertyRow, lookup: Optional[AreaLookup] = None) -> bool:
    if step.pattern is not None:
        value = getattr(row, step.field) or ""
        if not step.compiled.search(value):
            return False
    if any(not getattr(row, f) for f in step.present):
        return False
    if any(getattr(row, f) for f in step.absent):
        return False
    if step.gazetteer is not None:
        if lookup is None:
            return False
        gazetteer = lookup.business_gazetteer if step.gazetteer == "voa" else lookup.domestic_gazetteer
        if not _in_gazetteer(row, gazetteer):
            return False
    return True


def classify_type1(row: PropertyRow, steps: list[ClassificationStep], lookup: Optional[AreaLookup] = None) -> PropertyRow:
    """Apply the first matching step; rows matching none stay unknown."""
    for step in steps:
        if step_matches(step, row, lookup):
            return row.model_copy(update={
                "class_type1": step.use_class,
                "class_type2": step.use_class,
                "use_class": step.use_class,
                "class_source": ClassSource.TYPE1,
                "matched_rule": step.name,
            })
    return row.model_copy(update={
        "class_type1": UseClass.UNKNOWN,
        "class_type2": UseClass.UNKNOWN,
        "use_class": UseClass.UNKNOWN,
        "class_source": ClassSource.NONE,
        "matched_rule": "none",
    })


def _deduce(
    row: PropertyRow,
    lookup: AreaLookup,
    area_density: bool,
    report: Optional[IssueReport],
) -> tuple[UseClass, str]:
    if UNIT_PARK.search(row.address_text):
        return UseClass.BUSINESS, "unit_in_park"
    # Without a street number the address cannot be located precisely enough to deduce from.
    if not row.street_number:
        return UseClass.UNKNOWN, "none"

    full = _gazetteer_keys(row)[:1] if canonical_postcode(row.postcode) else []
    local = [address_key(row.street_number, row.street_name, row.city)] if row.city else []
    for step, keys, domestic, business in (
        ("full_address_match", full, lookup.domestic_gazetteer, lookup.business_gazetteer),
        ("locality_address_match", [k for k in local if k], lookup.domestic_by_locality, lookup.business_by_locality),
    ):
        in_domestic = any(k in domestic for k in keys)
        in_business = any(k in business for k in keys)
        if in_domestic and in_business:
            if report is not None:
                report.count("both_gazetteers")
            return UseClass.UNKNOWN, "none"
        if in_domestic:
            return UseClass.DOMESTIC, step
        if in_business:
            return UseClass.BUSINESS, step

    if area_density:
        if row.area.oa and lookup.business_counts_oa.get(row.area.oa, 0) == 0:
            return UseClass.DOMESTIC, "no_business_in_oa"
        if row.area.lsoa and lookup.business_counts_lsoa.get(row.area.lsoa, 0) == 0:
            return UseClass.DOMESTIC, "no_business_in_lsoa"
    return UseClass.UNKNOWN, "none"


def classify_type2(
    rows: Iterable[PropertyRow],
    lookup: AreaLookup,
    area_density: bool = True,
    report: Optional[IssueReport] = None,
) -> list[PropertyRow]:
    """Deduce domestic or business for rows Type 1 left unknown."""
    out = []
    for row in rows:
        if row.class_type1 is not UseClass.UNKNOWN:
            out.append(row)
            continue
        use_class, step = _deduce(row, lookup, area_density, report)
        if use_class is UseClass.UNKNOWN:
            out.append(row)
            continue
        out.append(row.model_copy(update={
            "class_type2": use_class,
            "use_class": use_class,
            "class_source": ClassSource.TYPE2,
            "matched_rule": step,
        }))
    return out


def fill_by_title(rows: Iterable[PropertyRow], report: Optional[IssueReport] = None) -> list[PropertyRow]:
    """Unknown rows of a nested title take their siblings' most common known class.

    Airspace and car-park siblings are never used as a source.
    """
    rows = list(rows)
    known: dict[str, Counter] = defaultdict(Counter)
    for row in rows:
        if row.nested and row.class_type2 not in NO_FILL_SOURCES:
            known[row.title_number][row.class_type2] += 1

    out = []
    for row in rows:
        tally = known.get(row.title_number)
        if not row.nested or row.class_type2 is not UseClass.UNKNOWN or not tally:
            out.append(row)
            continue
        use_class = tally.most_common(1)[0][0]
        if report is not None:
            report.count("filled_from_title")
        out.append(row.model_copy(update={
            "class_type2": use_class,
            "use_class": use_class,
            "class_source": ClassSource.TYPE2,
            "matched_rule": "title_fill",
        }))
    return out


def select_labels(rows: Iterable[PropertyRow], labels: ClassLabels = ClassLabels.TYPE2) -> list[PropertyRow]:
    """Point ``use_class`` at the chosen label set."""
    return [
        row.model_copy(update={"use_class": row.class_type2 if labels is ClassLabels.TYPE2 else row.class_type1})
        for row in rows
    ]


def contract(rows: Iterable[PropertyRow], report: Optional[IssueReport] = None) -> list[PropertyRow]:
    """Collapse the non-domestic rows of each title to its first such row.

    Domestic rows are untouched, so after contraction only domestic rows
    can still be nested.
    """
    rows = list(rows)
    first_other: dict[str, int] = {}
    for position, row in enumerate(rows):
        if row.use_class is not UseClass.DOMESTIC:
            current = first_other.get(row.title_number)
            if current is None or row.within_title_index < rows[current].within_title_index:
                first_other[row.title_number] = position

    out = []
    for position, row in enumerate(rows):
        if row.use_class is UseClass.DOMESTIC:
            out.append(row)
        elif first_other[row.title_number] == position:
            out.append(row.model_copy(update={"nested": False}) if row.nested else row)
    if report is not None:
        report.count("contracted_rows", len(rows) - len(out))
    return out


def classify_rows(
    rows: Iterable[PropertyRow],
    steps: list[ClassificationStep],
    lookup: AreaLookup,
    labels: ClassLabels = ClassLabels.TYPE2,
    area_density: bool = True,
    report: Optional[IssueReport] = None,
) -> list[PropertyRow]:
    """Type 1, Type 2, title fill, label selection and contraction in one pass."""
    rows = [classify_type1(row, steps, lookup) for row in rows]
    rows = classify_type2(rows, lookup, area_density, report)
    rows = fill_by_title(rows, report)
    rows = select_labels(rows, labels)
    rows = contract(rows, report)
    logger.info(
        "Rows classified",
        extra={"stage": "classify", "counts": dict(Counter(row.use_class.value for row in rows))},
    )
    return rows


def class_breakdown(rows: Iterable[PropertyRow]) -> pd.DataFrame:
    """Count and percentage of rows per use class, every class listed."""
    counts = Counter(row.use_class for row in rows)
    total = sum(counts.values())
    frame = pd.DataFrame(
        {
            "class": [c.value for c in UseClass],
            "count": [counts.get(c, 0) for c in UseClass],
        }
    )
    frame["percentage"] = frame["count"] / total * 100 if total else 0.0
    return frame.sort_values("count", ascending=False, kind="stable").reset_index(drop=True)
