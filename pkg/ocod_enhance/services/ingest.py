"""Loading and normalising the register, postcode directory and gazetteers."""
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd
import regex
from pydantic import ValidationError

from ocod_enhance.core.config import ColumnSettings, PricePaidColumns, RegisterColumns, SeriesColumns, VoaColumns
from ocod_enhance.core.enums import AreaLevel, EntityClass, SeriesKind, UseClass
from ocod_enhance.core.errors import ConfigurationError, DataError, InputFileError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.analysis import ArealSeries, PriceDistribution
from ocod_enhance.schemas.area import AreaCode, AreaLookup
from ocod_enhance.schemas.labelling import GOLD, Span
from ocod_enhance.schemas.register import TitleRecord
from ocod_enhance.schemas.truth import GroundTruthRecord, GroundTruthSet


logger = get_logger(__name__)

ENGLAND_AND_WALES = ("E92000001", "W92000004")

_WHITESPACE = regex.compile(r"\s+")
_COMMA = regex.compile(r" ?, ?")
_POSTCODE = regex.compile(r"^([A-Z]{1,2}[0-9][A-Z0-9]?)([0-9][A-Z]{2})$")
_PRICE_NOISE = regex.compile(r"[£,\s]")
_LEADING_NUMBER = regex.compile(r"^\s*(\d+[a-z]?)\b")
_STREET_NOISE = regex.compile(r"[.']")
_MARKUP = regex.compile(r"\[([^\[\]]+)\]\(([a-z_]+)\)")


def normalize_text(raw: str) -> str:
    """Lower-case, collapse whitespace and put exactly one space after each comma."""
    text = _WHITESPACE.sub(" ", raw.lower())
    text = _COMMA.sub(", ", text)
    return text.strip()


def canonical_postcode(raw: Optional[str]) -> Optional[str]:
    """Upper-case postcode with a single space before the inward code, or None."""
    if not raw:
        return None
    compact = _WHITESPACE.sub("", str(raw)).upper()
    match = _POSTCODE.match(compact)
    if not match:
        return None
    return f"{match.group(1)} {match.group(2)}"


def postcode_key(raw: Optional[str]) -> Optional[str]:
    """Lower-case canonical postcode as used inside gazetteer keys."""
    canonical = canonical_postcode(raw)
    return canonical.lower() if canonical else None


def clean_street_number(raw: Optional[str]) -> Optional[str]:
    """Leading house number of a PAON / VOA number_or_name field, if any."""
    if not raw:
        return None
    text = str(raw).lower()
    if regex.search(r"\b(?:unit|suite|room)\b", text):
        return None
    match = _LEADING_NUMBER.match(text)
    return match.group(1) if match else None


def street_key(street: Optional[str]) -> Optional[str]:
    if not street:
        return None
    key = _STREET_NOISE.sub("", normalize_text(str(street)))
    return key or None


def address_key(street_number: Optional[str], street_name: Optional[str], place: Optional[str]) -> Optional[str]:
    """Gazetteer key ``number|street|place``; place is a postcode or a locality."""
    number = clean_street_number(street_number)
    street = street_key(street_name)
    if not number or not street or not place:
        return None
    return f"{number}|{street}|{normalize_text(str(place))}"


def read_table(path: Path, required: Iterable[str], what: str) -> pd.DataFrame:
    """Read a CSV as strings, checking the configured columns exist."""
    path = Path(path)
    if not path.is_file():
        raise InputFileError(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding_errors="replace")
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=list(required))
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ConfigurationError(f"{what} file {path} has no column '{missing[0]}'")
    return frame


def _parse_price(raw: str, report: IssueReport) -> Optional[float]:
    cleaned = _PRICE_NOISE.sub("", raw or "")
    if not cleaned:
        return None
    try:
        price = float(cleaned)
    except ValueError:
        report.count("unparseable_price")
        return None
    if price < 0:
        report.count("unparseable_price")
        return None
    return price


def load_register(path: Path, columns: RegisterColumns, report: Optional[IssueReport] = None) -> list[TitleRecord]:
    """Load register rows as TitleRecords; blank or duplicate rows go to the report."""
    report = report if report is not None else IssueReport("ingest")
    required = [columns.title_number, columns.address]
    optional = [c for c in (columns.country, columns.price, columns.region) if c]
    frame = read_table(path, required, "register")

    records: list[TitleRecord] = []
    seen: set[str] = set()
    for row in frame.to_dict(orient="records"):
        title = str(row[columns.title_number]).strip()
        address = normalize_text(str(row[columns.address]))
        if not title:
            report.reject("blank_title_number", address=address)
            continue
        if not address:
            report.reject("blank_address", title_number=title)
            continue
        if title in seen:
            report.reject("duplicate_title_number", title_number=title, address=address)
            continue
        seen.add(title)
        extras = {c: str(row.get(c, "")).strip() for c in optional}
        records.append(
            TitleRecord(
                title_number=title,
                address_text=address,
                country_incorporated=extras.get(columns.country, ""),
                recorded_price=_parse_price(extras.get(columns.price, ""), report),
                region=extras.get(columns.region, ""),
            )
        )

    logger.info(
        "Register loaded",
        extra={"stage": "ingest", "counts": {"input": len(frame), "loaded": len(records), "rejected": report.n_rejected}},
    )
    return records


def _area_from(oa: str, lsoa: str, msoa: str, lad: str) -> AreaCode:
    return AreaCode(oa=oa or None, lsoa=lsoa or None, msoa=msoa or None, lad=lad or None)


def _load_postcode_index(path: Path, columns: ColumnSettings, report: IssueReport) -> dict[str, AreaCode]:
    cols = columns.onspd
    required = [cols.postcode, cols.oa, cols.lsoa, cols.msoa, cols.lad] + ([cols.country] if cols.country else [])
    frame = read_table(path, required, "postcode directory")
    if cols.country:
        outside = ~frame[cols.country].isin(ENGLAND_AND_WALES)
        report.count("postcode_outside_england_wales", int(outside.sum()))
        frame = frame[~outside]

    index: dict[str, AreaCode] = {}
    areas: dict[tuple[str, ...], Optional[AreaCode]] = {}
    for pc, oa, lsoa, msoa, lad in frame[[cols.postcode, cols.oa, cols.lsoa, cols.msoa, cols.lad]].itertuples(index=False):
        postcode = canonical_postcode(pc)
        if postcode is None:
            report.reject("invalid_postcode", postcode=pc)
            continue
        codes = (oa, lsoa, msoa, lad)
        if codes not in areas:
            try:
                area = _area_from(*codes)
                areas[codes] = None if area.is_empty else area
            except ValidationError:
                areas[codes] = None
        area = areas[codes]
        if area is None:
            report.reject("incomplete_area_hierarchy", postcode=postcode)
            continue
        existing = index.get(postcode)
        if existing is None:
            index[postcode] = area
        elif existing != area:
            report.count("conflicting_postcode")
    return index


def _add_entry(gazetteer: dict[str, AreaCode], key: Optional[str], area: AreaCode, report: IssueReport, name: str) -> None:
    if key is None:
        return
    existing = gazetteer.get(key)
    if existing is None:
        gazetteer[key] = area
    elif existing != area:
        report.count(f"conflicting_{name}_key")


def _build_gazetteer(
    frame: pd.DataFrame,
    number: pd.Series,
    street: str,
    postcode: str,
    localities: list[str],
    index: dict[str, AreaCode],
    report: IssueReport,
    name: str,
) -> tuple[dict[str, AreaCode], dict[str, AreaCode]]:
    by_postcode: dict[str, AreaCode] = {}
    by_locality: dict[str, AreaCode] = {}
    for (_, row), num in zip(frame.iterrows(), number):
        if not num or not row[street]:
            report.count(f"{name}_without_number_or_street")
            continue
        canonical = canonical_postcode(row[postcode])
        area = index.get(canonical, AreaCode()) if canonical else AreaCode()
        if canonical is None:
            place = next((row[c] for c in localities if row.get(c)), None)
            _add_entry(by_postcode, address_key(num, row[street], place), area, report, name)
        else:
            _add_entry(by_postcode, address_key(num, row[street], canonical), area, report, name)
        for column in localities:
            if row.get(column):
                _add_entry(by_locality, address_key(num, row[street], row[column]), area, report, name)
    return by_postcode, by_locality


def _load_pricepaid(path: Path, cols: PricePaidColumns, index: dict[str, AreaCode], report: IssueReport):
    frame = read_table(path, [cols.postcode, cols.paon, cols.street], "price paid")
    localities = [c for c in (cols.locality, cols.town) if c and c in frame.columns]
    number = frame[cols.paon].map(clean_street_number)
    return _build_gazetteer(frame, number, cols.street, cols.postcode, localities, index, report, "pricepaid")


def _load_voa(path: Path, cols: VoaColumns, exclusions: list[str], index: dict[str, AreaCode], report: IssueReport):
    frame = read_table(path, [cols.postcode, cols.number_or_name, cols.street], "VOA ratings list")
    if cols.description and cols.description in frame.columns and exclusions:
        pattern = "|".join(regex.escape(e.upper()) for e in exclusions)
        excluded = frame[cols.description].str.upper().str.contains(pattern, regex=True)
        report.count("voa_excluded", int(excluded.sum()))
        frame = frame[~excluded]
    localities = [c for c in (cols.town,) if c and c in frame.columns]
    number = frame[cols.number_or_name].map(clean_street_number)
    gazetteer, by_locality = _build_gazetteer(frame, number, cols.street, cols.postcode, localities, index, report, "voa")

    # Premises counted once each, whether or not they have a house number.
    located = frame[cols.postcode].map(canonical_postcode).map(index.get).dropna()
    counts_oa = pd.Series([a.oa for a in located], dtype=object).value_counts()
    counts_lsoa = pd.Series([a.lsoa for a in located], dtype=object).value_counts()
    return gazetteer, by_locality, counts_oa.to_dict(), counts_lsoa.to_dict()


def build_area_lookup(
    onspd_path: Path,
    pricepaid_path: Optional[Path],
    voa_path: Optional[Path],
    columns: ColumnSettings,
    voa_exclusions: Optional[list[str]] = None,
    report: Optional[IssueReport] = None,
) -> AreaLookup:
    """Build the postcode index and the domestic/business gazetteers.

    Without a Price Paid or VOA file the matching gazetteer is left empty.
    """
    report = report if report is not None else IssueReport("ingest")
    index = _load_postcode_index(onspd_path, columns, report)
    domestic, domestic_local = {}, {}
    business, business_local, counts_oa, counts_lsoa = {}, {}, {}, {}
    if pricepaid_path is not None:
        domestic, domestic_local = _load_pricepaid(pricepaid_path, columns.pricepaid, index, report)
    if voa_path is not None:
        business, business_local, counts_oa, counts_lsoa = _load_voa(
            voa_path, columns.voa, voa_exclusions or [], index, report
        )

    lsoa_to_msoa = {a.lsoa: a.msoa for a in index.values() if a.lsoa}
    msoa_to_lad = {a.msoa: a.lad for a in index.values() if a.msoa}

    # Entries are validated AreaCode objects built above; skip re-checking every one.
    lookup = AreaLookup.model_construct(
        postcode_index=index,
        domestic_gazetteer=domestic,
        business_gazetteer=business,
        domestic_by_locality=domestic_local,
        business_by_locality=business_local,
        business_counts_oa={str(k): int(v) for k, v in counts_oa.items()},
        business_counts_lsoa={str(k): int(v) for k, v in counts_lsoa.items()},
        lsoa_to_msoa=lsoa_to_msoa,
        msoa_to_lad=msoa_to_lad,
    )
    logger.info(
        "Area lookup built",
        extra={
            "stage": "ingest",
            "counts": {
                "postcodes": len(index),
                "domestic_keys": len(domestic),
                "business_keys": len(business),
            },
        },
    )
    return lookup


def parse_markup(markup: str) -> tuple[str, list[Span]]:
    """Split ``[text](entity)`` markup into plain text and gold spans."""
    text_parts: list[str] = []
    spans: list[Span] = []
    cursor = 0
    length = 0
    for match in _MARKUP.finditer(markup):
        before = markup[cursor:match.start()]
        text_parts.append(before)
        length += len(before)
        inner, entity = match.group(1), match.group(2)
        try:
            entity_class = EntityClass(entity)
        except ValueError as exc:
            raise DataError(f"unknown entity class '{entity}' in markup: {markup}") from exc
        spans.append(Span(start=length, end=length + len(inner), entity=entity_class, source_rule=GOLD))
        text_parts.append(inner)
        length += len(inner)
        cursor = match.end()
    text_parts.append(markup[cursor:])
    return "".join(text_parts), spans


def load_ground_truth(path: Path, address_column: str = "address", class_column: str = "class") -> GroundTruthSet:
    """Load span gold (bracket markup) and/or class gold keyed by title number.

    A ``within_title_index`` column keys class gold per property; without it
    each row is the title's first property.
    """
    frame = read_table(path, ["title_number"], "ground truth")
    has_spans = address_column in frame.columns
    has_classes = class_column in frame.columns
    if not has_spans and not has_classes:
        raise ConfigurationError(f"ground truth file {path} needs an '{address_column}' or '{class_column}' column")

    records = []
    for row in frame.to_dict(orient="records"):
        text, spans = parse_markup(row[address_column]) if has_spans else ("", [])
        use_class = None
        if has_classes and row[class_column]:
            try:
                use_class = UseClass(row[class_column].strip().lower())
            except ValueError as exc:
                raise DataError(f"unknown use class '{row[class_column]}' for {row['title_number']}") from exc
        index = int(row["within_title_index"]) if row.get("within_title_index") else 0
        try:
            records.append(
                GroundTruthRecord(
                    title_number=row["title_number"],
                    address_text=text,
                    spans=tuple(spans),
                    use_class=use_class,
                    within_title_index=index,
                )
            )
        except ValidationError as exc:
            raise DataError(f"invalid gold record {row['title_number']}: {exc.errors()[0]['msg']}") from exc
    return GroundTruthSet(records=tuple(records))


def load_areal_series(path: Path, kind: SeriesKind, columns: SeriesColumns, name: str = "") -> ArealSeries:
    """Read one per-area value column; duplicate area codes are an error."""
    frame = read_table(path, [columns.area, columns.value], "areal series")
    if frame[columns.area].duplicated().any():
        duplicate = frame.loc[frame[columns.area].duplicated(), columns.area].iloc[0]
        raise DataError(f"{path}: area {duplicate} appears more than once")
    values = pd.to_numeric(frame[columns.value], errors="coerce")
    if values.isna().any():
        raise DataError(f"{path}: non-numeric value for area {frame.loc[values.isna(), columns.area].iloc[0]}")
    series = pd.Series(values.to_numpy(), index=frame[columns.area], name=name or Path(path).stem)
    try:
        return ArealSeries.from_series(series, kind, name=name or Path(path).stem)
    except ValidationError as exc:
        raise DataError(f"{path}: {exc.errors()[0]['msg']}") from exc


def load_adjacency(path: Path, columns: SeriesColumns) -> list[tuple[str, str]]:
    """Read undirected contiguity pairs, dropping self pairs and duplicates."""
    frame = read_table(path, [columns.adjacency_a, columns.adjacency_b], "adjacency")
    pairs = set()
    for a, b in frame[[columns.adjacency_a, columns.adjacency_b]].itertuples(index=False):
        if a and b and a != b:
            pairs.add(tuple(sorted((a, b))))
    return sorted(pairs)


def load_price_distribution(
    pricepaid_path: Path,
    lookup: AreaLookup,
    columns: PricePaidColumns,
    level: AreaLevel = AreaLevel.MSOA,
    report: Optional[IssueReport] = None,
) -> PriceDistribution:
    """Group Price Paid sale prices by the area of each sale's postcode."""
    report = report if report is not None else IssueReport("ingest")
    frame = read_table(pricepaid_path, [columns.postcode, columns.price], "price paid")
    prices = pd.to_numeric(frame[columns.price].str.replace(r"[£,\s]", "", regex=True), errors="coerce")
    areas = frame[columns.postcode].map(canonical_postcode).map(lookup.postcode_index.get)
    codes = areas.map(lambda a: a.at(level) if isinstance(a, AreaCode) else None)
    usable = prices.gt(0) & codes.notna()
    report.count("prices_unusable", int((~usable).sum()))
    grouped: dict[str, list[float]] = defaultdict(list)
    for code, price in zip(codes[usable], prices[usable]):
        grouped[str(code)].append(float(price))
    return PriceDistribution(prices={code: tuple(values) for code, values in sorted(grouped.items())})
