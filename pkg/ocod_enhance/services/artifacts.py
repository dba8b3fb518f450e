"""Stage artifacts: CSV files with fixed columns, stats sidecars and the run manifest.

Every stage reads the previous stage's CSV and writes its own, so a run can
resume from any intermediate file. Outputs carry no timestamps; re-running a
stage on the same inputs reproduces them byte for byte.
"""
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import pandas as pd
from pydantic import ValidationError

from ocod_enhance.core.enums import EntityClass
from ocod_enhance.core.errors import InputFileError, SchemaMismatchError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.schemas.address import ParsedAddress, PropertyRow
from ocod_enhance.schemas.area import AreaCode
from ocod_enhance.schemas.labelling import LabelledAddress, Span
from ocod_enhance.schemas.register import TitleRecord


logger = get_logger(__name__)

RECORD_COLUMNS = ("title_number", "address_text", "country_incorporated", "recorded_price", "region")
LABELLED_COLUMNS = RECORD_COLUMNS + ("spans",)
ADDRESS_COLUMNS = (
    "title_number", "within_title_index", "unit_id", "unit_type", "building_name", "street_number",
    "street_name", "number_filter", "city", "postcode", "incomplete",
)
PARSED_COLUMNS = ADDRESS_COLUMNS + RECORD_COLUMNS[1:]
AREA_COLUMNS = ("oa", "lsoa", "msoa", "lad")
PROPERTY_COLUMNS = PARSED_COLUMNS + (
    "nested", *AREA_COLUMNS, "localisation_source",
    "class_type1", "class_type2", "use_class", "class_source", "matched_rule",
)


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _read(path: Path, columns: tuple[str, ...], what: str) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(path, f"{what} artifact not found")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaMismatchError(f"{path}: {what} artifact lacks columns {missing}")
    return frame


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def _blank(value: str) -> Optional[str]:
    return value if value != "" else None


def _flag(value: str) -> bool:
    return value.strip().lower() in ("true", "1")


def _record_fields(item: dict[str, str]) -> dict[str, Any]:
    price = _blank(item["recorded_price"])
    return {
        "address_text": item["address_text"],
        "country_incorporated": item["country_incorporated"],
        "region": item["region"],
        "recorded_price": float(price) if price is not None else None,
    }


def _validated(model, fields: dict[str, Any], path: Path, line: int):
    try:
        return model(**fields)
    except (ValidationError, ValueError) as exc:
        raise SchemaMismatchError(f"{path}: line {line}: {exc}") from exc


# ---------------------------------------------------------------------------
# labelled.csv
# ---------------------------------------------------------------------------

def spans_to_json(spans: Iterable[Span]) -> str:
    return json.dumps([[s.start, s.end, s.entity.value, s.source_rule, s.priority] for s in spans], separators=(",", ":"))


def spans_from_json(text: str) -> tuple[Span, ...]:
    return tuple(
        Span(start=start, end=end, entity=EntityClass(entity), source_rule=rule, priority=priority)
        for start, end, entity, rule, priority in json.loads(text or "[]")
    )


def write_labelled(items: Iterable[LabelledAddress], path: Path) -> Path:
    rows = []
    for item in items:
        record = item.record
        rows.append({
            "title_number": item.title_number,
            "address_text": item.address_text,
            "country_incorporated": record.country_incorporated if record else "",
            "recorded_price": record.recorded_price if record else None,
            "region": record.region if record else "",
            "spans": spans_to_json(item.sorted_spans()),
        })
    return _write(pd.DataFrame(rows, columns=list(LABELLED_COLUMNS)), path)


def read_labelled(path: Path) -> list[LabelledAddress]:
    frame = _read(path, LABELLED_COLUMNS, "labelled")
    items = []
    for line, item in enumerate(frame.to_dict("records"), start=2):
        try:
            spans = spans_from_json(item["spans"])
        except (ValueError, TypeError, ValidationError) as exc:
            raise SchemaMismatchError(f"{path}: line {line}: unreadable spans ({exc})") from exc
        record = _validated(TitleRecord, {"title_number": item["title_number"], **_record_fields(item)}, path, line)
        items.append(_validated(
            LabelledAddress,
            {"title_number": item["title_number"], "address_text": item["address_text"], "spans": spans, "record": record},
            path,
            line,
        ))
    return items


# ---------------------------------------------------------------------------
# parsed.csv
# ---------------------------------------------------------------------------

def write_parsed(rows: Iterable[tuple[ParsedAddress, Optional[TitleRecord]]], path: Path) -> Path:
    """Parsed rows, each carrying its title's register fields."""
    out = []
    for parsed, record in rows:
        data = parsed.model_dump(mode="json")
        data.update({
            "address_text": record.address_text if record else "",
            "country_incorporated": record.country_incorporated if record else "",
            "recorded_price": record.recorded_price if record else None,
            "region": record.region if record else "",
        })
        out.append(data)
    return _write(pd.DataFrame(out, columns=list(PARSED_COLUMNS)), path)


def _address_fields(item: dict[str, str]) -> dict[str, Any]:
    fields: dict[str, Any] = {c: _blank(item[c]) for c in ADDRESS_COLUMNS}
    fields["title_number"] = item["title_number"]
    fields["within_title_index"] = int(item["within_title_index"] or 0)
    fields["number_filter"] = item["number_filter"] or "none"
    fields["incomplete"] = _flag(item["incomplete"])
    return fields


def read_parsed(path: Path) -> list[tuple[ParsedAddress, TitleRecord]]:
    frame = _read(path, PARSED_COLUMNS, "parsed")
    out = []
    for line, item in enumerate(frame.to_dict("records"), start=2):
        parsed = _validated(ParsedAddress, _address_fields(item), path, line)
        record = _validated(TitleRecord, {"title_number": item["title_number"], **_record_fields(item)}, path, line)
        out.append((parsed, record))
    return out


# ---------------------------------------------------------------------------
# expanded.csv / enhanced.csv
# ---------------------------------------------------------------------------

def property_frame(rows: Iterable[PropertyRow]) -> pd.DataFrame:
    out = []
    for row in rows:
        data = row.model_dump(mode="json", exclude={"area"})
        data.update(row.area.model_dump())
        out.append(data)
    return pd.DataFrame(out, columns=list(PROPERTY_COLUMNS))


def write_properties(rows: Iterable[PropertyRow], path: Path) -> Path:
    return _write(property_frame(rows), path)


def read_properties(path: Path) -> list[PropertyRow]:
    frame = _read(path, PROPERTY_COLUMNS, "property")
    rows = []
    for line, item in enumerate(frame.to_dict("records"), start=2):
        fields = _address_fields(item)
        fields.update(_record_fields(item))
        fields.update({
            "nested": _flag(item["nested"]),
            "area": _validated(AreaCode, {c: _blank(item[c]) for c in AREA_COLUMNS}, path, line),
            "localisation_source": item["localisation_source"] or "none",
            "class_type1": item["class_type1"] or "unknown",
            "class_type2": item["class_type2"] or "unknown",
            "use_class": item["use_class"] or "unknown",
            "class_source": item["class_source"] or "none",
            "matched_rule": item["matched_rule"] or "none",
        })
        rows.append(_validated(PropertyRow, fields, path, line))
    return rows


# ---------------------------------------------------------------------------
# Sidecars
# ---------------------------------------------------------------------------

def _dump_json(data: Mapping[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def stats_path(artifact: Path) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(f"{artifact.stem}.stats.json")


def write_stats(artifact: Path, stage: str, rows_in: int, rows_out: int, deltas: Optional[Mapping[str, int]] = None) -> Path:
    """``<artifact>.stats.json``: rows in and out plus the itemised differences."""
    return _dump_json(
        {"stage": stage, "rows_in": rows_in, "rows_out": rows_out, "deltas": dict(sorted((deltas or {}).items()))},
        stats_path(artifact),
    )


def read_stats(artifact: Path) -> dict[str, Any]:
    path = stats_path(artifact)
    if not path.is_file():
        raise InputFileError(path, "stats file not found")
    return json.loads(path.read_text(encoding="utf-8"))


def write_manifest(
    directory: Path,
    inputs: Mapping[str, Optional[Path]],
    outputs: Mapping[str, Path],
    config: Mapping[str, Any],
    seed: int,
) -> Path:
    """``run_manifest.json``: input and output hashes plus the settings used."""
    def describe(paths: Mapping[str, Optional[Path]]) -> dict[str, Any]:
        return {
            name: {"path": str(path), "sha256": sha256(path)}
            for name, path in sorted(paths.items())
            if path is not None and Path(path).is_file()
        }

    path = _dump_json(
        {"inputs": describe(inputs), "outputs": describe(outputs), "config": dict(config), "seed": seed},
        Path(directory) / "run_manifest.json",
    )
    logger.info("Run manifest written", extra={"stage": "pipeline", "counts": {"inputs": len(inputs), "outputs": len(outputs)}})
    return path
