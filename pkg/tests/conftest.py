"""Test configuration and fixtures."""
from pathlib import Path

import pandas as pd
import pytest

from ocod_enhance.core.config import DEFAULT_RULES, ColumnSettings, Settings, load_settings
from ocod_enhance.schemas.address import PropertyRow
from ocod_enhance.schemas.area import AreaLookup
from ocod_enhance.services.ingest import build_area_lookup
from ocod_enhance.services.rule_engine import RuleSet, compile_rules


FIXTURES = Path(__file__).parent / "fixtures"
ROW_FIELDS = ("unit_type", "unit_id", "building_name", "street_number", "street_name", "city", "postcode")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def default_rules() -> RuleSet:
    """Compile the shipped labelling rules once per session."""
    return compile_rules(DEFAULT_RULES)


@pytest.fixture(scope="session")
def area_lookup() -> AreaLookup:
    """Create the postcode index and gazetteers from the fixture files."""
    return build_area_lookup(
        FIXTURES / "onspd.csv",
        FIXTURES / "pricepaid.csv",
        FIXTURES / "voa.csv",
        ColumnSettings(),
        voa_exclusions=["ADVERTISING RIGHT", "ADVERTISING HOARDING", "CAR PARKING SPACE"],
    )


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    """Create settings pointing at the fixture data and a scratch output directory."""
    return load_settings(
        overrides={
            "PATHS": {
                "register": FIXTURES / "register.csv",
                "onspd": FIXTURES / "onspd.csv",
                "pricepaid": FIXTURES / "pricepaid.csv",
                "voa": FIXTURES / "voa.csv",
                "span_truth": FIXTURES / "span_gold.csv",
                "class_truth": FIXTURES / "class_gold.csv",
                "adjacency": FIXTURES / "adjacency.csv",
                "homes": FIXTURES / "homes.csv",
                "series": {"airbnb": FIXTURES / "airbnb.csv", "low_use": FIXTURES / "low_use.csv"},
                "output_dir": tmp_path / "output",
                "report_dir": tmp_path / "reports",
            },
            "ANALYSIS": {"replicates": 51},
        }
    )


def make_row(title_number: str = "T1", within_title_index: int = 0, address_text: str = "", **fields) -> PropertyRow:
    """Build a PropertyRow; rows with no terminator field are marked incomplete."""
    terminators = ("unit_type", "unit_id", "building_name", "street_number")
    incomplete = not any(fields.get(name) for name in terminators)
    return PropertyRow(
        title_number=title_number,
        within_title_index=within_title_index,
        address_text=address_text or title_number,
        incomplete=incomplete,
        **fields,
    )


@pytest.fixture(scope="session")
def class_rows() -> list[PropertyRow]:
    """Create property rows from the hand-labelled class fixture."""
    frame = pd.read_csv(FIXTURES / "class_gold.csv", dtype=str, keep_default_na=False)
    sizes = frame["title_number"].value_counts()
    rows = []
    for item in frame.to_dict("records"):
        fields = {name: item[name] or None for name in ROW_FIELDS}
        rows.append(
            make_row(
                item["title_number"],
                int(item["within_title_index"]),
                item["address_text"],
                nested=bool(sizes[item["title_number"]] > 1),
                **fields,
            )
        )
    return rows
