"""Use classification tests."""
import pytest

from ocod_enhance.core.enums import ClassLabels, ClassSource, UseClass
from ocod_enhance.core.errors import ConfigurationError, InputFileError
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.area import AreaCode, AreaLookup
from ocod_enhance.services.classify import (
    class_breakdown,
    classify_rows,
    classify_type1,
    classify_type2,
    contract,
    fill_by_title,
    load_steps,
    select_labels,
)
from ocod_enhance.services.evaluate import score_classes
from ocod_enhance.services.geolocate import localise
from ocod_enhance.services.ingest import load_ground_truth
from tests.conftest import make_row


@pytest.fixture(scope="module")
def steps():
    return load_steps()


def test_default_steps(steps):
    """Test the shipped step file."""
    names = [step.name for step in steps]
    assert len(names) == 12
    assert names[0] == "land_at_start"
    assert names[-1] == "pricepaid_exact_match"


@pytest.mark.parametrize(
    "address_text, fields, expected, rule",
    [
        ("land adjoining 12 mill lane, leeds", {"street_number": "12", "street_name": "mill lane"}, UseClass.LAND, "land_at_start"),
        ("garage 4, babel road, london", {"unit_type": "garage", "unit_id": "4"}, UseClass.CARPARK, "carpark_text"),
        ("the airspace above 7 babel road", {"street_number": "7"}, UseClass.AIRSPACE, "airspace"),
        ("flat 5, chartfield house", {"unit_type": "flat", "unit_id": "5"}, UseClass.DOMESTIC, "domestic_unit_type"),
        ("the offices, 1 broad street", {"street_number": "1"}, UseClass.BUSINESS, "business_keywords"),
        ("the red lion, 4 high street, leeds", {"building_name": "the red lion", "street_number": "4"}, UseClass.BUSINESS, "pub_building_name"),
        ("part of 9 mill lane", {"street_number": "9"}, UseClass.BUSINESS, "part_of_address"),
        ("units 1 to 3, kings road", {"unit_type": "units", "unit_id": "1"}, UseClass.BUSINESS, "units_without_building"),
    ],
)
def test_type1_steps(steps, address_text, fields, expected, rule):
    """Test each text and field step."""
    row = classify_type1(make_row(address_text=address_text, **fields), steps)
    assert row.class_type1 is expected
    assert row.matched_rule == rule
    assert row.class_source is ClassSource.TYPE1


def test_type1_gazetteer_steps(steps, area_lookup):
    """Test the VOA and Price Paid exact matches."""
    business = make_row(address_text="12 market street", street_number="12", street_name="market street", postcode="m1 4bt")
    domestic = make_row(address_text="7 babel road", street_number="7", street_name="babel road", postcode="w1 8ap")
    assert classify_type1(business, steps, area_lookup).matched_rule == "voa_exact_match"
    assert classify_type1(domestic, steps, area_lookup).class_type1 is UseClass.DOMESTIC
    # Without a lookup the gazetteer steps cannot match.
    assert classify_type1(domestic, steps).class_type1 is UseClass.UNKNOWN


def test_type1_no_match(steps, area_lookup):
    """Test that unmatched rows stay unknown."""
    row = classify_type1(make_row(address_text="22 quiet road", street_number="22", street_name="quiet road"), steps, area_lookup)
    assert row.class_type1 is UseClass.UNKNOWN
    assert row.matched_rule == "none"


def test_type2_unit_in_park(area_lookup):
    """Test that units in a park are businesses."""
    (row,) = classify_type2([make_row(address_text="unit 5, riverside park", unit_id="5")], area_lookup)
    assert row.class_type2 is UseClass.BUSINESS
    assert row.class_type1 is UseClass.UNKNOWN
    assert row.matched_rule == "unit_in_park"


def test_type2_locality_match(area_lookup):
    """Test the street-and-locality Price Paid match."""
    (row,) = classify_type2([make_row(street_number="7", street_name="babel road", city="london")], area_lookup)
    assert row.class_type2 is UseClass.DOMESTIC
    assert row.class_source is ClassSource.TYPE2
    assert row.matched_rule == "locality_address_match"


def test_type2_both_gazetteers():
    """Test that an address in both gazetteers stays unknown."""
    key = "1|a road|town"
    lookup = AreaLookup(domestic_by_locality={key: AreaCode()}, business_by_locality={key: AreaCode()})
    report = IssueReport("classify")
    (row,) = classify_type2([make_row(street_number="1", street_name="a road", city="town")], lookup, report=report)
    assert row.class_type2 is UseClass.UNKNOWN
    assert report.counters["both_gazetteers"] == 1


def test_type2_business_density(area_lookup):
    """Test the no-business-in-area deduction."""
    quiet = make_row(street_number="99", street_name="babel road", area=area_lookup.postcode_index["W1 8AP"])
    busy = make_row(street_number="99", street_name="market street", area=area_lookup.postcode_index["M1 4BT"])
    rows = classify_type2([quiet, busy], area_lookup)
    assert rows[0].class_type2 is UseClass.DOMESTIC
    assert rows[0].matched_rule == "no_business_in_oa"
    assert rows[1].class_type2 is UseClass.UNKNOWN
    (off,) = classify_type2([quiet], area_lookup, area_density=False)
    assert off.class_type2 is UseClass.UNKNOWN


def test_type2_needs_street_number(area_lookup):
    """Test that a row without a street number stays unknown."""
    row = make_row(street_name="babel road", city="london", area=area_lookup.postcode_index["W1 8AP"])
    (out,) = classify_type2([row], area_lookup)
    assert out.class_type2 is UseClass.UNKNOWN
    assert out.class_source is ClassSource.NONE
    assert out.matched_rule == "none"


def test_fill_by_title():
    """Test that unknown nested rows take the title majority."""
    rows = [
        make_row("T1", 0, unit_id="1", nested=True, class_type2=UseClass.DOMESTIC),
        make_row("T1", 1, unit_id="2", nested=True),
        make_row("T1", 2, unit_id="3", nested=True, class_type2=UseClass.AIRSPACE),
        make_row("T2", 0, unit_id="1", nested=True, class_type2=UseClass.CARPARK),
        make_row("T2", 1, unit_id="2", nested=True),
    ]
    report = IssueReport("classify")
    filled = fill_by_title(rows, report)
    assert filled[1].class_type2 is UseClass.DOMESTIC
    assert filled[1].matched_rule == "title_fill"
    # Car parks and airspace never spread to siblings.
    assert filled[4].class_type2 is UseClass.UNKNOWN
    assert report.counters["filled_from_title"] == 1


def test_select_labels():
    """Test switching between Type 1 and Type 2 labels."""
    row = make_row(street_number="1", class_type1=UseClass.UNKNOWN, class_type2=UseClass.DOMESTIC)
    assert select_labels([row], ClassLabels.TYPE1)[0].use_class is UseClass.UNKNOWN
    assert select_labels([row])[0].use_class is UseClass.DOMESTIC


def test_contract():
    """Test that non-domestic rows collapse to one per title."""
    rows = [
        make_row("T1", 0, unit_id="1", nested=True, use_class=UseClass.BUSINESS),
        make_row("T1", 1, unit_id="2", nested=True, use_class=UseClass.BUSINESS),
        make_row("T1", 2, unit_id="3", nested=True, use_class=UseClass.DOMESTIC),
        make_row("T1", 3, unit_id="4", nested=True, use_class=UseClass.UNKNOWN),
        make_row("T2", 0, unit_id="1", use_class=UseClass.LAND),
    ]
    report = IssueReport("classify")
    out = contract(rows, report)
    assert [(r.title_number, r.within_title_index) for r in out] == [("T1", 0), ("T1", 2), ("T2", 0)]
    assert not out[0].nested
    assert out[1].nested
    assert report.counters["contracted_rows"] == 2
    assert not any(r.nested and r.use_class is not UseClass.DOMESTIC for r in out)


def test_class_breakdown():
    """Test per-class counts and percentages."""
    rows = [
        make_row("T1", unit_id="1", use_class=UseClass.DOMESTIC),
        make_row("T2", unit_id="1", use_class=UseClass.DOMESTIC),
        make_row("T3", unit_id="1", use_class=UseClass.LAND),
        make_row("T4", unit_id="1", use_class=UseClass.BUSINESS),
    ]
    frame = class_breakdown(rows)
    assert list(frame.columns) == ["class", "count", "percentage"]
    assert len(frame) == len(UseClass)
    assert frame.iloc[0]["class"] == "domestic"
    assert frame.iloc[0]["percentage"] == 50.0
    assert frame["percentage"].sum() == pytest.approx(100.0)


def test_class_fixture_fscore(fixtures_dir, class_rows, area_lookup, steps):
    """Test classification quality on the hand-labelled class fixture."""
    rows = classify_rows(localise(class_rows, area_lookup), steps, area_lookup)
    report = score_classes(rows, load_ground_truth(fixtures_dir / "class_gold.csv"))
    assert report.micro.fscore >= 0.94
    assert not any(r.nested and r.use_class is not UseClass.DOMESTIC for r in rows)


def test_load_steps_errors(tmp_path):
    """Test missing, malformed and inconsistent step files."""
    with pytest.raises(InputFileError):
        load_steps(tmp_path / "absent.yaml")

    path = tmp_path / "steps.yaml"
    path.write_text("- not a mapping\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_steps(path)

    path.write_text("steps:\n  - name: empty\n    use_class: land\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="step #0"):
        load_steps(path)

    path.write_text(
        "steps:\n"
        "  - name: twice\n    use_class: land\n    pattern: '^land'\n"
        "  - name: twice\n    use_class: land\n    pattern: '^plot'\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigurationError, match="duplicate"):
        load_steps(path)
