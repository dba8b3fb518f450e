"""Localisation tests."""
from ocod_enhance.core.enums import LocalisationSource
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.services.geolocate import locate_row, localise
from tests.conftest import make_row


def test_postcode_lookup(area_lookup):
    """Test that a directory postcode gives the full hierarchy."""
    row = locate_row(make_row(street_number="7", street_name="babel road", postcode="w1 8ap"), area_lookup)
    assert row.localisation_source is LocalisationSource.POSTCODE
    assert (row.area.oa, row.area.lsoa, row.area.msoa, row.area.lad) == (
        "E00000001", "E01000001", "E02000001", "E09000033",
    )


def test_unknown_postcode_falls_back_to_pricepaid(area_lookup):
    """Test the Price Paid fallback keyed by street and locality."""
    report = IssueReport("classify")
    row = make_row(street_number="7", street_name="babel road", city="london", postcode="zz9 9zz")
    located = locate_row(row, area_lookup, report)
    assert located.localisation_source is LocalisationSource.PRICEPAID
    assert located.area.oa == "E00000001"
    assert report.counters["postcode_not_in_directory"] == 1


def test_voa_fallback(area_lookup):
    """Test the business gazetteer fallback."""
    row = locate_row(make_row(street_number="12", street_name="market street", city="manchester"), area_lookup)
    assert row.localisation_source is LocalisationSource.VOA
    assert row.area.oa == "E00000004"


def test_unlocatable_row(area_lookup):
    """Test that a row with no usable evidence stays unlocated."""
    row = locate_row(make_row(street_number="3", street_name="nowhere lane", city="atlantis"), area_lookup)
    assert row.area.is_empty
    assert row.localisation_source is LocalisationSource.NONE


def test_located_row_is_unchanged(area_lookup):
    """Test that an already located row is left alone."""
    row = make_row(street_number="7", postcode="sw3 4hn", area=area_lookup.postcode_index["W1 8AP"])
    assert locate_row(row, area_lookup) is row


def test_siblings_share_area(area_lookup):
    """Test that unlocated rows inherit from their title."""
    rows = [
        make_row("T1", 0, unit_type="flat", unit_id="5", building_name="chartfield house", postcode="w1 8ap"),
        make_row("T1", 1, unit_type="flat", unit_id="16", building_name="zebra house"),
        make_row("T2", 0, building_name="the mill"),
    ]
    located = localise(rows, area_lookup)
    assert located[1].localisation_source is LocalisationSource.INHERITED
    assert located[1].area == located[0].area
    assert located[2].area.is_empty


def test_conflicting_siblings_take_majority(area_lookup):
    """Test majority inheritance when siblings disagree."""
    report = IssueReport("classify")
    rows = [
        make_row("T1", 0, street_number="1", postcode="sw3 4hn"),
        make_row("T1", 1, street_number="2", postcode="w1 8ap"),
        make_row("T1", 2, street_number="3", postcode="w1 8ap"),
        make_row("T1", 3, street_number="4"),
    ]
    located = localise(rows, area_lookup, report)
    assert located[3].area.lsoa == "E01000001"
    assert report.counters["conflicting_sibling_areas"] == 1
    assert report.counters["located_postcode"] == 3
    assert report.counters["located_inherited"] == 1
