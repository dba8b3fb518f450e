"""Labelling rule tests."""
import pytest

from ocod_enhance.core.enums import EntityClass
from ocod_enhance.core.errors import ConfigurationError, InputFileError, RuleCompilationError
from ocod_enhance.schemas.labelling import LabelRule
from ocod_enhance.schemas.register import TitleRecord
from ocod_enhance.services.denoise import resolve
from ocod_enhance.services.rule_engine import RuleSet, apply_rules, compile_rules, label_records, postcode_span


def _texts(labelled, entity):
    return [s.text(labelled.address_text) for s in labelled.spans if s.entity is entity]


def test_default_rules_cover_every_class(default_rules):
    """Test the shipped rule file compiles and labels all entity classes."""
    assert len(default_rules) >= 40
    assert set(default_rules.entities()) == set(EntityClass)
    assert default_rules.version == "3"
    assert default_rules.get("postcode_bare").entity is EntityClass.POSTCODE
    assert default_rules.get("no_such_rule") is None
    assert "postcode_bare" in default_rules.rule_ids
    assert len(set(default_rules.rule_ids)) == len(default_rules)


def test_apply_rules_keeps_overlaps(default_rules):
    """Test that all matches are returned, overlapping or not."""
    labelled = apply_rules("flat 5, chartfield house, babel road, london (w1 8ap)", default_rules, "T1")
    assert labelled.title_number == "T1"
    assert _texts(labelled, EntityClass.UNIT_TYPE) == ["flat"]
    assert _texts(labelled, EntityClass.UNIT_ID) == ["5"]
    assert "chartfield house" in _texts(labelled, EntityClass.BUILDING_NAME)
    assert "babel road" in _texts(labelled, EntityClass.STREET_NAME)
    assert "london" in _texts(labelled, EntityClass.CITY)
    # Several postcode rules fire on the same text.
    assert len(_texts(labelled, EntityClass.POSTCODE)) >= 2
    assert not labelled.is_non_overlapping()


def test_range_and_filter_labels(default_rules):
    """Test number ranges and parity filters."""
    labelled = apply_rules("5 to 15 (odds only) babel road, london (w1 8ap)", default_rules)
    assert "5 to 15" in _texts(labelled, EntityClass.STREET_NUMBER)
    assert _texts(labelled, EntityClass.NUMBER_FILTER) == ["odds"]


def test_lookbehind_context_is_not_in_span(default_rules):
    """Test that context matched by look-arounds is outside the span."""
    labelled = apply_rules("units 1 to 3, kings road, london (sw3 4hn)", default_rules)
    assert "1 to 3" in _texts(labelled, EntityClass.UNIT_ID)
    assert "kings road" in _texts(labelled, EntityClass.STREET_NAME)


def test_spans_are_ordered(default_rules):
    """Test span ordering by start, end, class and rule."""
    labelled = apply_rules("flat 16, zebra house, babel road, london (w1 8ap)", default_rules)
    keys = [(s.start, s.end, s.entity.value, s.source_rule) for s in labelled.spans]
    assert keys == sorted(keys)


def test_postcode_span():
    """Test the trailing postcode helper."""
    span = postcode_span("1 high street, leeds ls1 2ab and (m1 4bt)")
    assert span is not None and (span.start, span.end) == (34, 40)
    assert postcode_span("land at marsh lane") is None


def test_label_records_preserves_order(default_rules):
    """Test that labelled records follow input order and keep their record."""
    records = [
        TitleRecord(title_number="B", address_text="7 babel road, london"),
        TitleRecord(title_number="A", address_text="flat 2, regent house, kings road, london"),
    ]
    labelled = label_records(records, default_rules)
    assert [item.title_number for item in labelled] == ["B", "A"]
    assert labelled[1].record == records[1]


def test_duplicate_rule_id():
    """Test that rule ids must be unique."""
    rule = LabelRule(rule_id="r", entity=EntityClass.CITY, pattern="london")
    with pytest.raises(RuleCompilationError, match="duplicate"):
        RuleSet.from_rules([rule, rule])


def test_bad_pattern_reports_rule(tmp_path):
    """Test that a pattern error names the rule."""
    path = tmp_path / "rules.yaml"
    path.write_text(
        "version: 1\nrules:\n"
        "  - rule_id: ok\n    entity: city\n    pattern: 'london'\n"
        "  - rule_id: broken\n    entity: city\n    pattern: '(leeds'\n",
        encoding="utf-8",
    )
    with pytest.raises(RuleCompilationError) as excinfo:
        compile_rules(path)
    assert excinfo.value.rule_id == "broken"
    assert excinfo.value.exit_code == 3


def test_unknown_entity(tmp_path):
    """Test that an unknown entity class is rejected."""
    path = tmp_path / "rules.yaml"
    path.write_text("rules:\n  - rule_id: county\n    entity: county\n    pattern: 'kent'\n", encoding="utf-8")
    with pytest.raises(RuleCompilationError, match="county"):
        compile_rules(path)


def test_rule_file_errors(tmp_path):
    """Test missing and malformed rule files."""
    with pytest.raises(InputFileError):
        compile_rules(tmp_path / "absent.yaml")
    path = tmp_path / "rules.yaml"
    path.write_text("- just a list\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        compile_rules(path)


@pytest.mark.parametrize(
    "address_text, entity, expected",
    [
        ("flat 4, 2 the broadway, london (sw19 1rh)", EntityClass.STREET_NAME, "the broadway"),
        ("flat 4, 2 the broadway, london (sw19 1rh)", EntityClass.STREET_NUMBER, "2"),
        ("penthouse, 20 holland park avenue, london", EntityClass.UNIT_TYPE, "penthouse"),
        ("the old bakery, mill lane, ilkley (ls29 8ef)", EntityClass.BUILDING_NAME, "the old bakery"),
        ("land at windmill farm, great missenden (hp16 9aa)", EntityClass.BUILDING_NAME, "windmill farm"),
    ],
)
def test_less_common_address_forms(default_rules, address_text, entity, expected):
    """Test definite-article streets, bare unit types and named buildings."""
    assert expected in _texts(resolve(apply_rules(address_text, default_rules)), entity)


def test_one_rule_never_overlaps_itself(default_rules):
    """Test that matches of a single rule are disjoint."""
    labelled = apply_rules("5 to 15 (odds only) babel road and 2 to 8 zebra road, london (w1 8ap)", default_rules)
    by_rule = {}
    for span in labelled.spans:
        by_rule.setdefault(span.source_rule, []).append(span)
    for spans in by_rule.values():
        for first, second in zip(spans, spans[1:]):
            assert first.end <= second.start
