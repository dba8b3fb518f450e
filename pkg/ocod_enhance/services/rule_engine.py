"""Regex labelling functions over normalised addresses."""
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Iterable, Optional

import regex
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError
from tqdm import tqdm

from ocod_enhance.core.enums import EntityClass
from ocod_enhance.core.errors import ConfigurationError, InputFileError, RuleCompilationError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.schemas.labelling import LabelledAddress, LabelRule, Span
from ocod_enhance.schemas.register import TitleRecord


logger = get_logger(__name__)

RULE_FLAGS = regex.IGNORECASE | regex.V0
POSTCODE_PATTERN = regex.compile(r"(?<![\w])[a-z]{1,2}[0-9][a-z0-9]? ?[0-9][a-z]{2}(?![\w])", RULE_FLAGS)


class RuleSet(BaseModel):
    """Compiled, immutable labelling rules."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    version: str = ""
    rules: tuple[LabelRule, ...]
    compiled: tuple[Any, ...]

    @classmethod
    def from_rules(cls, rules: Iterable[LabelRule], version: str = "") -> "RuleSet":
        rules = tuple(rules)
        seen: set[str] = set()
        compiled = []
        for rule in rules:
            if rule.rule_id in seen:
                raise RuleCompilationError(rule.rule_id, "duplicate rule_id")
            seen.add(rule.rule_id)
            try:
                compiled.append(regex.compile(rule.pattern, RULE_FLAGS))
            except regex.error as exc:
                raise RuleCompilationError(rule.rule_id, exc.msg if hasattr(exc, "msg") else str(exc), exc.pos) from exc
        return cls(version=version, rules=rules, compiled=tuple(compiled))

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def rule_ids(self) -> tuple[str, ...]:
        return tuple(rule.rule_id for rule in self.rules)

    def entities(self) -> Counter:
        return Counter(rule.entity for rule in self.rules)

    def get(self, rule_id: str) -> Optional[LabelRule]:
        return next((rule for rule in self.rules if rule.rule_id == rule_id), None)


def compile_rules(rule_file: Path) -> RuleSet:
    """Read a YAML rule file and compile every pattern.

    The file holds ``version`` and a ``rules`` list whose entries carry
    ``rule_id``, ``entity``, ``priority`` and ``pattern``.
    """
    rule_file = Path(rule_file)
    if not rule_file.is_file():
        raise InputFileError(rule_file, "rule file not found")
    try:
        data = yaml.safe_load(rule_file.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{rule_file}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("rules"), list):
        raise ConfigurationError(f"{rule_file}: expected a mapping with a 'rules' list")

    rules = []
    for position, entry in enumerate(data["rules"]):
        rule_id = str(entry.get("rule_id", f"#{position}")) if isinstance(entry, dict) else f"#{position}"
        try:
            rules.append(LabelRule.model_validate(entry))
        except ValidationError as exc:
            error = exc.errors()[0]
            field = ".".join(str(p) for p in error["loc"])
            raise RuleCompilationError(rule_id, f"{field}: {error['msg']}") from exc

    rule_set = RuleSet.from_rules(rules, version=str(data.get("version", "")))
    logger.info(
        "Rules compiled",
        extra={"stage": "label", "counts": {"rules": len(rule_set), "file": str(rule_file)}},
    )
    return rule_set


def apply_rules(address: str, rules: RuleSet, title_number: str = "", record: Optional[TitleRecord] = None) -> LabelledAddress:
    """Label every match of every rule; overlapping spans are kept."""
    spans = []
    for rule, pattern in zip(rules.rules, rules.compiled):
        for match in pattern.finditer(address):
            if match.end() > match.start():
                spans.append(
                    Span(
                        start=match.start(),
                        end=match.end(),
                        entity=rule.entity,
                        source_rule=rule.rule_id,
                        priority=rule.priority,
                    )
                )
    spans.sort(key=lambda s: (s.start, s.end, s.entity.value, s.source_rule))
    return LabelledAddress(
        title_number=title_number or (record.title_number if record else ""),
        address_text=address,
        spans=tuple(spans),
        record=record,
    )


def postcode_span(address: str) -> Optional[Span]:
    """The last UK-postcode-shaped match in the address, if any."""
    matches = list(POSTCODE_PATTERN.finditer(address))
    if not matches:
        return None
    last = matches[-1]
    return Span(start=last.start(), end=last.end(), entity=EntityClass.POSTCODE, source_rule="postcode")


def _label_record(record: TitleRecord, rules: RuleSet) -> LabelledAddress:
    return apply_rules(record.address_text, rules, record=record)


def label_records(records: list[TitleRecord], rules: RuleSet, workers: int = 1) -> list[LabelledAddress]:
    """Apply the rules to every record, in input order."""
    labeller = partial(_label_record, rules=rules)
    if workers > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(labeller, records, chunksize=256), total=len(records), desc="label", leave=False))
    return [labeller(record) for record in tqdm(records, desc="label", leave=False)]
