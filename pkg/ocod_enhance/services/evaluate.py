"""Precision, recall and F1 for span labelling and use classification."""
from collections import defaultdict
from typing import Iterable, Mapping, Union

import numpy as np
import pandas as pd

from ocod_enhance.core.enums import EntityClass, MatchMode
from ocod_enhance.core.errors import AlignmentError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.schemas.address import PropertyRow
from ocod_enhance.schemas.labelling import LabelledAddress, Span
from ocod_enhance.schemas.metrics import MetricCounts, ScoreReport
from ocod_enhance.schemas.truth import GroundTruthSet


logger = get_logger(__name__)

CORE_CLASSES = (
    EntityClass.BUILDING_NAME,
    EntityClass.STREET_NUMBER,
    EntityClass.STREET_NAME,
    EntityClass.UNIT_ID,
)
MICRO = "micro avg"

Predictions = Union[Mapping[str, Iterable[Span]], Iterable[LabelledAddress]]


def _as_mapping(pred: Predictions) -> dict[str, list[Span]]:
    if isinstance(pred, Mapping):
        return {title: list(spans) for title, spans in pred.items()}
    return {labelled.title_number: list(labelled.spans) for labelled in pred}


def _match(predicted: list[Span], gold: list[Span], mode: MatchMode) -> tuple[list[Span], list[Span], list[Span]]:
    """Split into (matched predictions, unmatched predictions, unmatched gold)."""
    remaining = list(gold)
    hits, misses = [], []
    for span in sorted(predicted, key=lambda s: (s.start, s.end)):
        if mode is MatchMode.EXACT:
            partner = next((g for g in remaining if g.key == span.key), None)
        else:
            partner = next((g for g in remaining if g.entity is span.entity and g.overlaps(span)), None)
        if partner is None:
            misses.append(span)
        else:
            remaining.remove(partner)
            hits.append(span)
    return hits, misses, remaining


def score_spans(pred: Predictions, gold: GroundTruthSet, mode: MatchMode = MatchMode.EXACT) -> ScoreReport:
    """Score predicted spans against gold spans, title by title.

    Predictions for titles without gold are ignored; gold titles without
    predictions raise ``AlignmentError``.
    """
    predicted = _as_mapping(pred)
    missing = [record.title_number for record in gold.records if record.title_number not in predicted]
    if missing:
        raise AlignmentError(missing)

    tally: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for record in gold.records:
        hits, misses, unmatched = _match(predicted[record.title_number], list(record.spans), mode)
        for span in hits:
            tally[span.entity.value][0] += 1
        for span in misses:
            tally[span.entity.value][1] += 1
        for span in unmatched:
            tally[span.entity.value][2] += 1

    counts = {label: MetricCounts(tp=tp, fp=fp, fn=fn) for label, (tp, fp, fn) in tally.items()}
    report = ScoreReport.from_counts(counts)
    logger.info("Spans scored", extra={"stage": "evaluate", "counts": {"micro_f1": report.micro.fscore, "titles": len(gold)}})
    return report


def score_classes(rows: Iterable[PropertyRow], gold: GroundTruthSet, by_title: bool = False) -> ScoreReport:
    """Score use classes per property, or per title with ``by_title``.

    Title mode compares the first property of each title only.
    """
    rows = list(rows)
    if by_title:
        predicted: dict = {}
        for row in sorted(rows, key=lambda r: r.key):
            predicted.setdefault(row.title_number, row.use_class)
        truth: dict = {}
        for record in sorted(gold.records, key=lambda r: r.key):
            if record.use_class is not None:
                truth.setdefault(record.title_number, record.use_class)
    else:
        predicted = {row.key: row.use_class for row in rows}
        truth = {record.key: record.use_class for record in gold.records if record.use_class is not None}

    missing = [key for key in truth if key not in predicted]
    if missing:
        raise AlignmentError([str(key) for key in missing])

    tally: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for key, expected in truth.items():
        got = predicted[key]
        if got is expected:
            tally[expected.value][0] += 1
        else:
            tally[got.value][1] += 1
            tally[expected.value][2] += 1

    return ScoreReport.from_counts({label: MetricCounts(tp=tp, fp=fp, fn=fn) for label, (tp, fp, fn) in tally.items()})


def core_mean_fscore(report: ScoreReport) -> float:
    """Mean F1 over the address-locating classes; absent classes count as zero."""
    return float(np.mean([
        report.per_class[c.value].fscore if c.value in report.per_class else 0.0
        for c in CORE_CLASSES
    ]))


def report_frame(report: ScoreReport) -> pd.DataFrame:
    rows = [
        {"class": label, "precision": s.precision, "recall": s.recall, "f1": s.fscore, "support": s.support}
        for label, s in report.per_class.items()
    ]
    micro = report.micro
    rows.append({"class": MICRO, "precision": micro.precision, "recall": micro.recall, "f1": micro.fscore, "support": micro.support})
    return pd.DataFrame(rows, columns=["class", "precision", "recall", "f1", "support"])


def format_report(report: ScoreReport) -> str:
    """Aligned plain-text table, two decimals."""
    return report_frame(report).to_string(index=False, float_format=lambda v: f"{v:.2f}")
