"""Stage runners: each reads one artifact, writes the next plus its sidecars."""
import json
from collections import defaultdict
from pathlib import Path
from typing import Optional

import pandas as pd

from ocod_enhance.core.config import Settings
from ocod_enhance.core.enums import AreaLevel, Resolver, SeriesKind, Stage, UseClass
from ocod_enhance.core.errors import ConfigurationError, DataError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.core.reports import IssueReport
from ocod_enhance.schemas.area import AreaLookup
from ocod_enhance.schemas.hmm import HmmModel
from ocod_enhance.schemas.labelling import LabelledAddress
from ocod_enhance.schemas.metrics import ScoreReport
from ocod_enhance.schemas.register import TitleRecord
from ocod_enhance.services import analyze, artifacts
from ocod_enhance.services.classify import class_breakdown, classify_rows, load_steps
from ocod_enhance.services.denoise import build_lattice, dump_model, fit_hmm, load_model, resolve
from ocod_enhance.services.evaluate import core_mean_fscore, report_frame, score_classes, score_spans
from ocod_enhance.services.expander import expand_title
from ocod_enhance.services.geolocate import localise
from ocod_enhance.services.ingest import (
    build_area_lookup,
    load_adjacency,
    load_areal_series,
    load_ground_truth,
    load_price_distribution,
    load_register,
)
from ocod_enhance.services.parser import parse_address
from ocod_enhance.services.rule_engine import RuleSet, apply_rules, compile_rules, label_records


logger = get_logger(__name__)

ARTIFACTS = {
    Stage.LABEL: "labelled.csv",
    Stage.PARSE: "parsed.csv",
    Stage.EXPAND: "expanded.csv",
    Stage.CLASSIFY: "enhanced.csv",
}
STAGES = list(Stage)
MODEL_FILE = "hmm_model.txt"


def _finish(report: IssueReport, settings: Settings) -> None:
    report.write(settings.PATHS.report_dir)


def resolve_all(labelled: list[LabelledAddress], settings: Settings, model_dir: Optional[Path] = None) -> list[LabelledAddress]:
    """Resolve overlaps with the configured resolver, fitting the HMM if needed."""
    cfg = settings.LABELLING
    model: Optional[HmmModel] = None
    if cfg.resolver is Resolver.HMM:
        if cfg.model_path is not None and Path(cfg.model_path).is_file():
            model = load_model(cfg.model_path)
        else:
            rule_ids = sorted({s.source_rule for item in labelled for s in item.spans})
            model = fit_hmm(
                [build_lattice(item) for item in labelled],
                rule_ids=rule_ids,
                tol=cfg.hmm_tol,
                max_iter=cfg.hmm_max_iter,
                smoothing=cfg.hmm_smoothing,
                seed=cfg.seed,
            )
            if cfg.model_path is not None:
                dump_model(model, cfg.model_path)
            elif model_dir is not None:
                dump_model(model, Path(model_dir) / MODEL_FILE)
    return [resolve(item, cfg.resolver, model) for item in labelled]


def run_label(settings: Settings, register: Path, output: Path, rules: Optional[RuleSet] = None) -> Path:
    report = IssueReport(Stage.LABEL.value)
    records = load_register(register, settings.COLUMNS.register, report)
    rules = rules or compile_rules(settings.PATHS.rules)
    labelled = label_records(records, rules, settings.LABELLING.workers)
    resolved = resolve_all(labelled, settings, model_dir=Path(output).parent)

    artifacts.write_labelled(resolved, output)
    artifacts.write_stats(output, Stage.LABEL.value, len(records) + report.n_rejected, len(resolved), report.summary())
    _finish(report, settings)
    return Path(output)


def run_parse(settings: Settings, labelled_path: Path, output: Path) -> Path:
    report = IssueReport(Stage.PARSE.value)
    items = artifacts.read_labelled(labelled_path)
    rows = [(parsed, item.record) for item in items for parsed in parse_address(item, report)]

    artifacts.write_parsed(rows, output)
    deltas = {"additional_rows": len(rows) - len(items), **report.summary()}
    artifacts.write_stats(output, Stage.PARSE.value, len(items), len(rows), deltas)
    _finish(report, settings)
    return Path(output)


def run_expand(settings: Settings, parsed_path: Path, output: Path) -> Path:
    report = IssueReport(Stage.EXPAND.value)
    parsed = artifacts.read_parsed(parsed_path)
    titles: dict[str, list] = defaultdict(list)
    records: dict[str, TitleRecord] = {}
    for row, record in parsed:
        titles[row.title_number].append(row)
        records.setdefault(row.title_number, record)
    rows = [
        expanded
        for title, group in titles.items()
        for expanded in expand_title(group, records[title], settings.EXPANSION.range_cap, report)
    ]

    artifacts.write_properties(rows, output)
    deltas = {"expanded": len(rows) - len(parsed), **report.summary()}
    artifacts.write_stats(output, Stage.EXPAND.value, len(parsed), len(rows), deltas)
    _finish(report, settings)
    return Path(output)


def area_lookup(settings: Settings, report: Optional[IssueReport] = None) -> AreaLookup:
    paths = settings.PATHS
    if paths.onspd is None:
        raise ConfigurationError("paths.onspd is not set")
    return build_area_lookup(
        paths.onspd,
        paths.pricepaid,
        paths.voa,
        settings.COLUMNS,
        settings.ANALYSIS.voa_exclusions,
        report,
    )


def run_classify(settings: Settings, expanded_path: Path, output: Path, lookup: Optional[AreaLookup] = None) -> Path:
    report = IssueReport(Stage.CLASSIFY.value)
    rows = artifacts.read_properties(expanded_path)
    lookup = lookup or area_lookup(settings, report)
    cfg = settings.CLASSIFICATION
    area_density = cfg.area_density
    if area_density and settings.PATHS.voa is None and not lookup.business_counts_oa:
        logger.warning("No VOA list configured; area-density deduction disabled", extra={"stage": "classify"})
        area_density = False

    located = localise(rows, lookup, report)
    classified = classify_rows(located, load_steps(cfg.steps_file), lookup, cfg.class_labels, area_density, report)

    artifacts.write_properties(classified, output)
    class_breakdown(classified).to_csv(Path(output).with_name("class_breakdown.csv"), index=False, lineterminator="\n")
    deltas = {"contracted": len(classified) - len(rows), **report.summary()}
    artifacts.write_stats(output, Stage.CLASSIFY.value, len(rows), len(classified), deltas)
    _finish(report, settings)
    return Path(output)


RUNNERS = {
    Stage.PARSE: run_parse,
    Stage.EXPAND: run_expand,
    Stage.CLASSIFY: run_classify,
}


def run_pipeline(
    settings: Settings,
    output_dir: Path,
    register: Optional[Path] = None,
    start_at: Stage = Stage.LABEL,
    input_path: Optional[Path] = None,
) -> dict[Stage, Path]:
    """Run the stages from ``start_at`` onward, resuming from ``input_path``.

    Without ``input_path`` a resumed run reads the previous stage's artifact
    from ``output_dir``.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[Stage, Path] = {}
    start = STAGES.index(start_at)

    if start_at is Stage.LABEL:
        register = input_path or register
        if register is None:
            raise ConfigurationError("the label stage needs a register file")
        current = run_label(settings, register, output_dir / ARTIFACTS[Stage.LABEL])
        outputs[Stage.LABEL] = current
    else:
        current = Path(input_path) if input_path else output_dir / ARTIFACTS[STAGES[start - 1]]

    first = current
    for stage in STAGES[max(start, 1):]:
        current = RUNNERS[stage](settings, current, output_dir / ARTIFACTS[stage])
        outputs[stage] = current

    inputs = {
        "register": register if start_at is Stage.LABEL else None,
        "resume_from": first if start_at is not Stage.LABEL else None,
        "rules": settings.PATHS.rules,
        "onspd": settings.PATHS.onspd,
        "pricepaid": settings.PATHS.pricepaid,
        "voa": settings.PATHS.voa,
    }
    artifacts.write_manifest(
        output_dir,
        inputs,
        {stage.value: path for stage, path in outputs.items()},
        settings.snapshot(),
        settings.LABELLING.seed,
    )
    logger.info("Pipeline finished", extra={"stage": "pipeline", "counts": {"stages": [s.value for s in outputs]}})
    return outputs


# ---------------------------------------------------------------------------
# Evaluation and analysis
# ---------------------------------------------------------------------------

def evaluate_spans(settings: Settings, truth: Path, labelled_path: Optional[Path] = None) -> ScoreReport:
    """Score a labelled artifact, or label the gold addresses afresh, against span gold."""
    gold = load_ground_truth(truth)
    if labelled_path is not None:
        predictions = artifacts.read_labelled(labelled_path)
    else:
        rules = compile_rules(settings.PATHS.rules)
        raw = [apply_rules(record.address_text, rules, title_number=record.title_number) for record in gold.records]
        predictions = resolve_all(raw, settings)
    return score_spans(predictions, gold)


def evaluate_classes(truth: Path, enhanced_path: Path, by_title: bool = False) -> ScoreReport:
    return score_classes(artifacts.read_properties(enhanced_path), load_ground_truth(truth), by_title=by_title)


def write_score_report(report: ScoreReport, path: Path, core: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report_frame(report).to_csv(path, index=False, lineterminator="\n")
    if core:
        summary = {"core_mean_f1": core_mean_fscore(report), "micro_f1": report.micro.fscore}
        path.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run_analyze(settings: Settings, enhanced_path: Path, output_dir: Path, lookup: Optional[AreaLookup] = None) -> dict[str, Path]:
    """Metrics tables, UDP totals and per-area series for the domestic rows."""
    cfg, paths, columns = settings.ANALYSIS, settings.PATHS, settings.COLUMNS.series
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    rows = artifacts.read_properties(enhanced_path)
    if cfg.region:
        rows = [row for row in rows if row.region.lower() == cfg.region.lower()]
    domestic = [row for row in rows if row.use_class is UseClass.DOMESTIC]
    if not domestic:
        raise DataError("no domestic properties to analyse")

    homes = load_areal_series(paths.homes, SeriesKind.COUNT, columns, "homes") if paths.homes else None
    external = {name: load_areal_series(p, SeriesKind.COUNT, columns, name) for name, p in sorted(paths.series.items())}
    offshore = analyze.area_counts(domestic, cfg.level, UseClass.DOMESTIC, name="offshore")
    if homes is not None:
        area_ids = homes.area_ids
    else:
        area_ids = tuple(sorted(set(offshore.area_ids).union(*(s.area_ids for s in external.values()))))
    series = {"offshore": analyze.align(offshore, area_ids), **{n: analyze.align(s, area_ids) for n, s in external.items()}}

    weights = None
    if paths.adjacency:
        known = set(area_ids)
        pairs = [(a, b) for a, b in load_adjacency(paths.adjacency, columns) if a in known and b in known]
        weights = analyze.WeightMatrix.from_pairs(area_ids, pairs, cfg.weight_mode)

    prices = fallback = None
    to_price_area = fallback_map = None
    if paths.pricepaid and paths.onspd:
        lookup = lookup or build_area_lookup(paths.onspd, None, None, settings.COLUMNS)
        prices = load_price_distribution(paths.pricepaid, lookup, settings.COLUMNS.pricepaid, AreaLevel.MSOA)
        to_price_area = lookup.lsoa_to_msoa if cfg.level is AreaLevel.LSOA else None
        if cfg.lad_fallback:
            fallback = load_price_distribution(paths.pricepaid, lookup, settings.COLUMNS.pricepaid, AreaLevel.LAD)
            fallback_map = lookup.msoa_to_lad

    def table(named: dict) -> pd.DataFrame:
        return analyze.metrics_table(named, weights, prices, to_price_area, cfg.replicates, cfg.seed, fallback, fallback_map)

    written["metrics"] = output_dir / "metrics.csv"
    table(series).to_csv(written["metrics"], index=False, lineterminator="\n")

    individual, nested = analyze.split_nested(domestic)
    split = {
        "individual": analyze.align(analyze.area_counts(individual, cfg.level, name="individual"), area_ids),
        "nested": analyze.align(analyze.area_counts(nested, cfg.level, name="nested"), area_ids),
    }
    split = {name: s for name, s in split.items() if s.total > 0}
    if split:
        written["metrics_nested"] = output_dir / "metrics_nested.csv"
        table(split).to_csv(written["metrics_nested"], index=False, lineterminator="\n")

    written["country_breakdown"] = output_dir / "country_breakdown.csv"
    analyze.country_breakdown(rows).to_csv(written["country_breakdown"], index=False, lineterminator="\n")

    by_area = pd.DataFrame({name: s.to_series() for name, s in series.items()})
    summary: dict = {"recorded_price": analyze.recorded_price_mean(rows)}
    if homes is not None and external:
        probabilities = [analyze.probability(s, homes) for s in series.values()]
        summary["udp_totals"] = analyze.udp_totals(probabilities, homes, offshore="offshore")
        by_area["udp_probability"] = analyze.udp_probability(probabilities).to_series()
    written["series"] = output_dir / "series_by_area.csv"
    by_area.rename_axis("area_code").to_csv(written["series"], lineterminator="\n")

    written["summary"] = output_dir / "analysis_summary.json"
    written["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Analysis written", extra={"stage": "analyze", "counts": {"domestic": len(domestic), "areas": len(area_ids)}})
    return written
