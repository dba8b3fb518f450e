"""Areal analysis of the enhanced dataset.

Joint probability of unconventional domestic property, resampled mean
prices and total values, spatial concentration (entropy) and spatial
autocorrelation (Moran's I) over per-area series.
"""
from collections import defaultdict
from typing import Iterable, Mapping, Optional

import numpy as np
import pandas as pd
from libpysal.weights import W
from scipy import stats

from ocod_enhance.core.enums import AreaLevel, SeriesKind, UseClass, WeightMode
from ocod_enhance.core.errors import DataError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.schemas.address import PropertyRow
from ocod_enhance.schemas.analysis import ArealSeries, MetricsRow, PriceDistribution, SampledEstimate, ValueEstimate


logger = get_logger(__name__)

DEFAULT_REPLICATES = 501


class WeightMatrix:
    """Spatial weights over an ordered set of areas, backed by a libpysal ``W``."""

    def __init__(self, w: W):
        if w.s0 <= 0:
            raise DataError("weight matrix has no positive weights")
        self.w = w

    @property
    def area_ids(self) -> tuple[str, ...]:
        return tuple(self.w.id_order)

    @property
    def total_weight(self) -> float:
        return float(self.w.s0)

    def dense(self) -> np.ndarray:
        return self.w.sparse.toarray()

    @classmethod
    def from_neighbors(
        cls,
        neighbors: Mapping[str, Mapping[str, float]],
        area_ids: Optional[Iterable[str]] = None,
        mode: WeightMode = WeightMode.BINARY,
    ) -> "WeightMatrix":
        """Explicit weights ``{area: {neighbour: weight}}``; self-weights are rejected."""
        order = list(area_ids) if area_ids is not None else sorted(neighbors)
        known = set(order)
        neighbour_lists: dict[str, list[str]] = {a: [] for a in order}
        weight_lists: dict[str, list[float]] = {a: [] for a in order}
        for area, row in neighbors.items():
            for other, weight in row.items():
                if other == area:
                    raise DataError(f"self-weight for area {area}")
                if area not in known or other not in known:
                    raise DataError(f"weight between unknown areas {area}, {other}")
                if weight < 0:
                    raise DataError(f"negative weight between {area} and {other}")
                if weight > 0:
                    neighbour_lists[area].append(other)
                    weight_lists[area].append(float(weight))
        w = W(neighbour_lists, weight_lists, id_order=order, silence_warnings=True)
        if mode is WeightMode.ROW:
            w.transform = "r"
        return cls(w)

    @classmethod
    def from_pairs(
        cls,
        area_ids: Iterable[str],
        pairs: Iterable[tuple[str, str]],
        mode: WeightMode = WeightMode.ROW,
    ) -> "WeightMatrix":
        """Symmetric contiguity weights from undirected adjacency pairs."""
        neighbors: dict[str, dict[str, float]] = defaultdict(dict)
        for a, b in pairs:
            if a == b:
                raise DataError(f"self-adjacency for area {a}")
            neighbors[a][b] = 1.0
            neighbors[b][a] = 1.0
        return cls.from_neighbors(neighbors, area_ids=list(area_ids), mode=mode)


def _check_aligned(*series: ArealSeries) -> tuple[str, ...]:
    area_ids = series[0].area_ids
    for other in series[1:]:
        if other.area_ids != area_ids:
            raise DataError(f"series {other.name or '?'} is not aligned with {series[0].name or '?'}")
    return area_ids


def align(series: ArealSeries, area_ids: Iterable[str], fill: float = 0.0) -> ArealSeries:
    """Reorder onto ``area_ids``; missing areas take ``fill`` and extra areas are dropped."""
    aligned = series.to_series().reindex(list(area_ids), fill_value=fill)
    return ArealSeries.from_series(aligned, series.kind, series.name)


def udp_probability(per_type: list[ArealSeries], offshore: Optional[str] = None) -> ArealSeries:
    """Probability that a home is any of the given unconventional types.

    Types are treated as independent, ``1 - prod(1 - p)``. When ``offshore``
    names one of the series, that type is taken as a subset of the others:
    it is left out of the product and acts only as a floor.
    """
    if not per_type:
        raise DataError("no probability series given")
    area_ids = _check_aligned(*per_type)
    for s in per_type:
        if s.kind is not SeriesKind.PROBABILITY:
            raise DataError(f"series {s.name} is not a probability series")

    independent = [s for s in per_type if s.name != offshore] if offshore else per_type
    product = np.ones(len(area_ids))
    for s in independent:
        product *= 1 - s.to_array()
    joint = 1 - product
    if offshore:
        floor = next((s for s in per_type if s.name == offshore), None)
        if floor is None:
            raise DataError(f"no series named {offshore}")
        joint = np.maximum(joint, floor.to_array())
    return ArealSeries(name="udp", area_ids=area_ids, values=tuple(np.clip(joint, 0, 1)), kind=SeriesKind.PROBABILITY)


def udp_count(prob: ArealSeries, homes: ArealSeries) -> ArealSeries:
    area_ids = _check_aligned(prob, homes)
    return ArealSeries(name="udp", area_ids=area_ids, values=tuple(prob.to_array() * homes.to_array()), kind=SeriesKind.COUNT)


def udp_totals(per_type: list[ArealSeries], homes: ArealSeries, offshore: str) -> dict[str, float]:
    """Total UDP count assuming independent types and assuming offshore is a subset."""
    return {
        "independent": udp_count(udp_probability(per_type), homes).total,
        "subset": udp_count(udp_probability(per_type, offshore=offshore), homes).total,
    }


def probability(counts: ArealSeries, homes: ArealSeries) -> ArealSeries:
    """Per-area share of homes; areas without homes get 0."""
    area_ids = _check_aligned(counts, homes)
    c, h = counts.to_array(), homes.to_array()
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(h > 0, c / h, 0.0)
    over = int((p > 1).sum())
    if over:
        logger.warning("Counts exceed homes; probabilities clipped", extra={"stage": "analyze", "counts": {"areas": over}})
    return ArealSeries(name=counts.name, area_ids=area_ids, values=tuple(np.clip(p, 0, 1)), kind=SeriesKind.PROBABILITY)


def aggregate(series: ArealSeries, mapping: Mapping[str, str]) -> ArealSeries:
    """Sum a fine-level series into coarser areas, e.g. LSOA to MSOA.

    Zero-valued areas without a parent are dropped.
    """
    frame = series.to_series()
    unmapped = [a for a, v in frame.items() if a not in mapping and v != 0]
    if unmapped:
        raise DataError(f"{len(unmapped)} areas have no parent, e.g. {unmapped[0]}")
    frame = frame[frame.index.isin(list(mapping))]
    grouped = frame.groupby(frame.index.map(mapping)).sum().sort_index()
    return ArealSeries.from_series(grouped, series.kind, series.name)


def area_counts(
    rows: Iterable[PropertyRow],
    level: AreaLevel = AreaLevel.LSOA,
    use_class: Optional[UseClass] = UseClass.DOMESTIC,
    area_ids: Optional[Iterable[str]] = None,
    name: str = "offshore",
) -> ArealSeries:
    """Number of located properties per area, optionally of one use class."""
    tally: dict[str, int] = defaultdict(int)
    for row in rows:
        if use_class is not None and row.use_class is not use_class:
            continue
        code = row.area.at(level)
        if code:
            tally[code] += 1
    series = pd.Series(tally, dtype=float, name=name).sort_index()
    if area_ids is not None:
        series = series.reindex(list(area_ids), fill_value=0.0)
    return ArealSeries.from_series(series, SeriesKind.COUNT, name)


def sample_mean_price(
    counts: ArealSeries,
    dist: PriceDistribution,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 42,
    fallback: Optional[PriceDistribution] = None,
    fallback_map: Optional[Mapping[str, str]] = None,
) -> SampledEstimate:
    """Resampled mean price of the properties counted per area.

    Each replicate draws one observed price, with replacement, for every
    property from its own area's prices and records the mean. Replicate
    ``r`` uses the ``r``-th child of ``SeedSequence(seed)``, so results do
    not depend on the order replicates are run in. Areas with properties but
    no prices use ``fallback`` prices of their ``fallback_map`` parent when
    given.
    """
    if replicates < 1:
        raise DataError("replicates must be at least 1")

    pools, sizes = [], []
    for area, count in zip(counts.area_ids, counts.values):
        n = int(round(count))
        if n <= 0:
            continue
        prices = dist.prices.get(area, ())
        if not prices and fallback is not None and fallback_map is not None:
            prices = fallback.prices.get(fallback_map.get(area, ""), ())
        if not prices:
            raise DataError(f"no prices for area {area}, which has {n} properties")
        pools.append(np.asarray(prices, dtype=float))
        sizes.append(n)
    if not sizes:
        raise DataError("no properties to sample prices for")

    flat = np.concatenate(pools)
    offsets = np.repeat(np.cumsum([0] + [len(p) for p in pools[:-1]]), sizes)
    lengths = np.repeat([len(p) for p in pools], sizes)
    z = int(sum(sizes))

    means = []
    for child in np.random.SeedSequence(seed).spawn(replicates):
        rng = np.random.default_rng(child)
        picks = offsets + (rng.random(z) * lengths).astype(np.int64)
        means.append(float(flat[picks].mean()))
    return SampledEstimate(replicate_means=tuple(means), z=z)


def total_value(estimate: SampledEstimate, counts: ArealSeries | int | float) -> ValueEstimate:
    """Point and 95% band of total value: the mean price scaled by the count."""
    n = counts.total if isinstance(counts, ArealSeries) else float(counts)
    count = int(round(n))
    if count == 0:
        return ValueEstimate(total=0.0, lower=0.0, upper=0.0, count=0)
    return ValueEstimate(total=estimate.point * count, lower=estimate.lower * count, upper=estimate.upper * count, count=count)


def shannon_entropy(counts: ArealSeries) -> float:
    """Entropy in bits of the spread of properties across areas."""
    values = counts.to_array()
    if values.sum() <= 0:
        raise DataError(f"series {counts.name or '?'} is all zero")
    return float(stats.entropy(values, base=2))


def morans_i(x: ArealSeries, weights: WeightMatrix) -> float:
    """Global Moran's I: ``(k / S0) * z'Wz / z'z`` with ``z`` the deviations from the mean."""
    if x.area_ids != weights.area_ids:
        raise DataError("series and weight matrix use different area orderings")
    z = x.to_array() - x.to_array().mean()
    denominator = float(z @ z)
    if denominator <= 0:
        raise DataError(f"series {x.name or '?'} has zero variance")
    numerator = float(z @ (weights.w.sparse @ z))
    return len(z) / weights.total_weight * numerator / denominator


def split_nested(rows: Iterable[PropertyRow]) -> tuple[list[PropertyRow], list[PropertyRow]]:
    """Partition into (individual, nested) rows."""
    individual, nested = [], []
    for row in rows:
        (nested if row.nested else individual).append(row)
    return individual, nested


def country_breakdown(rows: Iterable[PropertyRow]) -> pd.DataFrame:
    """Titles, properties and nested properties per country of incorporation."""
    frame = pd.DataFrame(
        [(row.country_incorporated or "unknown", row.title_number, row.nested) for row in rows],
        columns=["country", "title_number", "nested"],
    )
    if frame.empty:
        return pd.DataFrame(columns=["country", "titles", "properties", "nested_properties", "titles_pct", "properties_pct", "nested_pct"])
    table = frame.groupby("country").agg(
        titles=("title_number", "nunique"),
        properties=("title_number", "size"),
        nested_properties=("nested", "sum"),
    )
    for column in ("titles", "properties", "nested_properties"):
        total = table[column].sum()
        table[f"{column.split('_')[0]}_pct"] = table[column] / total * 100 if total else 0.0
    return table.sort_values(["properties", "titles"], ascending=False).reset_index()


def recorded_price_mean(rows: Iterable[PropertyRow]) -> dict[str, float]:
    """Mean register price per title and per property, over titles that record one."""
    prices: dict[str, float] = {}
    properties: dict[str, int] = defaultdict(int)
    for row in rows:
        properties[row.title_number] += 1
        if row.recorded_price is not None:
            prices[row.title_number] = row.recorded_price
    if not prices:
        return {"titles": 0, "mean_per_title": 0.0, "mean_per_property": 0.0}
    total = sum(prices.values())
    return {
        "titles": len(prices),
        "mean_per_title": total / len(prices),
        "mean_per_property": total / sum(properties[t] for t in prices),
    }


def metrics_table(
    series: Mapping[str, ArealSeries],
    weights: Optional[WeightMatrix] = None,
    prices: Optional[PriceDistribution] = None,
    to_price_area: Optional[Mapping[str, str]] = None,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 42,
    fallback: Optional[PriceDistribution] = None,
    fallback_map: Optional[Mapping[str, str]] = None,
) -> pd.DataFrame:
    """One row per property type: counts, value, mean value, entropy and Moran's I.

    Count series are per LSOA; ``to_price_area`` maps them onto the areas
    ``prices`` is keyed by before sampling.
    """
    rows = []
    for name, counts in series.items():
        row: dict = {"type": name, "counts": counts.total}
        if prices is not None and counts.total > 0:
            priced = aggregate(counts, to_price_area) if to_price_area is not None else counts
            estimate = sample_mean_price(
                priced, prices, replicates=replicates, seed=seed, fallback=fallback, fallback_map=fallback_map
            )
            row["mean_value"] = estimate.point
            row["total_value"] = total_value(estimate, priced).total
        row["bits"] = shannon_entropy(counts) if counts.total > 0 else None
        if weights is not None:
            try:
                row["morans_i"] = morans_i(align(counts, weights.area_ids), weights)
            except DataError as exc:
                logger.warning("Moran's I skipped", extra={"stage": "analyze", "counts": {"type": name, "reason": str(exc)}})
        rows.append(MetricsRow(**row).model_dump())
    return pd.DataFrame(rows, columns=["type", "total_value", "counts", "mean_value", "bits", "morans_i"])
