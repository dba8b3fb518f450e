"""Areal analysis tests."""
import math

import numpy as np
import pytest

from ocod_enhance.core.enums import AreaLevel, SeriesKind, UseClass, WeightMode
from ocod_enhance.core.errors import DataError
from ocod_enhance.schemas.analysis import ArealSeries, PriceDistribution
from ocod_enhance.schemas.area import AreaCode
from ocod_enhance.services.analyze import (
    WeightMatrix,
    aggregate,
    align,
    area_counts,
    country_breakdown,
    metrics_table,
    morans_i,
    probability,
    recorded_price_mean,
    sample_mean_price,
    shannon_entropy,
    split_nested,
    total_value,
    udp_probability,
    udp_totals,
)
from tests.conftest import make_row


def _series(values, name="x", kind=SeriesKind.COUNT, ids=None):
    ids = ids or [f"A{i:02d}" for i in range(len(values))]
    return ArealSeries(name=name, area_ids=tuple(ids), values=tuple(float(v) for v in values), kind=kind)


def _prob(values, name):
    return _series(values, name, SeriesKind.PROBABILITY)


def _grid_pairs(size):
    ids = [f"c{i}{j}" for i in range(size) for j in range(size)]
    pairs = []
    for i in range(size):
        for j in range(size):
            if i + 1 < size:
                pairs.append((f"c{i}{j}", f"c{i + 1}{j}"))
            if j + 1 < size:
                pairs.append((f"c{i}{j}", f"c{i}{j + 1}"))
    return ids, pairs


def _naive_morans_i(values, weights):
    mean = float(np.mean(values))
    z = [float(v) - mean for v in values]
    w = np.asarray(weights, dtype=float).tolist()
    n = len(z)
    s0 = 0.0
    cross = 0.0
    for i in range(n):
        for j in range(n):
            s0 += w[i][j]
            cross += w[i][j] * z[i] * z[j]
    return n / s0 * cross / sum(v * v for v in z)


def test_udp_independent():
    """Test the joint probability of independent types."""
    joint = udp_probability([_prob([0.1], "a"), _prob([0.2], "b"), _prob([0.3], "c")])
    assert joint.values[0] == pytest.approx(0.496)
    assert udp_probability([_prob([0.5], "a"), _prob([0.5], "b")]).values[0] == pytest.approx(0.75)
    assert joint.kind is SeriesKind.PROBABILITY


def test_udp_offshore_subset():
    """Test that an offshore subset only acts as a floor."""
    per_type = [_prob([0.1, 0.1], "airbnb"), _prob([0.2, 0.2], "low_use"), _prob([0.05, 0.5], "offshore")]
    joint = udp_probability(per_type, offshore="offshore")
    assert joint.values == pytest.approx((0.28, 0.5))
    with pytest.raises(DataError):
        udp_probability(per_type, offshore="missing")


def test_udp_totals():
    """Test UDP totals scaled by homes under both assumptions."""
    per_type = [_prob([0.5, 0.0], "airbnb"), _prob([0.5, 0.1], "offshore")]
    homes = _series([100, 10], "homes")
    totals = udp_totals(per_type, homes, offshore="offshore")
    assert totals["independent"] == pytest.approx(75 + 1)
    assert totals["subset"] == pytest.approx(50 + 1)


def test_udp_rejects_bad_input():
    """Test misaligned and non-probability inputs."""
    with pytest.raises(DataError):
        udp_probability([])
    with pytest.raises(DataError):
        udp_probability([_prob([0.1], "a"), _series([0.1], "b", SeriesKind.PROBABILITY, ids=["Z"])])
    with pytest.raises(DataError):
        udp_probability([_series([3], "counts")])


def test_probability():
    """Test shares of homes, clipped, with empty areas at zero."""
    p = probability(_series([5, 20, 3]), _series([10, 10, 0]))
    assert p.values == (0.5, 1.0, 0.0)


@pytest.mark.parametrize("k", [2, 4, 8, 4835])
def test_entropy_of_uniform(k):
    """Test that an even spread over k areas has log2(k) bits."""
    assert shannon_entropy(_series([3] * k)) == pytest.approx(math.log2(k), abs=1e-12)


def test_entropy_of_spike():
    """Test that everything in one area has zero bits."""
    assert shannon_entropy(_series([0, 0, 7, 0])) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DataError):
        shannon_entropy(_series([0, 0]))


@pytest.mark.parametrize("mode", list(WeightMode))
def test_morans_i_checkerboard(mode):
    """Test perfect negative autocorrelation on a rook checkerboard."""
    ids, pairs = _grid_pairs(4)
    weights = WeightMatrix.from_pairs(ids, pairs, mode)
    values = [(int(a[1]) + int(a[2])) % 2 for a in ids]
    assert morans_i(_series(values, ids=ids), weights) == pytest.approx(-1.0, abs=1e-12)


def test_morans_i_matches_double_sum():
    """Test the vectorised statistic against the textbook double sum."""
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(3, 201))
        ids = [f"A{i:03d}" for i in range(n)]
        upper = np.triu(rng.random((n, n)) < 4 / n, k=1)
        upper[np.arange(n - 1), np.arange(1, n)] = True
        dense = np.where(upper, rng.uniform(0.1, 2.0, (n, n)), 0.0)
        dense = dense + dense.T
        neighbors = {}
        for i, j in zip(*np.nonzero(dense)):
            neighbors.setdefault(ids[i], {})[ids[j]] = float(dense[i, j])
        values = rng.poisson(5, n) + rng.random(n)
        weights = WeightMatrix.from_neighbors(neighbors, ids, WeightMode.BINARY)
        expected = _naive_morans_i(values, dense)
        assert morans_i(_series(list(values), ids=ids), weights) == pytest.approx(expected, abs=1e-12)


def test_row_standardised_weights():
    """Test that row mode rescales each row to sum to one."""
    ids, pairs = _grid_pairs(3)
    dense = WeightMatrix.from_pairs(ids, pairs, WeightMode.ROW).dense()
    assert np.allclose(dense.sum(axis=1), 1.0)
    assert WeightMatrix.from_pairs(ids, pairs, WeightMode.BINARY).total_weight == 2 * len(pairs)


def test_weight_errors():
    """Test self-weights, unknown areas, empty matrices and zero variance."""
    with pytest.raises(DataError):
        WeightMatrix.from_pairs(["a", "b"], [("a", "a")])
    with pytest.raises(DataError):
        WeightMatrix.from_neighbors({"a": {"z": 1.0}}, ["a", "b"])
    with pytest.raises(DataError):
        WeightMatrix.from_pairs(["a", "b"], [])
    weights = WeightMatrix.from_pairs(["a", "b"], [("a", "b")])
    with pytest.raises(DataError):
        morans_i(_series([2, 2], ids=["a", "b"]), weights)
    with pytest.raises(DataError):
        morans_i(_series([1, 2], ids=["b", "a"]), weights)


def test_degenerate_prices_have_no_spread():
    """Test that single-price areas give a fixed mean."""
    dist = PriceDistribution(prices={"M1": (100000.0,), "M2": (300000.0,)})
    estimate = sample_mean_price(_series([10, 30], ids=["M1", "M2"]), dist, replicates=101)
    assert estimate.point == pytest.approx(250000.0)
    assert estimate.std == 0.0
    assert estimate.lower == estimate.upper == pytest.approx(250000.0)
    assert estimate.z == 40


def test_sampled_mean_is_unbiased():
    """Test the resampled mean against the count-weighted area means."""
    dist = PriceDistribution(prices={"M1": (90000.0, 110000.0), "M2": (290000.0, 310000.0)})
    estimate = sample_mean_price(_series([10, 30], ids=["M1", "M2"]), dist, replicates=501, seed=11)
    assert estimate.replicates == 501
    assert estimate.std > 0
    standard_error = estimate.std / math.sqrt(estimate.replicates)
    assert abs(estimate.point - 250000.0) <= 3 * standard_error
    assert estimate.lower < estimate.point < estimate.upper


def test_spread_shrinks_with_sample_size():
    """Test that the replicate spread scales as one over the square root of z."""
    dist = PriceDistribution(prices={"M1": (100000.0, 200000.0, 300000.0, 400000.0)})
    small = sample_mean_price(_series([10], ids=["M1"]), dist, replicates=501, seed=3)
    large = sample_mean_price(_series([1000], ids=["M1"]), dist, replicates=501, seed=3)
    assert small.std / large.std == pytest.approx(math.sqrt(1000 / 10), rel=0.2)


def test_sampling_is_seeded():
    """Test that a seed fixes every replicate."""
    dist = PriceDistribution(prices={"M1": (1.0, 2.0, 3.0, 4.0)})
    counts = _series([25], ids=["M1"])
    first = sample_mean_price(counts, dist, replicates=31, seed=5)
    assert first.replicate_means == sample_mean_price(counts, dist, replicates=31, seed=5).replicate_means
    assert first.replicate_means != sample_mean_price(counts, dist, replicates=31, seed=6).replicate_means
    # A replicate does not depend on how many were drawn.
    assert first.replicate_means[:10] == sample_mean_price(counts, dist, replicates=10, seed=5).replicate_means


def test_sampling_needs_prices():
    """Test missing prices, the fallback level and empty counts."""
    counts = _series([2, 0], ids=["M1", "M2"])
    with pytest.raises(DataError, match="M1"):
        sample_mean_price(counts, PriceDistribution(prices={}), replicates=3)
    fallback = PriceDistribution(prices={"L1": (5.0,)})
    estimate = sample_mean_price(counts, PriceDistribution(prices={}), replicates=3, fallback=fallback, fallback_map={"M1": "L1"})
    assert estimate.point == 5.0
    with pytest.raises(DataError):
        sample_mean_price(_series([0]), PriceDistribution(prices={}), replicates=3)
    with pytest.raises(DataError):
        sample_mean_price(counts, fallback, replicates=0)


def test_total_value():
    """Test the total scaled by the count."""
    dist = PriceDistribution(prices={"M1": (100000.0,), "M2": (300000.0,)})
    counts = _series([10, 30], ids=["M1", "M2"])
    value = total_value(sample_mean_price(counts, dist, replicates=5), counts)
    assert value.total == pytest.approx(10_000_000)
    assert value.count == 40
    assert total_value(sample_mean_price(counts, dist, replicates=5), 0).total == 0.0


def test_aggregate_and_align():
    """Test LSOA to MSOA sums and realignment."""
    lsoa = _series([1, 2, 3, 0], ids=["L1", "L2", "L3", "L4"])
    msoa = aggregate(lsoa, {"L1": "M1", "L2": "M1", "L3": "M2"})
    assert dict(zip(msoa.area_ids, msoa.values)) == {"M1": 3.0, "M2": 3.0}
    with pytest.raises(DataError):
        aggregate(lsoa, {"L1": "M1"})
    aligned = align(msoa, ["M2", "M3"])
    assert aligned.area_ids == ("M2", "M3")
    assert aligned.values == (3.0, 0.0)


def test_area_counts():
    """Test per-area property counts by class."""
    area = AreaCode(oa="O1", lsoa="L1", msoa="M1", lad="D1")
    rows = [
        make_row("T1", 0, unit_id="1", area=area, use_class=UseClass.DOMESTIC),
        make_row("T1", 1, unit_id="2", area=area, use_class=UseClass.DOMESTIC),
        make_row("T2", 0, unit_id="1", area=area, use_class=UseClass.BUSINESS),
        make_row("T3", 0, unit_id="1", use_class=UseClass.DOMESTIC),
    ]
    counts = area_counts(rows, AreaLevel.LSOA, area_ids=["L1", "L2"])
    assert counts.values == (2.0, 0.0)
    assert area_counts(rows, AreaLevel.MSOA, use_class=None).values == (3.0,)


def test_country_breakdown_and_split():
    """Test per-country title and property counts."""
    rows = [
        make_row("T1", 0, unit_id="1", country_incorporated="JERSEY", nested=True),
        make_row("T1", 1, unit_id="2", country_incorporated="JERSEY", nested=True),
        make_row("T2", 0, unit_id="1", country_incorporated="JERSEY"),
        make_row("T3", 0, unit_id="1", country_incorporated="BVI"),
    ]
    table = country_breakdown(rows)
    jersey = table.iloc[0]
    assert jersey["country"] == "JERSEY"
    assert (jersey["titles"], jersey["properties"], jersey["nested_properties"]) == (2, 3, 2)
    assert table["properties_pct"].sum() == pytest.approx(100.0)
    individual, nested = split_nested(rows)
    assert len(individual) == 2 and len(nested) == 2
    assert country_breakdown([]).empty


def test_recorded_price_mean():
    """Test register price means per title and per property."""
    rows = [
        make_row("T1", 0, unit_id="1", recorded_price=1_000_000),
        make_row("T1", 1, unit_id="2", recorded_price=1_000_000),
        make_row("T2", 0, unit_id="1", recorded_price=500_000),
        make_row("T3", 0, unit_id="1"),
    ]
    means = recorded_price_mean(rows)
    assert means == {"titles": 2, "mean_per_title": 750_000, "mean_per_property": 500_000}


def test_metrics_table():
    """Test the per-type metrics table."""
    ids = ["L1", "L2", "L3"]
    series = {"offshore": _series([4, 0, 2], "offshore", ids=ids), "airbnb": _series([0, 0, 0], "airbnb", ids=ids)}
    weights = WeightMatrix.from_pairs(ids, [("L1", "L2"), ("L2", "L3")])
    prices = PriceDistribution(prices={"M1": (200000.0,)})
    table = metrics_table(series, weights, prices, {"L1": "M1", "L2": "M1", "L3": "M1"}, replicates=5)
    assert list(table.columns) == ["type", "total_value", "counts", "mean_value", "bits", "morans_i"]
    offshore = table.set_index("type").loc["offshore"]
    assert offshore["counts"] == 6
    assert offshore["total_value"] == pytest.approx(1_200_000)
    assert offshore["bits"] == pytest.approx(-(4 / 6) * math.log2(4 / 6) - (2 / 6) * math.log2(2 / 6))
    # Zero series: no value, no entropy, Moran's I skipped.
    airbnb = table.set_index("type").loc["airbnb"]
    assert airbnb["counts"] == 0
    assert airbnb[["total_value", "bits", "morans_i"]].isna().all()
