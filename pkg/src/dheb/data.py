"""Observations, feature schemas, dataset containers, CSV ingestion, sparsity.

Data model: one row per (date, bid unit) with at least one click. Rows with
zero clicks are dropped at ingestion so that every stored observation has
clicks >= 1 and all downstream math can assume a positive regressor.
Category domains are data-defined: unseen categories are admitted and added
to the schema's domain as they appear.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import IngestError

logger = logging.getLogger(__name__)

# Fixed CSV columns surrounding the feature columns.
RESERVED_COLUMNS = ("date", "bid_unit_id", "clicks", "revenue")

# The bid-unit level is the fixed bottom of every hierarchy. It is addressable
# in group_by() but is never a candidate intermediate split feature.
BID_UNIT_FEATURE = "bid_unit_id"

# Day-of-week is an ordinary categorical feature of each observation; at
# prediction time it can be derived from the query date with day_of_week().
DAY_OF_WEEK_FEATURE = "day_of_week"
_DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def day_of_week(day: dt.date) -> str:
    return _DAY_NAMES[day.weekday()]


@dataclass(frozen=True)
class Observation:
    """One unit-day record: clicks x, revenue y, and the unit's categories."""

    date: dt.date
    bid_unit_id: str
    clicks: int
    revenue: float
    features: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.clicks < 1:
            raise ValueError(f"observation must have clicks >= 1, got {self.clicks}")
        if not math.isfinite(self.revenue) or self.revenue < 0:
            raise ValueError(f"observation revenue must be finite and >= 0, got {self.revenue}")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered structural features and their (data-defined) category domains.

    The bid-unit identifier is the designated bottom feature and is kept out
    of `feature_names`; it is always present on every observation.
    """

    feature_names: tuple[str, ...]
    domains: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        for reserved in RESERVED_COLUMNS:
            if reserved in self.feature_names:
                raise ValueError(f"{reserved!r} is a reserved column, not a feature name")
        for name in self.domains:
            if name not in self.feature_names:
                raise ValueError(f"domain given for unknown feature {name!r}")

    def index_of(self, feature: str) -> int:
        try:
            return self.feature_names.index(feature)
        except ValueError:
            raise KeyError(f"unknown feature {feature!r}") from None


@dataclass(frozen=True)
class Dataset:
    """Immutable set of observations plus schema and an inclusive day range.

    Immutability makes a Dataset safe to share across concurrent readers.
    """

    observations: tuple[Observation, ...]
    schema: FeatureSchema
    date_range: tuple[dt.date, dt.date] | None = None
    # Ingestion metadata; not part of dataset identity.
    dropped_zero_click_rows: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        k = len(self.schema.feature_names)
        for obs in self.observations:
            if len(obs.features) != k:
                raise ValueError(
                    f"observation has {len(obs.features)} feature values, schema has {k}"
                )
            if self.date_range is not None:
                lo, hi = self.date_range
                if not lo <= obs.date <= hi:
                    raise ValueError(f"observation date {obs.date} outside range {lo}..{hi}")

    def __len__(self) -> int:
        return len(self.observations)

    def days(self) -> list[dt.date]:
        """All calendar days of the inclusive range."""
        if self.date_range is None:
            return []
        lo, hi = self.date_range
        return [lo + dt.timedelta(days=i) for i in range((hi - lo).days + 1)]

    def bid_units(self) -> list[str]:
        seen: dict[str, None] = {}
        for obs in self.observations:
            seen.setdefault(obs.bid_unit_id, None)
        return list(seen)

    def restrict_days(self, lo: dt.date, hi: dt.date) -> "Dataset":
        obs = tuple(o for o in self.observations if lo <= o.date <= hi)
        return Dataset(obs, self.schema, (lo, hi))


def group_by(ds: Dataset, feature: str) -> dict[str, Dataset]:
    """Partition a dataset by one feature's categories.

    The parts are disjoint, preserve observation order, and their union is the
    input dataset. `feature` may also be the bid-unit bottom level.
    """
    if feature == BID_UNIT_FEATURE:
        key = lambda obs: obs.bid_unit_id  # noqa: E731
    else:
        idx = ds.schema.index_of(feature)
        key = lambda obs: obs.features[idx]  # noqa: E731
    parts: dict[str, list[Observation]] = {}
    for obs in ds.observations:
        parts.setdefault(key(obs), []).append(obs)
    return {
        cat: Dataset(tuple(group), ds.schema, ds.date_range) for cat, group in parts.items()
    }


@dataclass(frozen=True)
class SparsityStats:
    """Fractions of inactivity in a raw unit-day table.

    x_sparsity: share of unit-days with zero clicks.
    y_sparsity: share of clicked unit-days with zero revenue; None when there
    are no clicked unit-days (undefined).
    """

    x_sparsity: float
    y_sparsity: float | None

    def __post_init__(self) -> None:
        if not 0.0 <= self.x_sparsity <= 1.0:
            raise ValueError("x_sparsity must lie in [0, 1]")
        if self.y_sparsity is not None and not 0.0 <= self.y_sparsity <= 1.0:
            raise ValueError("y_sparsity must lie in [0, 1]")


def sparsity(unit_days: Iterable[tuple[int, float]]) -> SparsityStats:
    """Compute sparsity fractions from raw (clicks, revenue) unit-day rows.

    The table must cover a fixed date range for a fixed unit set, one row per
    unit-day, including the inactive ones.
    """
    total = 0
    zero_click = 0
    clicked_zero_revenue = 0
    for clicks, revenue in unit_days:
        total += 1
        if clicks == 0:
            zero_click += 1
        elif revenue == 0:
            clicked_zero_revenue += 1
    if total == 0:
        raise ValueError("empty unit-day table")
    clicked = total - zero_click
    y = None if clicked == 0 else clicked_zero_revenue / clicked
    return SparsityStats(x_sparsity=zero_click / total, y_sparsity=y)


def unit_day_table(
    ds: Dataset, units: Sequence[str] | None = None
) -> list[tuple[int, float]]:
    """Expand a dataset to the full unit x day grid of (clicks, revenue).

    Days absent from the dataset count as zero-click unit-days (zero-click
    rows were dropped at ingestion). Duplicate rows for a unit-day are summed.
    """
    if ds.date_range is None:
        raise ValueError("dataset has no date range")
    if units is None:
        units = ds.bid_units()
    cell: dict[tuple[str, dt.date], tuple[int, float]] = {}
    for obs in ds.observations:
        k = (obs.bid_unit_id, obs.date)
        x, y = cell.get(k, (0, 0.0))
        cell[k] = (x + obs.clicks, y + obs.revenue)
    table = []
    for unit in units:
        for day in ds.days():
            table.append(cell.get((unit, day), (0, 0.0)))
    return table


def _parse_row(
    line_no: int, row: list[str], n_features: int
) -> tuple[dt.date, str, list[str], int, float]:
    if len(row) != n_features + 4:
        raise IngestError(
            f"line {line_no}: expected {n_features + 4} fields, got {len(row)}"
        )
    raw_date, unit = row[0], row[1]
    cats = row[2 : 2 + n_features]
    raw_clicks, raw_revenue = row[-2], row[-1]
    try:
        date = dt.date.fromisoformat(raw_date)
    except ValueError:
        raise IngestError(f"line {line_no}: bad ISO-8601 date {raw_date!r}") from None
    try:
        clicks = int(raw_clicks)
    except ValueError:
        raise IngestError(f"line {line_no}: bad clicks value {raw_clicks!r}") from None
    try:
        revenue = float(raw_revenue)
    except ValueError:
        raise IngestError(f"line {line_no}: bad revenue value {raw_revenue!r}") from None
    if clicks < 0:
        raise IngestError(f"line {line_no}: negative clicks {clicks}")
    if not math.isfinite(revenue) or revenue < 0:
        raise IngestError(f"line {line_no}: negative or non-finite revenue {revenue}")
    if not unit:
        raise IngestError(f"line {line_no}: empty bid_unit_id")
    return date, unit, cats, clicks, revenue


def ingest_csv(path: str, schema: FeatureSchema | None = None) -> Dataset:
    """Read a dataset from CSV, dropping zero-click rows.

    Header layout: date,bid_unit_id,<feature1>,...,<featureK>,clicks,revenue.
    With an explicit schema the feature columns must match it exactly; with
    schema=None the feature columns are inferred from the header. The number
    of dropped zero-click rows is logged and recorded on the returned Dataset.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, missing header") from None
        if len(header) < 4 or header[:2] != ["date", "bid_unit_id"] or header[-2:] != [
            "clicks",
            "revenue",
        ]:
            raise IngestError(
                f"{path}: header must be date,bid_unit_id,<features...>,clicks,revenue"
            )
        feature_names = tuple(header[2:-2])
        if schema is not None and feature_names != schema.feature_names:
            raise IngestError(
                f"{path}: feature columns {feature_names} do not match schema "
                f"{schema.feature_names}"
            )

        seen: dict[str, set[str]] = {name: set() for name in feature_names}
        if schema is not None:
            for name, domain in schema.domains.items():
                seen[name].update(domain)
        observations: list[Observation] = []
        dropped = 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            date, unit, cats, clicks, revenue = _parse_row(line_no, row, len(feature_names))
            if clicks == 0:
                dropped += 1
                continue
            for name, cat in zip(feature_names, cats):
                seen[name].add(cat)
            observations.append(Observation(date, unit, clicks, revenue, tuple(cats)))

    out_schema = FeatureSchema(
        feature_names, {name: frozenset(cats) for name, cats in seen.items()}
    )
    date_range = None
    if observations:
        dates = [o.date for o in observations]
        date_range = (min(dates), max(dates))
    if dropped:
        logger.info("ingest %s: dropped %d zero-click rows", path, dropped)
    return Dataset(
        tuple(observations), out_schema, date_range, dropped_zero_click_rows=dropped
    )


def write_csv(ds: Dataset, path: str) -> None:
    """Write a dataset in the ingestion CSV format (lossless round-trip)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["date", "bid_unit_id", *ds.schema.feature_names, "clicks", "revenue"]
        )
        for obs in ds.observations:
            writer.writerow(
                [obs.date.isoformat(), obs.bid_unit_id, *obs.features, obs.clicks, repr(obs.revenue)]
            )
