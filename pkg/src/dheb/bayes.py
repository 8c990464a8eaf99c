"""Closed-form Bayesian math for per-node RPC estimation.

The regression model inside a node is revenue = beta * clicks + noise with
homoskedastic normal noise. A normal prior on beta is conjugate, so the
posterior is available in closed form from the node's sufficient statistics.
All functions here are pure; everything is double precision, and the update
works in precisions (inverse variances) to avoid catastrophic cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .data import Dataset, Observation
from .errors import EmptyNodeError, InsufficientDataError
from .instrumentation import counters

# Lower bound for every estimated variance, in squared-RPC units. Keeps
# precisions finite on perfect-fit or zero-dispersion nodes. Configurable
# through the training config.
DEFAULT_VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class NormalParams:
    """Mean and variance of a normal distribution over an RPC slope."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("normal parameters must be finite")
        if self.variance <= 0:
            raise ValueError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class NodeSufficientStats:
    """Sufficient statistics of one node's observations.

    xtx = sum of squared clicks, xty = sum of clicks*revenue, n = observation
    count, sse_ols = residual sum of squares at the node's OLS slope. Since
    every observation has clicks >= 1, xtx == 0 iff n == 0.
    """

    xtx: float
    xty: float
    n: int
    sse_ols: float

    def __post_init__(self) -> None:
        if self.xtx < 0 or self.n < 0 or self.sse_ols < 0:
            raise ValueError("xtx, n and sse_ols must be non-negative")
        if (self.xtx == 0) != (self.n == 0):
            raise ValueError("xtx == 0 must coincide with n == 0")


def stats_from_xy(xs: Sequence[float], ys: Sequence[float]) -> NodeSufficientStats:
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    xtx = 0.0
    xty = 0.0
    for x, y in zip(xs, ys):
        xtx += x * x
        xty += x * y
    sse = 0.0
    if xtx > 0:
        beta = xty / xtx
        for x, y in zip(xs, ys):
            r = y - beta * x
            sse += r * r
    return NodeSufficientStats(xtx=xtx, xty=xty, n=len(xs), sse_ols=max(sse, 0.0))


def stats_from_observations(observations: Iterable[Observation]) -> NodeSufficientStats:
    obs = list(observations)
    return stats_from_xy([o.clicks for o in obs], [o.revenue for o in obs])


def ols(stats: NodeSufficientStats) -> float:
    """Least-squares slope of revenue on clicks for one node."""
    if stats.xtx == 0:
        raise EmptyNodeError("cannot compute OLS slope of an empty node")
    return stats.xty / stats.xtx


def residual_variance(
    stats: NodeSufficientStats, variance_floor: float = DEFAULT_VARIANCE_FLOOR
) -> float:
    """Per-node noise variance estimate sse_ols / (n - 1), floored.

    Raises InsufficientDataError for n < 2; the caller applies its fallback
    policy (tree nodes inherit the parent estimate).
    """
    counters.bump("residual_variance")
    if stats.n < 2:
        raise InsufficientDataError(
            f"residual variance needs at least 2 observations, node has {stats.n}"
        )
    return max(stats.sse_ols / (stats.n - 1), variance_floor)


def posterior_update(
    prior: NormalParams, stats: NodeSufficientStats, sigma_eps_sq: float
) -> NormalParams:
    """Conjugate posterior of the node slope given its data.

    posterior precision = prior precision + xtx / sigma_eps_sq
    posterior mean = precision-weighted average of the prior mean and the
    data term xty / sigma_eps_sq. A node with no data keeps its prior exactly.
    """
    counters.bump("posterior_update")
    if not math.isfinite(sigma_eps_sq) or sigma_eps_sq <= 0:
        raise ValueError(f"sigma_eps_sq must be positive and finite, got {sigma_eps_sq}")
    if not (math.isfinite(stats.xtx) and math.isfinite(stats.xty)):
        raise ValueError("non-finite sufficient statistics")
    if stats.n == 0:
        return prior
    prior_precision = 1.0 / prior.variance
    data_precision = stats.xtx / sigma_eps_sq
    precision = prior_precision + data_precision
    mean = (prior.mean / prior.variance + stats.xty / sigma_eps_sq) / precision
    return NormalParams(mean=mean, variance=1.0 / precision)


def sse_at(stats: NodeSufficientStats, beta: float) -> float:
    """Sum of squared errors of predicting revenue as beta * clicks.

    Exact identity: ||y - beta*x||^2 = sse_ols + xtx * (beta - ols)^2, so the
    value is available from the sufficient statistics at any slope.
    """
    if stats.n == 0:
        return 0.0
    d = beta - ols(stats)
    return stats.sse_ols + stats.xtx * d * d


def empirical_prior(
    ds: Dataset | Iterable[Observation], variance_floor: float = DEFAULT_VARIANCE_FLOOR
) -> NormalParams:
    """Root prior estimated from the whole dataset.

    Mean: click-weighted mean RPC, sum(y) / sum(x). Variance: click-weighted
    sample variance of per-observation ratios y/x with denominator
    sum(x) - 1, floored at variance_floor when the ratios have no dispersion.
    """
    counters.bump("empirical_prior")
    obs = list(ds.observations if isinstance(ds, Dataset) else ds)
    sum_x = 0.0
    sum_y = 0.0
    for o in obs:
        sum_x += o.clicks
        sum_y += o.revenue
    if sum_x < 2:
        raise InsufficientDataError(
            f"empirical prior needs total clicks >= 2, got {sum_x}"
        )
    mean = sum_y / sum_x
    wssd = 0.0
    for o in obs:
        d = o.revenue / o.clicks - mean
        wssd += o.clicks * d * d
    variance = max(wssd / (sum_x - 1.0), variance_floor)
    return NormalParams(mean=mean, variance=variance)
