"""Simulated error ranges for privatized coverage estimates.

Works purely on already-privatized counts. Fresh Laplace noise (same
scale as the release) is layered on top of the released noisy counts k
times; each trial's noisy counts are clamped at zero and pushed through
the same clipped coverage formula as the release, and the deviations

    d_i = released_coverage - trial_coverage_i

are summarized per zone as mean absolute error, mean signed deviation and
the nearest-rank 95th percentile of |d_i|. Only the three counts that
enter the coverage formula (high_speed, services, non_services) are
re-noised. Trials whose noisy services count clamps to zero have no
trial coverage; they are excluded from the statistics and reported via
defined_fraction instead of being imputed.

Because the raw counts are never touched, everything here is
post-processing of the released record and spends no privacy budget.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from dpcoverage.mechanism import LaplaceParams, NoiseSeed, laplace_sample, laplace_stream
from dpcoverage.release import COUNT_SENSITIVITY, HouseholdRecord, PrivateZipRecord, clip_unit, compute_coverage

# Substreams re-noised per trial; same labels as the release, which uses
# iteration 0 of each. Trials use iterations 1..k.
SIMULATED_LABELS = ("high_speed", "services", "non_services")


@dataclass(frozen=True)
class SimulationConfig:
    """Trial count, per-query epsilon and master seed for one simulation."""

    per_query_epsilon: float
    base_seed: int
    k: int = 1000

    def __post_init__(self) -> None:
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not (isinstance(self.base_seed, int) and self.base_seed >= 0):
            raise ValueError(f"base_seed must be a nonnegative integer, got {self.base_seed!r}")
        # delegate epsilon domain checks
        LaplaceParams(COUNT_SENSITIVITY, float(self.per_query_epsilon))


@dataclass(frozen=True)
class ErrorReport:
    """Per-zone deviation summary.

    Statistics are None when no trial produced a defined deviation
    (defined_fraction == 0); k always records the trials attempted.
    """

    zone: str
    mae: float | None
    msd: float | None
    p95: float | None
    k: int
    defined_fraction: float


@dataclass(frozen=True)
class BucketSummary:
    """Mean error statistics over zones grouped by household count.

    high is None for the unbounded top bucket. Means are None when the
    bucket holds no zone with defined statistics.
    """

    low: int
    high: int | None
    zone_count: int
    mean_mae: float | None
    mean_msd: float | None
    mean_p95: float | None


def nearest_rank(values: Sequence[float] | np.ndarray, q: float) -> float:
    """Nearest-rank percentile: element ceil(q*n) of the ascending sort.

    Always returns a member of values; no interpolation.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q!r}")
    data = np.sort(np.asarray(values, dtype=float))
    if data.size == 0:
        raise ValueError("nearest_rank of an empty sequence is undefined")
    return float(data[math.ceil(q * data.size) - 1])


def summarize_deviations(deviations: Sequence[float] | np.ndarray) -> tuple[float, float, float]:
    """(mae, msd, p95) of a vector of defined deviations."""
    d = np.asarray(deviations, dtype=float)
    if d.size == 0:
        raise ValueError("cannot summarize zero deviations")
    absolute = np.abs(d)
    return float(np.mean(absolute)), float(np.mean(d)), nearest_rank(absolute, 0.95)


def deviation_from_noise(
    priv: PrivateZipRecord,
    households: int,
    eta_high: float,
    eta_services: float,
    eta_non_services: float,
) -> float | None:
    """Deviation of one re-noised trial from the released coverage.

    Pure in the noise: the three Laplace draws are passed explicitly.
    Returns None when the trial (or the release itself) has no defined
    coverage.
    """
    if priv.services_dp == 0:
        return None
    released = clip_unit(compute_coverage(priv.high_speed_dp, priv.services_dp, priv.non_services_dp, households))
    high = max(0.0, priv.high_speed_dp + eta_high)
    services = max(0.0, priv.services_dp + eta_services)
    non_services = max(0.0, priv.non_services_dp + eta_non_services)
    if services == 0:
        return None
    trial = clip_unit(compute_coverage(high, services, non_services, households))
    return released - trial


def simulate_once(
    priv: PrivateZipRecord,
    households: int,
    per_query_epsilon: float,
    seed: NoiseSeed,
) -> float | None:
    """One re-noised trial at the seed's iteration index.

    The three draws come from substreams (priv.zone, "high_speed"/"services"/"non_services") at
    seed.iteration; only base_seed and iteration are read from the seed,
    the zone and labels are fixed by the record and the procedure.
    """
    params = LaplaceParams(COUNT_SENSITIVITY, float(per_query_epsilon))
    etas = [
        laplace_sample(params, NoiseSeed(seed.base_seed, priv.zone, label, seed.iteration))
        for label in SIMULATED_LABELS
    ]
    return deviation_from_noise(priv, households, *etas)


def trial_deviations(priv: PrivateZipRecord, households: int, config: SimulationConfig) -> np.ndarray:
    """Defined deviations for trials 1..k of one zone, vectorized.

    Undefined trials are dropped, so the result can be shorter than k.
    Bit-identical to calling simulate_once at each iteration: the batched
    substream draws and the numpy arithmetic reproduce the scalar path
    exactly (same IEEE operations in the same order).
    """
    params = LaplaceParams(COUNT_SENSITIVITY, float(config.per_query_epsilon))
    k = config.k
    eta = {
        label: laplace_stream(params, config.base_seed, priv.zone, label, start=1, count=k)
        for label in SIMULATED_LABELS
    }
    released = clip_unit(compute_coverage(priv.high_speed_dp, priv.services_dp, priv.non_services_dp, households))
    high = np.maximum(0.0, priv.high_speed_dp + eta["high_speed"])
    services = np.maximum(0.0, priv.services_dp + eta["services"])
    non_services = np.maximum(0.0, priv.non_services_dp + eta["non_services"])
    defined = services > 0.0
    high, services, non_services = high[defined], services[defined], non_services[defined]
    raw = high * (services + non_services) / (services * households)
    trial = np.minimum(1.0, np.maximum(0.0, raw))
    return released - trial


def estimate_error_ranges(
    priv: PrivateZipRecord,
    households: int | None,
    config: SimulationConfig,
) -> ErrorReport:
    """Deviation statistics over k seeded trials for one zone.

    Zones whose released coverage is undefined (services_dp == 0 or no
    household figure) get a report with defined_fraction 0 and absent
    statistics.
    """
    if households is None or priv.services_dp == 0:
        return ErrorReport(priv.zone, None, None, None, config.k, 0.0)
    d = trial_deviations(priv, households, config)
    if d.size == 0:
        return ErrorReport(priv.zone, None, None, None, config.k, 0.0)
    mae, msd, p95 = summarize_deviations(d)
    return ErrorReport(priv.zone, mae, msd, p95, config.k, d.size / config.k)


def error_reports_for_release(
    privs: Sequence[PrivateZipRecord],
    households: Mapping[str, HouseholdRecord],
    config: SimulationConfig,
    *,
    threads: int = 1,
) -> list[ErrorReport]:
    """Reports for a whole release, in input order.

    Each zone is independent, so worker threads change scheduling only.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    def one(priv: PrivateZipRecord) -> ErrorReport:
        household = households.get(priv.zone)
        return estimate_error_ranges(priv, household.households if household is not None else None, config)

    if threads == 1 or len(privs) < 2:
        return [one(priv) for priv in privs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, privs))


def bucket_by_households(
    reports: Sequence[tuple[ErrorReport, int]],
    thresholds: Sequence[int],
) -> list[BucketSummary]:
    """Group zones into half-open household buckets and average their stats.

    thresholds must be strictly ascending; they induce buckets
    [t0, t1), ..., [t_{n-2}, t_{n-1}), plus an unbounded [t_{n-1}, inf)
    so every zone at or above the first threshold lands in exactly one
    bucket. Zones below the first threshold are an error. Zones with
    absent statistics count toward zone_count but not toward the means.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("at least one threshold is required")
    if any(not isinstance(t, int) or isinstance(t, bool) for t in thresholds):
        raise ValueError(f"thresholds must be integers, got {thresholds!r}")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError(f"thresholds must be strictly ascending, got {thresholds!r}")

    edges: list[tuple[int, int | None]] = [
        (low, high) for low, high in zip(thresholds, thresholds[1:])
    ] + [(thresholds[-1], None)]
    members: list[list[ErrorReport]] = [[] for _ in edges]

    for report, households in reports:
        if households < thresholds[0]:
            raise ValueError(
                f"zone {report.zone} has households={households}, below the first threshold {thresholds[0]}"
            )
        for index, (low, high) in enumerate(edges):
            if households >= low and (high is None or households < high):
                members[index].append(report)
                break

    summaries = []
    for (low, high), bucket in zip(edges, members):
        defined = [r for r in bucket if r.mae is not None]
        if defined:
            mean_mae = float(np.mean([r.mae for r in defined]))
            mean_msd = float(np.mean([r.msd for r in defined]))
            mean_p95 = float(np.mean([r.p95 for r in defined]))
        else:
            mean_mae = mean_msd = mean_p95 = None
        summaries.append(BucketSummary(low, high, len(bucket), mean_mae, mean_msd, mean_p95))
    return summaries
