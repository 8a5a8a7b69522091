"""Privatize per-zone device counts and estimate broadband coverage.

Each zone contributes four device counts: low_speed and high_speed split
the same devices by measured download speed (below / at-or-above the
broadband threshold), while services and non_services split them by
whether the device uses the subset of services whose logs carry speed
measurements. Coverage is estimated from the noisy counts and the zone's
public household total as

    coverage = high_speed * (services + non_services) / (services * households)

that is, the high-speed device count scaled up by the inverse of the
measured-services share, expressed as a fraction of households. The
low_speed count is privatized and published alongside the others but never
enters the coverage formula.

All four counts are privatized independently with sensitivity-1 Laplace
noise and clamped at zero. The release is accounted as two sequential
rounds of two parallel (disjoint-partition) count queries, so its exact
total privacy cost is twice the per-query epsilon.
"""

from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from typing import Mapping, Sequence

from dpcoverage.accountant import EpsilonLike, Query, Sequential, as_epsilon, par, seq, total_epsilon
from dpcoverage.mechanism import LaplaceParams, NoiseSeed, privatize_count

logger = logging.getLogger(__name__)

_ZIP_RE = re.compile(r"^[0-9]{5}$")

# Substream labels for the four counts, in CSV column order.
COUNT_LABELS = ("low_speed", "high_speed", "services", "non_services")

COUNT_SENSITIVITY = 1.0  # one user moves any device count by at most 1


class IngestionError(ValueError):
    """Input records are malformed (bad zone, bad count, duplicate zone)."""


class DegenerateCountError(ValueError):
    """The services count is zero, so the coverage formula has no value."""


def _check_zone(zone: str) -> str:
    if not (isinstance(zone, str) and _ZIP_RE.match(zone)):
        raise IngestionError(f"zone must be a 5-digit zip string, got {zone!r}")
    return zone


def _check_count(name: str, value: int) -> None:
    # bool is an int subclass; reject it explicitly
    if not (isinstance(value, int) and not isinstance(value, bool) and value >= 0):
        raise IngestionError(f"{name} must be a nonnegative integer, got {value!r}")


@dataclass(frozen=True)
class RawZipRecord:
    """True device counts for one zone. Never published."""

    zone: str
    low_speed: int
    high_speed: int
    services: int
    non_services: int

    def __post_init__(self) -> None:
        _check_zone(self.zone)
        _check_count("low_speed", self.low_speed)
        _check_count("high_speed", self.high_speed)
        _check_count("services", self.services)
        _check_count("non_services", self.non_services)


@dataclass(frozen=True)
class HouseholdRecord:
    """Public household total for one zone."""

    zone: str
    households: int

    def __post_init__(self) -> None:
        _check_zone(self.zone)
        if not (isinstance(self.households, int) and not isinstance(self.households, bool) and self.households >= 1):
            raise IngestionError(f"households must be a positive integer, got {self.households!r}")


@dataclass(frozen=True)
class PrivateZipRecord:
    """Clamped noisy counts for one zone plus the epsilon spent on them."""

    zone: str
    low_speed_dp: float
    high_speed_dp: float
    services_dp: float
    non_services_dp: float
    epsilon_total: Decimal

    def __post_init__(self) -> None:
        _check_zone(self.zone)
        for name in ("low_speed_dp", "high_speed_dp", "services_dp", "non_services_dp"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise IngestionError(f"{name} must be a nonnegative finite real, got {value!r}")
        object.__setattr__(self, "epsilon_total", as_epsilon(self.epsilon_total))


@dataclass(frozen=True)
class CoverageEstimate:
    """Published coverage for one zone.

    coverage is clipped to [0, 1]; raw_coverage keeps the pre-clip value
    so analysts can see how aggressive the clip was. Both are None when
    the estimate is undefined (noisy services count of zero, or no
    household figure for the zone). Undefined is reported, never imputed.
    """

    zone: str
    coverage: float | None
    raw_coverage: float | None

    def __post_init__(self) -> None:
        _check_zone(self.zone)
        if (self.coverage is None) != (self.raw_coverage is None):
            raise IngestionError("coverage and raw_coverage must be both set or both None")
        if self.coverage is not None:
            if not (0.0 <= self.coverage <= 1.0):
                raise IngestionError(f"coverage must lie in [0, 1], got {self.coverage!r}")
            if not math.isfinite(self.raw_coverage):
                raise IngestionError(f"raw_coverage must be finite, got {self.raw_coverage!r}")

    @property
    def defined(self) -> bool:
        return self.coverage is not None


def clip_unit(value: float) -> float:
    """Clip to [0, 1]. Post-processing; idempotent."""
    return min(1.0, max(0.0, value))


def compute_coverage(high_speed: float, services: float, non_services: float, households: int) -> float:
    """Coverage estimate before clipping.

    high_speed * (services + non_services) / (services * households).
    Raises DegenerateCountError when services == 0; callers publish
    UNDEFINED for that zone rather than imputing a value.
    """
    for name, value in (("high_speed", high_speed), ("services", services), ("non_services", non_services)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
            raise ValueError(f"{name} must be a nonnegative finite real, got {value!r}")
    if not (isinstance(households, int) and not isinstance(households, bool) and households >= 1):
        raise ValueError(f"households must be a positive integer, got {households!r}")
    if services == 0:
        raise DegenerateCountError("services count is zero; coverage is undefined for this zone")
    return high_speed * (services + non_services) / (services * households)


def release_query_plan(per_query_epsilon: EpsilonLike) -> Sequential:
    """Accounting plan for one release of the four counts.

    low/high speed split one partition of the devices, services/non_services
    split another, so each pair composes in parallel; the two pairs query
    the same underlying devices and compose sequentially.
    """
    eps = as_epsilon(per_query_epsilon)
    return seq(
        par(Query("low_speed", eps), Query("high_speed", eps)),
        par(Query("services", eps), Query("non_services", eps)),
    )


def privatize_record(
    raw: RawZipRecord,
    per_query_epsilon: EpsilonLike,
    base_seed: int,
    *,
    round_counts: bool = False,
) -> PrivateZipRecord:
    """Privatize one zone's four counts with independent seeded noise.

    Noise draws use substreams (zone, "low_speed"/"high_speed"/"services"/"non_services") at iteration 0, so
    a zone's output depends only on its own record and the base seed.
    round_counts optionally rounds the clamped counts to whole devices
    (ties to even); the default publishes real values.
    """
    eps = as_epsilon(per_query_epsilon)
    params = LaplaceParams(COUNT_SENSITIVITY, float(eps))
    values = (raw.low_speed, raw.high_speed, raw.services, raw.non_services)
    noisy = [
        privatize_count(value, params, NoiseSeed(base_seed, raw.zone, label, 0))
        for label, value in zip(COUNT_LABELS, values)
    ]
    if round_counts:
        noisy = [float(round(value)) for value in noisy]
    return PrivateZipRecord(
        zone=raw.zone,
        low_speed_dp=noisy[0],
        high_speed_dp=noisy[1],
        services_dp=noisy[2],
        non_services_dp=noisy[3],
        epsilon_total=total_epsilon(release_query_plan(eps)),
    )


def estimate_coverage(priv: PrivateZipRecord, households: int | None) -> CoverageEstimate:
    """Coverage estimate from noisy counts; UNDEFINED when it has no value."""
    if households is None or priv.services_dp == 0:
        return CoverageEstimate(priv.zone, None, None)
    raw = compute_coverage(priv.high_speed_dp, priv.services_dp, priv.non_services_dp, households)
    return CoverageEstimate(priv.zone, clip_unit(raw), raw)


def release_dataset(
    records: Sequence[RawZipRecord],
    households: Mapping[str, HouseholdRecord],
    per_query_epsilon: EpsilonLike,
    base_seed: int,
    *,
    round_counts: bool = False,
    threads: int = 1,
) -> list[tuple[PrivateZipRecord, CoverageEstimate]]:
    """Privatize every zone in the release list, preserving input order.

    Duplicate zones are rejected up front. Zones with no household figure
    are released with an UNDEFINED coverage estimate (their noisy counts
    are still published) and logged, not dropped. Worker threads only
    change scheduling, never values: each zone is a pure function of its
    record and the base seed.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    seen: set[str] = set()
    for record in records:
        if record.zone in seen:
            raise IngestionError(f"duplicate zone in release list: {record.zone}")
        seen.add(record.zone)

    def one(record: RawZipRecord) -> tuple[PrivateZipRecord, CoverageEstimate]:
        priv = privatize_record(record, per_query_epsilon, base_seed, round_counts=round_counts)
        household = households.get(record.zone)
        if household is None:
            logger.warning("zone %s has no household figure; releasing UNDEFINED coverage", record.zone)
        return priv, estimate_coverage(priv, household.households if household is not None else None)

    if threads == 1 or len(records) < 2:
        return [one(record) for record in records]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, records))
