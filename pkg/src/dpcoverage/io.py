"""CSV formats for the pipeline's inputs and outputs.

All files use comma separators, a fixed header row, and LF line endings
(so repeat runs are byte-identical across platforms). Undefined values
are written as empty fields, never imputed. Full-precision floats are
written with repr, which round-trips exactly; only the published
broadband_usage column is fixed to 3 decimal places.

Readers abort on the first malformed row and name its line number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Sequence

from dpcoverage.accountant import PlanError, as_epsilon
from dpcoverage.errorsim import BucketSummary, ErrorReport
from dpcoverage.release import CoverageEstimate, HouseholdRecord, IngestionError, PrivateZipRecord, RawZipRecord

COUNTS_HEADER = ["zip", "low_speed_devices", "high_speed_devices", "services_devices", "non_services_devices"]
HOUSEHOLDS_HEADER = ["zip", "households"]
RELEASE_HEADER = ["zip", "broadband_usage", "broadband_usage_raw", "error_mae", "error_msd", "error_p95", "epsilon"]
PRIVATE_COUNTS_HEADER = ["zip", "low_speed_dp", "high_speed_dp", "services_dp", "non_services_dp", "epsilon"]
BUCKET_HEADER = ["bucket_low", "bucket_high", "zones", "mean_mae", "mean_msd", "mean_p95"]


class CsvFormatError(ValueError):
    """A CSV file has a bad header or a malformed row."""


@dataclass(frozen=True)
class ReleaseRow:
    """One row of the published per-zone table.

    coverage is the clipped estimate shown to 3 decimals in the file;
    error statistics are None until a simulation fills them in. Undefined
    coverage leaves coverage and raw_coverage None.
    """

    zone: str
    coverage: float | None
    raw_coverage: float | None
    mae: float | None
    msd: float | None
    p95: float | None
    epsilon: Decimal


def private_counts_path(release_path: str | Path) -> Path:
    """Sidecar carrying the noisy counts a release was computed from."""
    return Path(f"{release_path}.private-counts.csv")


def _open_reader(path: str | Path, expected_header: list[str]):
    handle = open(path, "r", encoding="utf-8", newline="")
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        handle.close()
        raise CsvFormatError(f"{path}: empty file, expected header {','.join(expected_header)}")
    if header != expected_header:
        handle.close()
        raise CsvFormatError(f"{path}: bad header {','.join(header)!r}, expected {','.join(expected_header)!r}")
    return handle, reader


def _row_error(path: str | Path, line_num: int, problem: str) -> CsvFormatError:
    return CsvFormatError(f"{path}: line {line_num}: {problem}")


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {text!r}")


def _parse_float(text: str, name: str) -> float | None:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{name} must be a real number, got {text!r}")


def read_counts_csv(path: str | Path) -> list[RawZipRecord]:
    """True per-zone device counts. Duplicate zones are rejected."""
    handle, reader = _open_reader(path, COUNTS_HEADER)
    records: list[RawZipRecord] = []
    seen: set[str] = set()
    with handle:
        for row in reader:
            if len(row) != len(COUNTS_HEADER):
                raise _row_error(path, reader.line_num, f"expected {len(COUNTS_HEADER)} fields, got {len(row)}")
            try:
                record = RawZipRecord(
                    zone=row[0],
                    low_speed=_parse_int(row[1], "low_speed_devices"),
                    high_speed=_parse_int(row[2], "high_speed_devices"),
                    services=_parse_int(row[3], "services_devices"),
                    non_services=_parse_int(row[4], "non_services_devices"),
                )
            except (ValueError, IngestionError) as exc:
                raise _row_error(path, reader.line_num, str(exc))
            if record.zone in seen:
                raise _row_error(path, reader.line_num, f"duplicate zone {record.zone}")
            seen.add(record.zone)
            records.append(record)
    return records


def write_counts_csv(path: str | Path, records: Sequence[RawZipRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COUNTS_HEADER)
        for r in records:
            writer.writerow([r.zone, r.low_speed, r.high_speed, r.services, r.non_services])


def read_households_csv(path: str | Path) -> dict[str, HouseholdRecord]:
    """Public household totals, keyed by zone. Duplicate zones are rejected."""
    handle, reader = _open_reader(path, HOUSEHOLDS_HEADER)
    households: dict[str, HouseholdRecord] = {}
    with handle:
        for row in reader:
            if len(row) != len(HOUSEHOLDS_HEADER):
                raise _row_error(path, reader.line_num, f"expected {len(HOUSEHOLDS_HEADER)} fields, got {len(row)}")
            try:
                record = HouseholdRecord(zone=row[0], households=_parse_int(row[1], "households"))
            except (ValueError, IngestionError) as exc:
                raise _row_error(path, reader.line_num, str(exc))
            if record.zone in households:
                raise _row_error(path, reader.line_num, f"duplicate zone {record.zone}")
            households[record.zone] = record
    return households


def write_households_csv(path: str | Path, records: Sequence[HouseholdRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(HOUSEHOLDS_HEADER)
        for r in records:
            writer.writerow([r.zone, r.households])


def _format_float(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_release_csv(path: str | Path, rows: Sequence[ReleaseRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RELEASE_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.zone,
                    "" if r.coverage is None else f"{r.coverage:.3f}",
                    _format_float(r.raw_coverage),
                    _format_float(r.mae),
                    _format_float(r.msd),
                    _format_float(r.p95),
                    str(r.epsilon),
                ]
            )


def read_release_csv(path: str | Path) -> list[ReleaseRow]:
    handle, reader = _open_reader(path, RELEASE_HEADER)
    rows: list[ReleaseRow] = []
    seen: set[str] = set()
    with handle:
        for row in reader:
            if len(row) != len(RELEASE_HEADER):
                raise _row_error(path, reader.line_num, f"expected {len(RELEASE_HEADER)} fields, got {len(row)}")
            try:
                coverage = _parse_float(row[1], "broadband_usage")
                raw_coverage = _parse_float(row[2], "broadband_usage_raw")
                if (coverage is None) != (raw_coverage is None):
                    raise ValueError("broadband_usage and broadband_usage_raw must be both set or both empty")
                parsed = ReleaseRow(
                    zone=row[0],
                    coverage=coverage,
                    raw_coverage=raw_coverage,
                    mae=_parse_float(row[3], "error_mae"),
                    msd=_parse_float(row[4], "error_msd"),
                    p95=_parse_float(row[5], "error_p95"),
                    epsilon=as_epsilon(row[6]),
                )
            except (ValueError, PlanError) as exc:
                raise _row_error(path, reader.line_num, str(exc))
            if parsed.zone in seen:
                raise _row_error(path, reader.line_num, f"duplicate zone {parsed.zone}")
            seen.add(parsed.zone)
            rows.append(parsed)
    return rows


def write_private_counts_csv(path: str | Path, privs: Sequence[PrivateZipRecord]) -> None:
    """Noisy-count sidecar; lets error simulation run as pure post-processing."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PRIVATE_COUNTS_HEADER)
        for p in privs:
            writer.writerow(
                [
                    p.zone,
                    repr(p.low_speed_dp),
                    repr(p.high_speed_dp),
                    repr(p.services_dp),
                    repr(p.non_services_dp),
                    str(p.epsilon_total),
                ]
            )


def read_private_counts_csv(path: str | Path) -> list[PrivateZipRecord]:
    handle, reader = _open_reader(path, PRIVATE_COUNTS_HEADER)
    privs: list[PrivateZipRecord] = []
    seen: set[str] = set()
    with handle:
        for row in reader:
            if len(row) != len(PRIVATE_COUNTS_HEADER):
                raise _row_error(path, reader.line_num, f"expected {len(PRIVATE_COUNTS_HEADER)} fields, got {len(row)}")
            try:
                priv = PrivateZipRecord(
                    zone=row[0],
                    low_speed_dp=float(row[1]),
                    high_speed_dp=float(row[2]),
                    services_dp=float(row[3]),
                    non_services_dp=float(row[4]),
                    epsilon_total=as_epsilon(row[5]),
                )
            except (ValueError, PlanError, IngestionError) as exc:
                raise _row_error(path, reader.line_num, str(exc))
            if priv.zone in seen:
                raise _row_error(path, reader.line_num, f"duplicate zone {priv.zone}")
            seen.add(priv.zone)
            privs.append(priv)
    return privs


def write_bucket_csv(path: str | Path, summaries: Sequence[BucketSummary]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(BUCKET_HEADER)
        for s in summaries:
            writer.writerow(
                [
                    s.low,
                    "" if s.high is None else s.high,
                    s.zone_count,
                    _format_float(s.mean_mae),
                    _format_float(s.mean_msd),
                    _format_float(s.mean_p95),
                ]
            )


def release_rows(
    pairs: Sequence[tuple[PrivateZipRecord, CoverageEstimate]],
    reports: Sequence[ErrorReport] | None = None,
) -> list[ReleaseRow]:
    """Assemble output rows from release pairs and optional error reports."""
    if reports is not None and len(reports) != len(pairs):
        raise ValueError(f"got {len(reports)} error reports for {len(pairs)} release rows")
    rows: list[ReleaseRow] = []
    for index, (priv, estimate) in enumerate(pairs):
        report = reports[index] if reports is not None else None
        if report is not None and report.zone != priv.zone:
            raise ValueError(f"error report zone {report.zone} does not match release zone {priv.zone}")
        rows.append(
            ReleaseRow(
                zone=priv.zone,
                coverage=estimate.coverage,
                raw_coverage=estimate.raw_coverage,
                mae=report.mae if report is not None else None,
                msd=report.msd if report is not None else None,
                p95=report.p95 if report is not None else None,
                epsilon=priv.epsilon_total,
            )
        )
    return rows
