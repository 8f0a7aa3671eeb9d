"""CSV reading, writing and summary statistics for event datasets.

Canonical dataset schema (UTF-8, header mandatory)::

    producer_id,seq_id,dt,cst,srect,srest,crt,payload_bytes

Files with other column names are read through a ``columns`` mapping from
canonical name to the file's header name.
"""

from __future__ import annotations

import csv
import math
import os
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .engine import EmittedEvent
from .model import Event, InvalidEventError, arrival_order, count_ooo_by_dt, validate_event
from .strategies import nearest_rank

if TYPE_CHECKING:
    from .evaluation import RunResult

DATASET_COLUMNS = ("producer_id", "seq_id", "dt", "cst", "srect", "srest", "crt", "payload_bytes")
EMISSION_COLUMNS = (
    "producer_id",
    "seq_id",
    "dt",
    "srect",
    "emit_clock",
    "compensated",
    "buffer_time_used",
)
METRICS_COLUMNS = (
    "dataset",
    "algorithm",
    "params",
    "events",
    "ooo_events",
    "not_compensated",
    "not_compensated_pct",
    "mean_buffer_ms",
    "min_required_buffer_ms",
    "overfit_pct",
)
BUFFER_SERIES_COLUMNS = ("event_index", "srect", "buffer_ms")

_INT_COLUMNS = DATASET_COLUMNS[1:]

PathLike = str | os.PathLike


class DatasetFormatError(ValueError):
    """Malformed or invalid dataset file; the message names file and line."""


def read_dataset(path: PathLike, columns: Mapping[str, str] | None = None) -> list[Event]:
    """Read a dataset CSV and return its events in arrival order.

    Args:
        path: CSV file to read.
        columns: Optional mapping canonical-name -> header-name in the file.
            ``payload_bytes`` may be absent from the file and defaults to 0.

    Raises:
        DatasetFormatError: on a missing column, a malformed row, a record
            violating the timestamp chain, or a duplicate (producer, seq).
    """
    mapping = {c: c for c in DATASET_COLUMNS}
    if columns:
        mapping.update(columns)
    path = Path(path)
    events: list[Event] = []
    seen: dict[tuple[str, int], int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [
            c for c in DATASET_COLUMNS if mapping[c] not in header and c != "payload_bytes"
        ]
        if missing:
            raise DatasetFormatError(
                f"{path}: header lacks column(s) {', '.join(mapping[c] for c in missing)}"
            )
        has_payload = mapping["payload_bytes"] in header
        for row in reader:
            line = reader.line_num
            try:
                vals = {
                    c: int(row[mapping[c]])
                    for c in _INT_COLUMNS
                    if c != "payload_bytes" or has_payload
                }
                pid = row[mapping["producer_id"]]
                # short rows yield None values, long rows a None key
                if pid is None or None in row or any(v is None for v in row.values()):
                    raise TypeError
            except (TypeError, ValueError) as exc:
                raise DatasetFormatError(f"{path}:{line}: malformed row {row!r}") from exc
            e = Event(producer_id=pid, **vals)
            try:
                validate_event(e)
            except InvalidEventError as exc:
                raise DatasetFormatError(f"{path}:{line}: {exc}") from exc
            ident = (e.producer_id, e.seq_id)
            if ident in seen:
                raise DatasetFormatError(
                    f"{path}:{line}: duplicate producer={e.producer_id!r} seq={e.seq_id} "
                    f"(first on line {seen[ident]})"
                )
            seen[ident] = line
            events.append(e)
    return arrival_order(events)


def _open_for_write(path: PathLike):
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_dataset(events: Iterable[Event], path: PathLike) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_COLUMNS)
        for e in events:
            w.writerow(
                (e.producer_id, e.seq_id, e.dt, e.cst, e.srect, e.srest, e.crt, e.payload_bytes)
            )


def write_emission_log(emissions: Iterable[EmittedEvent], path: PathLike) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EMISSION_COLUMNS)
        for em in emissions:
            e = em.event
            w.writerow(
                (
                    e.producer_id,
                    e.seq_id,
                    e.dt,
                    e.srect,
                    em.emit_clock,
                    int(em.compensated),
                    em.buffer_time_used,
                )
            )


def write_buffer_series(series: Iterable[tuple[int, int, int]], path: PathLike) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUFFER_SERIES_COLUMNS)
        w.writerows(series)


def _fmt(x: float | None, digits: int = 4) -> str:
    if x is None:
        return ""
    return f"{x:.{digits}f}"


def write_metrics(results: Iterable[RunResult], path: PathLike) -> None:
    """Write one row per (dataset, algorithm) run.

    ``mean_buffer_ms`` is the arithmetic mean of the per-event buffer series
    and ``overfit_pct`` is ``100 * mean_buffer_ms / min_required_buffer_ms``;
    it is left empty when the minimum required buffer is zero.
    """
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in results:
            w.writerow(
                (
                    r.dataset,
                    r.algorithm,
                    r.params,
                    r.events,
                    r.ooo_events,
                    r.not_compensated,
                    _fmt(r.not_compensated_pct),
                    _fmt(r.mean_buffer_ms),
                    r.min_required_buffer_ms,
                    _fmt(r.overfit_pct),
                )
            )


@dataclass(frozen=True)
class DatasetSummary:
    event_count: int
    client_count: int
    ooo_count_by_dt: int
    ooo_pct: float
    fpt_min: float
    fpt_q1: float
    fpt_median: float
    fpt_mean: float
    fpt_q3: float
    fpt_max: float
    fpt_stddev: float
    session_s: float
    server_kib_s: float
    client_kib_s: float

    def as_rows(self) -> list[tuple[str, str]]:
        out = []
        for name, value in self.__dict__.items():
            out.append((name, f"{value:.4f}" if isinstance(value, float) else str(value)))
        return out


def summarize(events: Sequence[Event]) -> DatasetSummary:
    """Table-style summary of one dataset.

    Quartiles use the nearest-rank rule; the standard deviation uses the
    ``n - 1`` divisor. Data rates are net payload bytes per second over the
    span of detection times.

    Raises:
        ValueError: for an empty dataset.
    """
    if not events:
        raise ValueError("cannot summarize an empty dataset")
    ordered = arrival_order(events)
    fpt = sorted(e.full_proc_ms for e in ordered)
    n = len(fpt)
    ooo = count_ooo_by_dt(ordered)
    clients = len({e.producer_id for e in ordered})
    span_ms = max(e.dt for e in ordered) - min(e.dt for e in ordered)
    session_s = span_ms / 1000.0
    total_kib = sum(e.payload_bytes for e in ordered) / 1024.0
    server_rate = total_kib / session_s if session_s > 0 else math.nan
    return DatasetSummary(
        event_count=n,
        client_count=clients,
        ooo_count_by_dt=ooo,
        ooo_pct=100.0 * ooo / n,
        fpt_min=float(fpt[0]),
        fpt_q1=float(nearest_rank(fpt, 25)),
        fpt_median=float(nearest_rank(fpt, 50)),
        fpt_mean=statistics.fmean(fpt),
        fpt_q3=float(nearest_rank(fpt, 75)),
        fpt_max=float(fpt[-1]),
        fpt_stddev=statistics.stdev(fpt) if n > 1 else 0.0,
        session_s=session_s,
        server_kib_s=server_rate,
        client_kib_s=server_rate / clients,
    )


def write_summary(summary: DatasetSummary, path: PathLike) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("field", "value"))
        w.writerows(summary.as_rows())
