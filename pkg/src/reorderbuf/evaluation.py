"""Metrics, algorithm x dataset grids and parameter sweeps.

Two metrics judge a run:

* not-compensated percentage: uncompensated emissions as a share of the
  dataset's out-of-order events (by detection time);
* overfitting percentage: mean buffer time over the smallest static buffer
  that would have compensated every event.
"""

from __future__ import annotations

import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .engine import EmittedEvent, ReplayResult, run_replay
from .model import Event, count_ooo_by_dt
from .strategies import (
    ALGORITHMS,
    DEFAULT_CONFIGS,
    StaticBuffer,
    StrategyConfig,
    format_params,
    make_strategy,
    with_params,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    dataset: str
    algorithm: str
    params: str
    events: int
    ooo_events: int
    not_compensated: int
    not_compensated_pct: float
    mean_buffer_ms: float
    min_required_buffer_ms: int
    overfit_pct: float | None
    buffer_series: list[tuple[int, int, int]] = field(default_factory=list, repr=False)
    emissions: list[EmittedEvent] = field(default_factory=list, repr=False)
    error: str | None = None


def not_compensated_pct(emissions: Iterable[EmittedEvent], ooo_total: int) -> float:
    late = sum(1 for em in emissions if not em.compensated)
    if ooo_total == 0:
        return 0.0
    return 100.0 * late / ooo_total


def overfit_pct(buffer_series: Sequence[float], b_star: int) -> float | None:
    """``100 * mean(buffer_series) / b_star``; ``None`` when ``b_star`` is 0."""
    if not buffer_series:
        raise ValueError("empty buffer series")
    if b_star == 0:
        return None
    return 100.0 * statistics.fmean(buffer_series) / b_star


def uncompensated_with_static(dataset: Sequence[Event], buffer_ms: int) -> int:
    strategy = StaticBuffer(StrategyConfig(static_buffer_ms=buffer_ms))
    return run_replay(dataset, strategy, max_buffer_ms=max(buffer_ms, 0)).not_compensated


def min_required_buffer(dataset: Sequence[Event]) -> int:
    """Smallest static buffer (ms) under which no event is uncompensated.

    Binary search over ``[0, max transmission time]`` with the replay engine
    as the oracle; the uncompensated count is non-increasing in the buffer.
    """
    if not dataset:
        return 0
    lo, hi = 0, max(e.transmission_ms for e in dataset)
    if uncompensated_with_static(dataset, lo) == 0:
        return 0
    # invariant: lo fails, hi succeeds
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if uncompensated_with_static(dataset, mid) == 0:
            hi = mid
        else:
            lo = mid
    return hi


def _result(
    dataset_id: str,
    algorithm: str,
    cfg: StrategyConfig,
    dataset: Sequence[Event],
    replay: ReplayResult,
    ooo: int,
    b_star: int,
) -> RunResult:
    values = replay.buffer_values
    late = replay.not_compensated
    return RunResult(
        dataset=dataset_id,
        algorithm=algorithm,
        params=format_params(algorithm, cfg),
        events=len(dataset),
        ooo_events=ooo,
        not_compensated=late,
        not_compensated_pct=100.0 * late / ooo if ooo else 0.0,
        mean_buffer_ms=statistics.fmean(values) if values else 0.0,
        min_required_buffer_ms=b_star,
        overfit_pct=overfit_pct(values, b_star) if values else None,
        buffer_series=replay.buffer_series,
    )


def run_one(
    dataset_id: str,
    dataset: Sequence[Event],
    algorithm: str,
    cfg: StrategyConfig | None = None,
    *,
    ooo_events: int | None = None,
    b_star: int | None = None,
    keep_emissions: bool = False,
) -> RunResult:
    """Replay one dataset with one configured algorithm and score it.

    ``ooo_events`` and ``b_star`` may be passed in when already known for
    the dataset; ``keep_emissions`` retains the full emission log.
    """
    cfg = cfg if cfg is not None else DEFAULT_CONFIGS[algorithm]
    if ooo_events is None:
        ooo_events = count_ooo_by_dt(dataset)
    if b_star is None:
        b_star = min_required_buffer(dataset)
    replay = run_replay(dataset, make_strategy(algorithm, cfg))
    result = _result(dataset_id, algorithm, cfg, dataset, replay, ooo_events, b_star)
    if keep_emissions:
        result.emissions = replay.emissions
    return result


def _failed(dataset_id: str, algorithm: str, cfg: StrategyConfig, n: int, exc: Exception) -> RunResult:
    return RunResult(
        dataset=dataset_id,
        algorithm=algorithm,
        params=format_params(algorithm, cfg),
        events=n,
        ooo_events=0,
        not_compensated=0,
        not_compensated_pct=float("nan"),
        mean_buffer_ms=float("nan"),
        min_required_buffer_ms=0,
        overfit_pct=None,
        error=f"{type(exc).__name__}: {exc}",
    )


def _grid_task(args):
    dataset_id, dataset, algorithm, cfg, ooo, b_star = args
    try:
        return run_one(dataset_id, dataset, algorithm, cfg, ooo_events=ooo, b_star=b_star)
    except Exception as exc:  # recorded per run; the grid continues
        logger.warning("run %s/%s failed: %s", dataset_id, algorithm, exc)
        return _failed(dataset_id, algorithm, cfg, len(dataset), exc)


def run_grid(
    datasets: Mapping[str, Sequence[Event]],
    algorithms: Mapping[str, StrategyConfig] | Sequence[str] | None = None,
    workers: int = 1,
) -> list[RunResult]:
    """One result per (dataset, algorithm), ordered by input order.

    Args:
        datasets: Dataset id -> arrival-ordered events.
        algorithms: Algorithm name -> config, or names to run with their
            evaluation defaults. ``None`` runs all seven with defaults.
        workers: Process count; results do not depend on it.
    """
    if algorithms is None:
        algorithms = DEFAULT_CONFIGS
    elif not isinstance(algorithms, Mapping):
        algorithms = {name: DEFAULT_CONFIGS[name] for name in algorithms}

    tasks = []
    results: list[RunResult] = []
    for dataset_id, events in datasets.items():
        try:
            ooo = count_ooo_by_dt(events)
            b_star = min_required_buffer(events)
        except Exception as exc:  # a bad dataset fails its own runs only
            logger.warning("dataset %s failed: %s", dataset_id, exc)
            results.extend(_failed(dataset_id, a, c, len(events), exc) for a, c in algorithms.items())
            continue
        for algorithm, cfg in algorithms.items():
            tasks.append((dataset_id, events, algorithm, cfg, ooo, b_star))

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results.extend(pool.map(_grid_task, tasks))
    else:
        results.extend(_grid_task(t) for t in tasks)

    order_ds = {d: i for i, d in enumerate(datasets)}
    order_alg = {a: i for i, a in enumerate(algorithms)}
    results.sort(key=lambda r: (order_ds[r.dataset], order_alg[r.algorithm]))
    return results


def sweep(
    dataset_id: str,
    dataset: Sequence[Event],
    algorithm: str,
    param: str,
    values: Sequence[float],
    base: StrategyConfig | None = None,
) -> list[RunResult]:
    """One run per value of ``param``, all other parameters held fixed.

    Raises:
        ValueError: if ``param`` is not a parameter of ``algorithm``.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    base = base if base is not None else DEFAULT_CONFIGS[algorithm]
    ooo = count_ooo_by_dt(dataset)
    b_star = min_required_buffer(dataset)
    out = []
    for v in values:
        cfg = with_params(base, algorithm, **{param: int(v) if param == "window_n" else v})
        out.append(run_one(dataset_id, dataset, algorithm, cfg, ooo_events=ooo, b_star=b_star))
    return out
