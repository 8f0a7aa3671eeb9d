"""Out-of-order event compensation with dynamically sized time-out buffers."""

from .dataset_io import (
    DatasetFormatError,
    DatasetSummary,
    read_dataset,
    summarize,
    write_buffer_series,
    write_dataset,
    write_emission_log,
    write_metrics,
)
from .engine import EmittedEvent, ReorderBuffer, ReplayError, ReplayResult, run_replay
from .evaluation import (
    RunResult,
    min_required_buffer,
    not_compensated_pct,
    overfit_pct,
    run_grid,
    run_one,
    sweep,
)
from .model import (
    Durations,
    Event,
    InvalidEventError,
    OooFlags,
    arrival_order,
    derive_durations,
    detect_ooo,
    detect_ooo_by_dt,
    detect_ooo_by_seq,
)
from .strategies import (
    ALGORITHMS,
    DEFAULT_CONFIGS,
    StrategyConfig,
    make_strategy,
    parse_strategy_spec,
    suggest_params,
)
from .synth import DelayModel, WorkloadSpec, generate, preset

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "DEFAULT_CONFIGS",
    "DatasetFormatError",
    "DatasetSummary",
    "DelayModel",
    "Durations",
    "EmittedEvent",
    "Event",
    "InvalidEventError",
    "OooFlags",
    "ReorderBuffer",
    "ReplayError",
    "ReplayResult",
    "RunResult",
    "StrategyConfig",
    "WorkloadSpec",
    "arrival_order",
    "derive_durations",
    "detect_ooo",
    "detect_ooo_by_dt",
    "detect_ooo_by_seq",
    "generate",
    "make_strategy",
    "min_required_buffer",
    "not_compensated_pct",
    "overfit_pct",
    "parse_strategy_spec",
    "preset",
    "read_dataset",
    "run_grid",
    "run_one",
    "run_replay",
    "summarize",
    "suggest_params",
    "sweep",
    "write_buffer_series",
    "write_dataset",
    "write_emission_log",
    "write_metrics",
]
