"""Buffer-sizing strategies.

Every strategy follows one contract: :meth:`Strategy.observe` takes the
transmission time (``srect - dt``) of the event just received and returns
the buffer time in integer milliseconds that the reorder buffer should hold
that event for.

Seven algorithms are provided:

========  ============================================================
sba       static buffer
bstt      grow/shrink on the latest transmission time
bsttwa    exponentially weighted mean over a sliding window + offset
bsttd     window spread (max - min) + offset
bsttda    window mean + window spread + offset
bskf      scalar Kalman prediction of the next transmission time + offset
kslack    max of all transmission times + lambda * std deviation
========  ============================================================

The ``*_update`` functions are the bare formulas; the classes add state,
cold-start handling and integer rounding.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Any, Iterable, Sequence

ALGORITHMS = ("sba", "bstt", "bsttwa", "bsttd", "bsttda", "bskf", "kslack")

# Fields each algorithm actually reads; used for validation and reporting.
ALGORITHM_PARAMS: dict[str, tuple[str, ...]] = {
    "sba": ("static_buffer_ms",),
    "bstt": (
        "initial_buffer_ms",
        "offset_ms",
        "threshold_ms",
        "increase_factor",
        "decrease_factor",
    ),
    "bsttwa": ("window_n", "initial_buffer_ms", "offset_ms"),
    "bsttd": ("window_n", "initial_buffer_ms", "offset_ms"),
    "bsttda": ("window_n", "initial_buffer_ms", "offset_ms"),
    "bskf": (
        "initial_buffer_ms",
        "offset_ms",
        "process_noise_q",
        "measurement_noise_r",
        "initial_covariance_p",
    ),
    "kslack": ("scaling_factor_lambda", "initial_buffer_ms"),
}


@dataclass(frozen=True)
class StrategyConfig:
    """Parameters for all strategies; each algorithm reads only its own subset."""

    initial_buffer_ms: float = 750.0
    offset_ms: float = 0.0
    window_n: int = 600
    increase_factor: float = 2.0
    decrease_factor: float = 0.99
    threshold_ms: float = 100.0
    scaling_factor_lambda: float = 0.8
    static_buffer_ms: float = 1000.0
    process_noise_q: float = 1.0
    measurement_noise_r: float = 100.0
    initial_covariance_p: float = 1.0

    def __post_init__(self) -> None:
        if int(self.window_n) != self.window_n or self.window_n < 1:
            raise ValueError(f"window_n must be an integer >= 1, got {self.window_n}")
        for name in ("increase_factor", "decrease_factor", "initial_covariance_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in (
            "initial_buffer_ms",
            "offset_ms",
            "threshold_ms",
            "scaling_factor_lambda",
            "static_buffer_ms",
            "process_noise_q",
            "measurement_noise_r",
        ):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def params_for(self, algorithm: str) -> dict[str, Any]:
        return {name: getattr(self, name) for name in ALGORITHM_PARAMS[algorithm]}


CONFIG_FIELDS = {f.name: f.type for f in fields(StrategyConfig)}


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def nearest_rank(sorted_values: Sequence[float], percent: float) -> float:
    """Nearest-rank percentile: the ``ceil(percent/100 * n)``-th order statistic.

    ``sorted_values`` must be ascending and non-empty. Computed with exact
    rational arithmetic so that e.g. the 98th percentile of 1..1000 is 980.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("percentile of empty sample")
    rank = math.ceil(Fraction(str(percent)) * n / 100)
    return sorted_values[max(rank, 1) - 1]


# ---------------------------------------------------------------------------
# Bare formulas
# ---------------------------------------------------------------------------


def sba_update(tt: float, cfg: StrategyConfig) -> float:
    return cfg.static_buffer_ms


def bstt_update(tt: float, cfg: StrategyConfig, current_buffer: float) -> float:
    excess = tt - cfg.offset_ms
    if excess > current_buffer:
        return current_buffer * cfg.increase_factor + cfg.offset_ms
    if excess < current_buffer - cfg.threshold_ms:
        return current_buffer * cfg.decrease_factor
    return current_buffer


def bsttwa_update(window: Sequence[float], cfg: StrategyConfig) -> float:
    """Weighted mean of a newest-first window plus offset.

    ``window[0]`` is the most recent sample and gets the largest weight; each
    older sample's weight is half of its successor's.
    """
    num = 0.0
    den = 0.0
    w = 1.0
    for tt in window:
        num += tt * w
        den += w
        w *= 0.5
    return num / den + cfg.offset_ms


def bsttd_update(window: Sequence[float], cfg: StrategyConfig) -> float:
    return (max(window) - min(window)) + cfg.offset_ms


def bsttda_update(window: Sequence[float], cfg: StrategyConfig) -> float:
    return sum(window) / len(window) + (max(window) - min(window)) + cfg.offset_ms


@dataclass
class KalmanState:
    """Scalar Kalman filter with identity transition and observation."""

    x: float | None = None
    p: float = 1.0
    q: float = 1.0
    r: float = 100.0

    def update(self, z: float) -> float:
        if self.x is None:
            self.x = float(z)
            return self.x
        p_prior = self.p + self.q
        k = p_prior / (p_prior + self.r)
        self.x = self.x + k * (z - self.x)
        self.p = (1.0 - k) * p_prior
        return self.x


def bskf_update(tt: float, state: KalmanState, cfg: StrategyConfig) -> float:
    return state.update(tt) + cfg.offset_ms


@dataclass
class RunningStats:
    """Unwindowed max / mean / sum of squared deviations (Welford)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    max: float = -math.inf

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        if x > self.max:
            self.max = x

    @property
    def stddev(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self.m2, 0.0) / (self.count - 1))


def kslack_update(tt: float, stats: RunningStats, cfg: StrategyConfig) -> float:
    stats.push(tt)
    return stats.max + stats.stddev * cfg.scaling_factor_lambda


# ---------------------------------------------------------------------------
# Window with O(1) aggregates
# ---------------------------------------------------------------------------


class TtWindow:
    """Sliding window of the last ``n`` transmission times.

    Maintains the sum, the exponentially weighted sum (newest weight 1,
    halving with age) and monotonic deques for max and min, so every
    aggregate is O(1) amortized per push.
    """

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError("window length must be >= 1")
        self.n = n
        self._values: deque[float] = deque()
        self._index = 0
        self._maxq: deque[tuple[int, float]] = deque()
        self._minq: deque[tuple[int, float]] = deque()
        self._sum = 0.0
        self._wsum = 0.0

    def __len__(self) -> int:
        return len(self._values)

    def newest_first(self) -> list[float]:
        return list(reversed(self._values))

    def push(self, tt: float) -> None:
        self._values.append(tt)
        self._sum += tt
        self._wsum = tt + 0.5 * self._wsum
        idx = self._index
        self._index += 1
        while self._maxq and self._maxq[-1][1] <= tt:
            self._maxq.pop()
        self._maxq.append((idx, tt))
        while self._minq and self._minq[-1][1] >= tt:
            self._minq.pop()
        self._minq.append((idx, tt))

        if len(self._values) > self.n:
            old = self._values.popleft()
            self._sum -= old
            # after halving, the evicted sample carried weight 2**-n
            self._wsum -= math.ldexp(old, -self.n)
            oldest_idx = idx - self.n
            if self._maxq[0][0] <= oldest_idx:
                self._maxq.popleft()
            if self._minq[0][0] <= oldest_idx:
                self._minq.popleft()

    @property
    def max(self) -> float:
        return self._maxq[0][1]

    @property
    def min(self) -> float:
        return self._minq[0][1]

    @property
    def mean(self) -> float:
        return self._sum / len(self._values)

    @property
    def weighted_mean(self) -> float:
        # sum of weights 1 + 1/2 + ... + 2**-(m-1)
        m = len(self._values)
        return self._wsum / (2.0 - math.ldexp(1.0, 1 - m))


# ---------------------------------------------------------------------------
# Stateful strategies
# ---------------------------------------------------------------------------


class Strategy:
    """Base class: subclasses implement :meth:`_raw` returning a real buffer."""

    name = ""

    def __init__(self, cfg: StrategyConfig | None = None) -> None:
        self.cfg = cfg if cfg is not None else default_config(self.name)
        self.last_raw: float | None = None

    def observe(self, tt: float) -> int:
        """Feed one transmission time; return the buffer time in ms."""
        self.last_raw = self._raw(tt)
        return max(round_half_up(self.last_raw), 0)

    def _raw(self, tt: float) -> float:
        raise NotImplementedError


class StaticBuffer(Strategy):
    name = "sba"

    def _raw(self, tt: float) -> float:
        return sba_update(tt, self.cfg)


class SingleTransmissionTime(Strategy):
    name = "bstt"

    def __init__(self, cfg: StrategyConfig | None = None) -> None:
        super().__init__(cfg)
        self.current = float(self.cfg.initial_buffer_ms)

    def _raw(self, tt: float) -> float:
        self.current = bstt_update(tt, self.cfg, self.current)
        return self.current


class _Windowed(Strategy):
    def __init__(self, cfg: StrategyConfig | None = None) -> None:
        super().__init__(cfg)
        self.window = TtWindow(int(self.cfg.window_n))
        self.seen = 0

    def _raw(self, tt: float) -> float:
        self.window.push(tt)
        self.seen += 1
        # cold start: a single sample carries no spread information
        if self.seen < 2:
            return self.cfg.initial_buffer_ms
        return self._from_window()

    def _from_window(self) -> float:
        raise NotImplementedError


class WeightedAverage(_Windowed):
    name = "bsttwa"

    def _from_window(self) -> float:
        return self.window.weighted_mean + self.cfg.offset_ms


class TransmissionDifference(_Windowed):
    name = "bsttd"

    def _from_window(self) -> float:
        w = self.window
        return (w.max - w.min) + self.cfg.offset_ms


class DifferenceAndAverage(_Windowed):
    name = "bsttda"

    def _from_window(self) -> float:
        w = self.window
        return w.mean + (w.max - w.min) + self.cfg.offset_ms


class KalmanBuffer(Strategy):
    name = "bskf"

    def __init__(self, cfg: StrategyConfig | None = None) -> None:
        super().__init__(cfg)
        self.state = KalmanState(
            p=self.cfg.initial_covariance_p,
            q=self.cfg.process_noise_q,
            r=self.cfg.measurement_noise_r,
        )
        self.seen = 0

    def _raw(self, tt: float) -> float:
        self.seen += 1
        buffer = bskf_update(tt, self.state, self.cfg)
        if self.seen < 2:
            return self.cfg.initial_buffer_ms
        return buffer


class DynamicKSlack(Strategy):
    name = "kslack"

    def __init__(self, cfg: StrategyConfig | None = None) -> None:
        super().__init__(cfg)
        self.stats = RunningStats()

    def _raw(self, tt: float) -> float:
        buffer = kslack_update(tt, self.stats, self.cfg)
        if self.stats.count < 2:
            return self.cfg.initial_buffer_ms
        return buffer


STRATEGY_CLASSES: dict[str, type[Strategy]] = {
    cls.name: cls
    for cls in (
        StaticBuffer,
        SingleTransmissionTime,
        WeightedAverage,
        TransmissionDifference,
        DifferenceAndAverage,
        KalmanBuffer,
        DynamicKSlack,
    )
}

# Configuration used for every run of the published evaluation grid.
DEFAULT_CONFIGS: dict[str, StrategyConfig] = {
    "sba": StrategyConfig(static_buffer_ms=1000),
    "bstt": StrategyConfig(
        initial_buffer_ms=500,
        threshold_ms=100,
        increase_factor=2,
        decrease_factor=0.99,
        offset_ms=500,
    ),
    "bsttwa": StrategyConfig(window_n=100, initial_buffer_ms=750, offset_ms=750),
    "bsttd": StrategyConfig(window_n=600, initial_buffer_ms=750, offset_ms=350),
    "bsttda": StrategyConfig(window_n=600, initial_buffer_ms=750, offset_ms=350),
    "bskf": StrategyConfig(initial_buffer_ms=750, offset_ms=600),
    "kslack": StrategyConfig(scaling_factor_lambda=0.8, initial_buffer_ms=750),
}


def default_config(algorithm: str) -> StrategyConfig:
    try:
        return DEFAULT_CONFIGS[algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}"
        ) from None


def make_strategy(algorithm: str, cfg: StrategyConfig | None = None) -> Strategy:
    try:
        cls = STRATEGY_CLASSES[algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}"
        ) from None
    return cls(cfg)


def _coerce(name: str, text: str) -> int | float:
    if name == "window_n":
        return int(text)
    return float(text)


def with_params(cfg: StrategyConfig, algorithm: str, **params: Any) -> StrategyConfig:
    """Return ``cfg`` with ``params`` replaced, rejecting names the algorithm ignores."""
    allowed = ALGORITHM_PARAMS[algorithm]
    for name in params:
        if name not in allowed:
            raise ValueError(
                f"parameter {name!r} is not used by {algorithm}; "
                f"valid: {', '.join(allowed)}"
            )
    return replace(cfg, **params)


def parse_strategy_spec(text: str) -> tuple[str, StrategyConfig]:
    """Parse ``name=bsttda,window_n=600,offset_ms=350`` into a config.

    Unspecified parameters fall back to the algorithm's evaluation default.
    A bare algorithm name (``"bsttda"``) is accepted as well.
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty strategy spec")
    pairs: dict[str, str] = {}
    for i, part in enumerate(parts):
        if "=" not in part:
            if i == 0:
                pairs["name"] = part
                continue
            raise ValueError(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        pairs[key.strip()] = value.strip()
    if "name" not in pairs:
        raise ValueError(f"strategy spec {text!r} lacks name=")
    algorithm = pairs.pop("name").lower()
    cfg = default_config(algorithm)
    params = {k: _coerce(k, v) for k, v in pairs.items() if k in CONFIG_FIELDS}
    unknown = set(pairs) - set(CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    return algorithm, with_params(cfg, algorithm, **params)


def format_params(algorithm: str, cfg: StrategyConfig) -> str:
    def fmt(v: Any) -> str:
        if isinstance(v, float) and v.is_integer():
            return str(int(v))
        return repr(v) if isinstance(v, float) else str(v)

    return ";".join(f"{k}={fmt(v)}" for k, v in cfg.params_for(algorithm).items())


def suggest_params(full_proc_ms: Iterable[float]) -> dict[str, StrategyConfig]:
    """Starting configurations derived from a recorded sample.

    Everything scales with the 98th percentile (nearest rank) of the full
    processing time; a sample of roughly 5,000 events is a sensible size.

    Raises:
        ValueError: if the sample is empty.
    """
    values = sorted(full_proc_ms)
    if not values:
        raise ValueError("cannot suggest parameters from an empty sample")
    p98 = float(nearest_rank(values, 98))
    initial = p98 * 5
    return {
        "sba": StrategyConfig(initial_buffer_ms=initial, static_buffer_ms=p98 * 6),
        "bstt": StrategyConfig(
            initial_buffer_ms=initial,
            offset_ms=p98 * 3,
            threshold_ms=100,
            increase_factor=2,
            decrease_factor=0.99,
        ),
        "bsttwa": StrategyConfig(initial_buffer_ms=initial, window_n=100, offset_ms=p98 * 4),
        "bsttd": StrategyConfig(initial_buffer_ms=initial, window_n=600, offset_ms=p98 * 2),
        "bsttda": StrategyConfig(initial_buffer_ms=initial, window_n=600, offset_ms=p98),
        "bskf": StrategyConfig(initial_buffer_ms=initial, offset_ms=p98 * 4),
        "kslack": StrategyConfig(initial_buffer_ms=p98 * 4, scaling_factor_lambda=0.8),
    }
