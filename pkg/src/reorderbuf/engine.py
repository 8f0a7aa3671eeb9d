"""Deterministic replay of a time-out reorder buffer.

Time is virtual: the clock is the largest server receive time seen so far.
Each admitted event is held until ``dt + buffer_time`` where the buffer time
is the strategy output captured when the event arrived. Arrivals at time
``t`` are processed before releases due at ``t``; a release that comes due
in the gap between two arrivals is stamped with its own deadline.

Releasing a due event also releases every pending event that precedes it in
``(dt, producer_id, seq_id)`` order, so compensated output is always sorted.
An event whose ``dt`` is below the highest ``dt`` already released is emitted
at once and marked uncompensated.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .model import Event, arrival_key

logger = logging.getLogger(__name__)

DEFAULT_MIN_BUFFER_MS = 0
DEFAULT_MAX_BUFFER_MS = 60_000


class ReplayError(ValueError):
    """Raised when events are admitted out of arrival order or twice."""


class SizingStrategy(Protocol):
    def observe(self, tt: float) -> int: ...


@dataclass(frozen=True, slots=True)
class EmittedEvent:
    event: Event
    compensated: bool
    emit_clock: int
    buffer_time_used: int


class ReplayClock:
    """Monotone virtual clock driven by server receive times."""

    def __init__(self) -> None:
        self.now_ms: int | None = None

    def advance(self, t: int) -> int:
        if self.now_ms is None or t > self.now_ms:
            self.now_ms = t
        return self.now_ms


class ReorderBuffer:
    """Time-out buffer emitting events in detection-time order.

    Args:
        strategy: Object with ``observe(tt) -> buffer_ms``.
        min_buffer_ms: Lower clamp applied to every strategy output.
        max_buffer_ms: Upper clamp applied to every strategy output.
    """

    def __init__(
        self,
        strategy: SizingStrategy,
        min_buffer_ms: int = DEFAULT_MIN_BUFFER_MS,
        max_buffer_ms: int = DEFAULT_MAX_BUFFER_MS,
    ) -> None:
        if min_buffer_ms > max_buffer_ms:
            raise ValueError("min_buffer_ms exceeds max_buffer_ms")
        self.strategy = strategy
        self.min_buffer_ms = min_buffer_ms
        self.max_buffer_ms = max_buffer_ms
        self.clock = ReplayClock()
        self.watermark: int | None = None
        self.last_buffer_ms: int | None = None
        # pending events by detection order, and their release deadlines
        self._queue: list[tuple[tuple[int, str, int], Event, int]] = []
        self._deadlines: list[tuple[int, tuple[int, str, int]]] = []
        self._released: set[tuple[int, str, int]] = set()
        self._seen: set[tuple[str, int]] = set()
        self._last_arrival: tuple[int, str, int] | None = None

    def __len__(self) -> int:
        return len(self._queue)

    @property
    def pending(self) -> list[Event]:
        return [e for _, e, _ in sorted(self._queue)]

    def _clamp(self, b: int) -> int:
        return min(max(b, self.min_buffer_ms), self.max_buffer_ms)

    def _release_until(
        self, limit: int | None, strict: bool, since: int | None
    ) -> list[EmittedEvent]:
        """Release everything whose deadline is below ``limit`` (all if None).

        ``since`` is the clock value before this pass; no emission is stamped
        earlier than it.
        """
        out: list[EmittedEvent] = []
        deadlines = self._deadlines
        while deadlines:
            deadline, key = deadlines[0]
            if limit is not None and (deadline >= limit if strict else deadline > limit):
                break
            heapq.heappop(deadlines)
            if key in self._released:
                self._released.discard(key)
                continue
            while self._queue and self._queue[0][0] <= key:
                qkey, event, buffer_ms = heapq.heappop(self._queue)
                if qkey != key:
                    self._released.add(qkey)
                stamp = deadline if since is None else max(deadline, since)
                out.append(EmittedEvent(event, True, stamp, buffer_ms))
                self.watermark = event.dt
        return out

    def admit(self, e: Event) -> list[EmittedEvent]:
        """Admit the next arrival and return everything emitted as a result.

        Raises:
            ReplayError: on a duplicate ``(producer_id, seq_id)`` or an event
                that precedes the previous admission in arrival order.
        """
        ident = (e.producer_id, e.seq_id)
        if ident in self._seen:
            raise ReplayError(f"duplicate event producer={e.producer_id!r} seq={e.seq_id}")
        akey = arrival_key(e)
        if self._last_arrival is not None and akey < self._last_arrival:
            raise ReplayError(
                f"event producer={e.producer_id!r} seq={e.seq_id} admitted out of "
                f"arrival order (srect={e.srect} after {self._last_arrival[0]})"
            )
        self._seen.add(ident)
        self._last_arrival = akey

        before = self.clock.now_ms
        now = self.clock.advance(e.srect)
        out = self._release_until(now, strict=True, since=before)

        buffer_ms = self._clamp(int(self.strategy.observe(e.transmission_ms)))
        self.last_buffer_ms = buffer_ms

        if self.watermark is not None and e.dt < self.watermark:
            out.append(EmittedEvent(e, False, now, buffer_ms))
            return out

        key = e.key
        heapq.heappush(self._queue, (key, e, buffer_ms))
        heapq.heappush(self._deadlines, (e.dt + buffer_ms, key))
        return out

    def flush(self) -> list[EmittedEvent]:
        """Release every pending event; call once the stream has ended."""
        out = self._release_until(None, strict=False, since=self.clock.now_ms)
        self._released.clear()
        return out

    flush_end_of_stream = flush


@dataclass
class ReplayResult:
    emissions: list[EmittedEvent]
    buffer_series: list[tuple[int, int, int]]  # (event_index, srect, buffer_ms)

    @property
    def not_compensated(self) -> int:
        return sum(1 for em in self.emissions if not em.compensated)

    @property
    def buffer_values(self) -> list[int]:
        return [b for _, _, b in self.buffer_series]


def run_replay(
    dataset: Sequence[Event] | Iterable[Event],
    strategy: SizingStrategy,
    min_buffer_ms: int = DEFAULT_MIN_BUFFER_MS,
    max_buffer_ms: int = DEFAULT_MAX_BUFFER_MS,
) -> ReplayResult:
    """Admit every event of an arrival-ordered dataset, then flush.

    Raises:
        ReplayError: with the offending event index prepended to the message.
    """
    buf = ReorderBuffer(strategy, min_buffer_ms, max_buffer_ms)
    emissions: list[EmittedEvent] = []
    series: list[tuple[int, int, int]] = []
    for i, e in enumerate(dataset):
        try:
            emissions.extend(buf.admit(e))
        except ReplayError as exc:
            raise ReplayError(f"event #{i}: {exc}") from exc
        series.append((i, e.srect, buf.last_buffer_ms))
    emissions.extend(buf.flush())
    logger.debug("replayed %d events, %d emitted", len(series), len(emissions))
    return ReplayResult(emissions, series)
