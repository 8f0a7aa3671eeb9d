"""Event records, derived durations and out-of-order detection.

All timestamps are integer milliseconds since the Unix epoch. The fusion
center sees events in *arrival order*: ascending server receive time, ties
broken by ``(producer_id, seq_id)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class InvalidEventError(ValueError):
    """Raised for an event whose timestamps or identifiers are corrupt."""


@dataclass(frozen=True, slots=True)
class Event:
    """One observation sent by a producer to the fusion center.

    Attributes:
        producer_id: Opaque identifier of the producing client.
        seq_id: Per-producer sequence number, strictly increasing at the source.
        dt: Detection time.
        cst: Client send time.
        srect: Server receive time.
        srest: Server response time.
        crt: Client receive time.
        payload_bytes: Net payload size.
    """

    producer_id: str
    seq_id: int
    dt: int
    cst: int
    srect: int
    srest: int
    crt: int
    payload_bytes: int = 0

    @property
    def transmission_ms(self) -> int:
        return self.srect - self.dt

    @property
    def full_proc_ms(self) -> int:
        return self.crt - self.dt

    @property
    def key(self) -> tuple[int, str, int]:
        """Detection-order key used by the reorder buffer."""
        return (self.dt, self.producer_id, self.seq_id)


@dataclass(frozen=True, slots=True)
class Durations:
    message_prep_ms: int
    server_proc_ms: int
    transmission_ms: int
    rtt_ms: int
    full_proc_ms: int


@dataclass(frozen=True, slots=True)
class OooFlags:
    ooo_by_seq: bool
    ooo_by_dt: bool


def validate_event(e: Event) -> None:
    """Check the timestamp chain ``dt <= cst <= srect <= srest <= crt``.

    Raises:
        InvalidEventError: naming the producer and sequence id of the record.
    """
    where = f"event (producer={e.producer_id!r}, seq={e.seq_id})"
    if e.seq_id < 0:
        raise InvalidEventError(f"{where}: negative seq_id")
    if e.payload_bytes < 0:
        raise InvalidEventError(f"{where}: negative payload_bytes")
    if not (e.dt <= e.cst <= e.srect <= e.srest):
        raise InvalidEventError(
            f"{where}: timestamps out of order "
            f"(dt={e.dt}, cst={e.cst}, srect={e.srect}, srest={e.srest})"
        )
    if e.crt < e.srest:
        raise InvalidEventError(f"{where}: crt={e.crt} precedes srest={e.srest}")


def derive_durations(e: Event) -> Durations:
    validate_event(e)
    return Durations(
        message_prep_ms=e.cst - e.dt,
        server_proc_ms=e.srest - e.srect,
        transmission_ms=e.srect - e.dt,
        rtt_ms=(e.srect - e.cst) + (e.crt - e.srest),
        full_proc_ms=e.crt - e.dt,
    )


def arrival_key(e: Event) -> tuple[int, str, int]:
    return (e.srect, e.producer_id, e.seq_id)


def arrival_order(events: Iterable[Event]) -> list[Event]:
    """Return ``events`` sorted into fusion-center arrival order."""
    return sorted(events, key=arrival_key)


class SeqDetector:
    """Streaming per-producer sequence-id disorder detector.

    Keeps only the highest sequence id seen per producer.
    """

    def __init__(self) -> None:
        self._max_seq: dict[str, int] = {}

    def observe(self, e: Event) -> bool:
        prev = self._max_seq.get(e.producer_id)
        if prev is not None and prev > e.seq_id:
            return True
        self._max_seq[e.producer_id] = e.seq_id
        return False


class DtDetector:
    """Streaming detection-time disorder detector across all producers.

    An event is out of order iff some earlier arrival has a strictly larger
    ``dt``; equal detection times count as correctly ordered.
    """

    def __init__(self) -> None:
        self._max_dt: int | None = None

    def observe(self, e: Event) -> bool:
        if self._max_dt is not None and self._max_dt > e.dt:
            return True
        self._max_dt = e.dt
        return False


def detect_ooo_by_seq(arrival_ordered: Sequence[Event]) -> list[bool]:
    det = SeqDetector()
    return [det.observe(e) for e in arrival_ordered]


def detect_ooo_by_dt(arrival_ordered: Sequence[Event]) -> list[bool]:
    det = DtDetector()
    return [det.observe(e) for e in arrival_ordered]


def detect_ooo(arrival_ordered: Sequence[Event]) -> list[OooFlags]:
    seq = detect_ooo_by_seq(arrival_ordered)
    by_dt = detect_ooo_by_dt(arrival_ordered)
    return [OooFlags(s, d) for s, d in zip(seq, by_dt)]


def count_ooo_by_dt(arrival_ordered: Sequence[Event]) -> int:
    return sum(detect_ooo_by_dt(arrival_ordered))
