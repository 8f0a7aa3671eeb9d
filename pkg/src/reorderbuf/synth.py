"""Seeded synthetic workloads with simulated network delay.

Each producer detects events on an interval schedule and every event reaches
the server after a delay drawn from a :class:`DelayModel` evaluated at the
event's detection time. Preparation and server time are zero, so
``cst == dt`` and ``srest == crt == srect``.

Randomness comes from one PCG64 stream per producer seeded from
``(seed, producer_index)``; adding producers never changes the draws of
existing ones.

The ``G-*`` presets approximate the simulated sessions of the published
evaluation. Their generator functions were never released, so the presets
target the reported delay ranges, spreads and out-of-order shares rather
than the exact event sequences.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .model import Event, arrival_order

DELAY_KINDS = ("constant", "uniform", "ramp", "sine")
SCHEDULE_KINDS = ("constant", "rate_ramp")


@dataclass(frozen=True)
class DelayModel:
    """Network delay as a function of session time.

    ``constant`` uses ``delay_ms``; ``uniform`` draws integers in
    ``[lo_ms, hi_ms]``; ``ramp`` moves linearly from ``from_ms`` to ``to_ms``
    over the session; ``sine`` is ``bias_ms + amp * sin(2*pi*t/period_s)``
    where ``amp`` goes linearly from ``amplitude_ms`` to ``amplitude_end_ms``
    (defaults to ``amplitude_ms``). Every kind adds integer jitter drawn
    uniformly from ``[0, jitter_ms]``; ``jitter_end_ms`` ramps that width.
    Results are clipped at zero.
    """

    kind: str = "constant"
    delay_ms: float = 0.0
    lo_ms: int = 0
    hi_ms: int = 0
    from_ms: float = 0.0
    to_ms: float = 0.0
    bias_ms: float = 0.0
    amplitude_ms: float = 0.0
    amplitude_end_ms: float | None = None
    period_s: float = 60.0
    jitter_ms: int = 0
    jitter_end_ms: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in DELAY_KINDS:
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.kind == "uniform" and not 0 <= self.lo_ms <= self.hi_ms:
            raise ValueError("uniform delay needs 0 <= lo_ms <= hi_ms")
        if self.kind == "sine" and self.period_s <= 0:
            raise ValueError("sine period must be positive")
        if self.jitter_ms < 0 or (self.jitter_end_ms or 0) < 0:
            raise ValueError("jitter must be non-negative")

    def sample(self, t_ms: np.ndarray, session_ms: float, rng: np.random.Generator) -> np.ndarray:
        """Integer delays for detection offsets ``t_ms`` from session start."""
        frac = t_ms / session_ms
        if self.kind == "constant":
            base = np.full(t_ms.shape, float(self.delay_ms))
        elif self.kind == "uniform":
            base = rng.integers(self.lo_ms, self.hi_ms, size=t_ms.shape, endpoint=True).astype(float)
        elif self.kind == "ramp":
            base = self.from_ms + (self.to_ms - self.from_ms) * frac
        else:
            amp_end = self.amplitude_ms if self.amplitude_end_ms is None else self.amplitude_end_ms
            amp = self.amplitude_ms + (amp_end - self.amplitude_ms) * frac
            base = self.bias_ms + amp * np.sin(2 * np.pi * t_ms / (self.period_s * 1000.0))
        jitter_end = self.jitter_ms if self.jitter_end_ms is None else self.jitter_end_ms
        if self.jitter_ms or jitter_end:
            width = np.rint(self.jitter_ms + (jitter_end - self.jitter_ms) * frac).astype(np.int64)
            # integer draw in [0, width] per event
            base = base + np.floor(rng.random(t_ms.shape) * (width + 1))
        return np.maximum(np.rint(base), 0).astype(np.int64)


@dataclass(frozen=True)
class WorkloadSpec:
    """Complete description of one synthetic session.

    ``schedule="constant"`` emits every ``interval_ms``; ``"rate_ramp"``
    varies the event *rate* linearly from ``1/interval_ms`` at the start to
    ``1/interval_end_ms`` at the end of the session.
    """

    producers: int = 10
    session_s: float = 600.0
    interval_ms: float = 200.0
    interval_end_ms: float | None = None
    schedule: str = "constant"
    delay: DelayModel = field(default_factory=DelayModel)
    payload_bytes: int = 0
    seed: int = 0
    start_ms: int = 1_500_000_000_000
    stagger: bool = True

    def __post_init__(self) -> None:
        if self.producers < 1:
            raise ValueError("need at least one producer")
        if self.session_s <= 0 or self.interval_ms <= 0:
            raise ValueError("session_s and interval_ms must be positive")
        if self.schedule not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "rate_ramp" and not (self.interval_end_ms or 0) > 0:
            raise ValueError("rate_ramp schedule needs a positive interval_end_ms")


def detection_offsets(spec: WorkloadSpec) -> np.ndarray:
    """Detection offsets (ms from session start, before staggering) for one producer."""
    session_ms = spec.session_s * 1000.0
    if spec.schedule == "constant":
        return np.arange(0.0, session_ms, spec.interval_ms)
    r0 = 1.0 / spec.interval_ms
    r1 = 1.0 / spec.interval_end_ms
    a = (r1 - r0) / session_ms
    # cumulative count N(t) = r0*t + a*t^2/2; k-th event at N(t) = k
    total = r0 * session_ms + a * session_ms**2 / 2
    k = np.arange(0, math.ceil(total) + 1, dtype=float)
    if a == 0:
        t = k / r0
    else:
        with np.errstate(invalid="ignore"):
            t = 2 * k / (r0 + np.sqrt(r0 * r0 + 2 * a * k))
    return t[t < session_ms]


def _producer_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def generate(spec: WorkloadSpec) -> list[Event]:
    """Generate the events of ``spec`` in arrival order."""
    session_ms = spec.session_s * 1000.0
    offsets = detection_offsets(spec)
    events: list[Event] = []
    width = len(str(spec.producers - 1))
    for p in range(spec.producers):
        rng = _producer_rng(spec.seed, p)
        phase = spec.interval_ms * p / spec.producers if spec.stagger else 0.0
        t = offsets + phase
        t = t[t < session_ms]
        t_int = np.floor(t).astype(np.int64)
        delays = spec.delay.sample(t_int.astype(float), session_ms, rng)
        pid = f"p{p:0{width}d}"
        for seq, (ti, d) in enumerate(zip(t_int.tolist(), delays.tolist())):
            dt = spec.start_ms + ti
            srect = dt + d
            events.append(Event(pid, seq, dt, dt, srect, srect, srect, spec.payload_bytes))
    return arrival_order(events)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_BASE = WorkloadSpec()

PRESETS: dict[str, WorkloadSpec] = {
    # wide uniform delay: most events overtaken
    "G-1": replace(_BASE, delay=DelayModel("uniform", lo_ms=100, hi_ms=900)),
    # narrow uniform delay around 500 ms
    "G-2": replace(_BASE, delay=DelayModel("uniform", lo_ms=476, hi_ms=527)),
    # mean delay rises across the session, constant spread
    "G-3": replace(
        _BASE, delay=DelayModel("ramp", from_ms=25, to_ms=966, jitter_ms=52)
    ),
    # mean delay falls across the session, constant spread
    "G-4": replace(
        _BASE, delay=DelayModel("ramp", from_ms=930, to_ms=25, jitter_ms=68)
    ),
    # spread grows across the session
    "G-5": replace(
        _BASE, delay=DelayModel("constant", delay_ms=22, jitter_ms=0, jitter_end_ms=970)
    ),
    # biased sine whose amplitude and spread grow across the session
    "G-6": replace(
        _BASE,
        delay=DelayModel(
            "sine",
            bias_ms=80,
            amplitude_ms=0,
            amplitude_end_ms=60,
            period_s=60,
            jitter_ms=0,
            jitter_end_ms=900,
        ),
    ),
    # slow sine between ~250 and ~750 ms
    "G-7": replace(
        _BASE,
        delay=DelayModel("sine", bias_ms=466, amplitude_ms=216, period_s=300, jitter_ms=68),
    ),
    # biased sine with small added variance
    "G-8": replace(
        _BASE,
        delay=DelayModel("sine", bias_ms=475, amplitude_ms=225, period_s=60, jitter_ms=50),
    ),
    # event rate ramps from 0.1 Hz to 10 Hz per producer
    "G-9": replace(
        _BASE,
        schedule="rate_ramp",
        interval_ms=10000,
        interval_end_ms=100,
        delay=DelayModel("uniform", lo_ms=100, hi_ms=900),
    ),
    "G-10": replace(
        _BASE,
        schedule="rate_ramp",
        interval_ms=10000,
        interval_end_ms=100,
        delay=DelayModel("uniform", lo_ms=476, hi_ms=527),
    ),
    # event rate ramps down from 10 Hz to 0.1 Hz per producer
    "G-11": replace(
        _BASE,
        schedule="rate_ramp",
        interval_ms=100,
        interval_end_ms=10000,
        delay=DelayModel("uniform", lo_ms=100, hi_ms=900),
    ),
    "G-12": replace(
        _BASE,
        schedule="rate_ramp",
        interval_ms=100,
        interval_end_ms=10000,
        delay=DelayModel("uniform", lo_ms=476, hi_ms=527),
    ),
}


def preset(name: str, seed: int | None = None) -> WorkloadSpec:
    """Return the workload for a ``G-*`` label, optionally reseeded.

    Raises:
        KeyError: for an unknown label.
    """
    key = name.upper()
    if key not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    spec = PRESETS[key]
    return spec if seed is None else replace(spec, seed=seed)


# ---------------------------------------------------------------------------
# key=value serialization
# ---------------------------------------------------------------------------

_DELAY_PREFIX = "delay."


def spec_to_text(spec: WorkloadSpec) -> str:
    lines = []
    for f in fields(WorkloadSpec):
        if f.name == "delay":
            continue
        value = getattr(spec, f.name)
        if value is not None:
            lines.append(f"{f.name}={value}")
    for name, value in asdict(spec.delay).items():
        if value is not None:
            lines.append(f"{_DELAY_PREFIX}{name}={value}")
    return "\n".join(lines) + "\n"


_OPTIONAL_INT = {"jitter_end_ms"}


def _convert(raw: str, default: Any, name: str) -> Any:
    if default is None and name.rsplit(".", 1)[-1] in _OPTIONAL_INT:
        return int(raw)
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or default is None:
        return float(raw)
    return raw


def spec_from_text(text: str) -> WorkloadSpec:
    """Parse ``key=value`` lines (``#`` comments allowed) into a spec.

    Delay fields are prefixed with ``delay.``; a ``preset=G-n`` line starts
    from that preset and later lines override it.
    """
    top: dict[str, Any] = {}
    delay: dict[str, Any] = {}
    base = WorkloadSpec()
    delay_defaults = {f.name: f.default for f in fields(DelayModel)}
    spec_defaults = {f.name: getattr(base, f.name) for f in fields(WorkloadSpec)}
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            base = preset(value)
            continue
        pairs.append((lineno, key, value))
    for lineno, key, value in pairs:
        if key.startswith(_DELAY_PREFIX):
            name = key[len(_DELAY_PREFIX):]
            if name not in delay_defaults:
                raise ValueError(f"line {lineno}: unknown delay field {name!r}")
            delay[name] = value if name == "kind" else _convert(value, delay_defaults[name], key)
        elif key in spec_defaults and key != "delay":
            top[key] = _convert(value, spec_defaults[key], key)
        else:
            raise ValueError(f"line {lineno}: unknown field {key!r}")
    new_delay = replace(base.delay, **delay) if delay else base.delay
    return replace(base, delay=new_delay, **top)


def read_spec(path: str | Path) -> WorkloadSpec:
    return spec_from_text(Path(path).read_text(encoding="utf-8"))


def write_spec(spec: WorkloadSpec, path: str | Path) -> None:
    Path(path).write_text(spec_to_text(spec), encoding="utf-8")
