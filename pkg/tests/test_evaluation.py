import csv
from dataclasses import replace

import pytest

from reorderbuf.dataset_io import write_metrics
from reorderbuf.engine import EmittedEvent
from reorderbuf.evaluation import (
    min_required_buffer,
    not_compensated_pct,
    overfit_pct,
    run_grid,
    run_one,
    sweep,
    uncompensated_with_static,
)
from reorderbuf.model import Event
from reorderbuf.strategies import ALGORITHMS, DEFAULT_CONFIGS

from oracles import random_dataset, static_late_count


def ev(pid, seq, dt, srect):
    return Event(pid, seq, dt, dt, srect, srect, srect)


def pairwise_b_star(events):
    """Closed form: j needs b >= srect_j - dt_i for every earlier i with dt_i > dt_j."""
    best = 0
    for j, ej in enumerate(events):
        for ei in events[:j]:
            if ei.dt > ej.dt:
                best = max(best, ej.srect - ei.dt)
    return best


class TestMetrics:
    def test_not_compensated_pct(self):
        e = ev("a", 0, 0, 0)
        ems = [EmittedEvent(e, i >= 2, 0, 0) for i in range(10)]
        assert not_compensated_pct(ems, 10) == 20.0
        assert not_compensated_pct([], 0) == 0.0

    def test_overfit(self):
        assert overfit_pct([1000, 1000], 500) == 200.0
        assert overfit_pct([300, 500], 400) == 100.0
        assert overfit_pct([10], 0) is None
        with pytest.raises(ValueError):
            overfit_pct([], 10)

    def test_sba_at_b_star_is_exact(self):
        events = random_dataset(8, n=300)
        b = min_required_buffer(events)
        cfg = replace(DEFAULT_CONFIGS["sba"], static_buffer_ms=b)
        r = run_one("r", events, "sba", cfg)
        assert r.overfit_pct == 100.0
        assert r.not_compensated == 0


class TestMinRequiredBuffer:
    def test_sorted_needs_zero(self):
        assert min_required_buffer([ev("a", i, i, i + 7) for i in range(30)]) == 0
        assert min_required_buffer([]) == 0

    def test_two_event_example(self):
        assert min_required_buffer([ev("a", 0, 10, 11), ev("b", 0, 5, 70)]) == 60

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_exhaustive_scan(self, seed):
        events = random_dataset(seed, n=200, max_delay=150)
        b = 0
        while uncompensated_with_static(events, b):
            b += 1
        assert min_required_buffer(events) == b == pairwise_b_star(events)

    @pytest.mark.parametrize("seed", range(10))
    def test_engine_agrees_with_pairwise_lateness(self, seed):
        events = random_dataset(100 + seed, n=150)
        for b in (0, 17, 80, 200):
            assert uncompensated_with_static(events, b) == static_late_count(events, b)

    @pytest.mark.parametrize("k", [1, 50, 999])
    def test_uniform_extra_delay_shifts_b_star(self, k):
        events = random_dataset(3, n=200)
        later = [replace(e, srect=e.srect + k, srest=e.srest + k, crt=e.crt + k) for e in events]
        assert min_required_buffer(later) == min_required_buffer(events) + k


class TestGrid:
    def test_cardinality_and_order(self):
        datasets = {f"d{s}": random_dataset(s, n=150) for s in range(3)}
        results = run_grid(datasets)
        assert len(results) == 21
        assert [(r.dataset, r.algorithm) for r in results] == [(d, a) for d in datasets for a in ALGORITHMS]
        assert all(r.error is None for r in results)
        assert len({r.min_required_buffer_ms for r in results if r.dataset == "d0"}) == 1

    def test_parallel_matches_serial(self, tmp_path):
        datasets = {f"d{s}": random_dataset(s, n=200) for s in range(2)}
        write_metrics(run_grid(datasets, workers=1), tmp_path / "a.csv")
        write_metrics(run_grid(datasets, workers=3), tmp_path / "b.csv")
        write_metrics(run_grid(datasets, workers=1), tmp_path / "c.csv")
        a = (tmp_path / "a.csv").read_bytes()
        assert a == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()

    def test_failure_recorded_and_grid_continues(self):
        bad = replace(DEFAULT_CONFIGS["sba"], static_buffer_ms=10)
        datasets = {"ok": random_dataset(0, n=50), "dup": [ev("a", 0, 0, 1), ev("a", 0, 1, 2)]}
        results = run_grid(datasets, {"sba": bad})
        assert results[0].error is None
        assert "duplicate" in results[1].error

    def test_metrics_csv_columns(self, tmp_path):
        results = run_grid({"d": random_dataset(1, n=80)}, ["bskf"])
        write_metrics(results, tmp_path / "m.csv")
        with open(tmp_path / "m.csv", newline="") as fh:
            row = next(csv.DictReader(fh))
        assert row["algorithm"] == "bskf" and row["dataset"] == "d"
        assert float(row["mean_buffer_ms"]) == pytest.approx(results[0].mean_buffer_ms, abs=1e-4)


class TestSweep:
    def test_row_per_value(self):
        events = random_dataset(2, n=150)
        rows = sweep("d", events, "bsttd", "window_n", [1, 10, 50, 100, 600])
        assert [r.params.count("window_n=") for r in rows] == [1] * 5
        assert ["window_n=%d" % v in r.params for r, v in zip(rows, [1, 10, 50, 100, 600])] == [True] * 5

    def test_static_buffer_monotone(self):
        events = random_dataset(4, n=300)
        rows = sweep("d", events, "sba", "static_buffer_ms", range(0, 320, 20))
        late = [r.not_compensated for r in rows]
        assert late == sorted(late, reverse=True)
        assert late[-1] == 0

    def test_offset_shifts_mean_buffer(self):
        events = random_dataset(6, n=250)
        offsets = [0, 100, 250]
        rows = sweep("d", events, "bsttda", "offset_ms", offsets)
        n = len(events)
        # the first buffer is the warm-up value, independent of the offset
        for r, off in zip(rows[1:], offsets[1:]):
            assert r.mean_buffer_ms - rows[0].mean_buffer_ms == pytest.approx(off * (n - 1) / n, rel=1e-9)

    def test_rejects_foreign_parameter(self):
        with pytest.raises(ValueError):
            sweep("d", random_dataset(0, n=20), "sba", "window_n", [5])
        with pytest.raises(ValueError):
            sweep("d", random_dataset(0, n=20), "nope", "offset_ms", [5])
