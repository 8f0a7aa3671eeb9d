"""
Replaying one workload with every buffer strategy
=================================================

Each strategy sizes the reorder buffer from the transmission times it has
seen. The table shows the share of out-of-order events still emitted late,
the mean buffer, and that mean relative to the smallest sufficient static
buffer.
"""

from reorderbuf import generate, preset, run_grid

events = generate(preset("G-3", seed=1))
print(f"G-3: {len(events)} events, delay ramps up over the session\n")

results = run_grid({"G-3": events})
print(f"{'algorithm':<8} {'late %':>7} {'mean ms':>8} {'overfit %':>9}")
for r in results:
    print(f"{r.algorithm:<8} {r.not_compensated_pct:7.2f} {r.mean_buffer_ms:8.1f} {r.overfit_pct:9.1f}")
print(f"\nsmallest sufficient static buffer: {results[0].min_required_buffer_ms} ms")
