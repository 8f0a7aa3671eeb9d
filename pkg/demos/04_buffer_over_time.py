"""
Buffer size over a session
==========================

Write per-event buffer series for a ramp-down workload to CSV, ready for
plotting. K-slack keeps its historic maximum, so its buffer stays high after
delays shrink; the windowed difference strategy follows the delay down.
"""

import sys
from pathlib import Path

import numpy as np

from reorderbuf import generate, make_strategy, preset, run_replay
from reorderbuf.dataset_io import write_buffer_series

out = Path(sys.argv[1] if len(sys.argv) > 1 else "buffer_series")
out.mkdir(parents=True, exist_ok=True)

events = generate(preset("G-4"))
for name in ("kslack", "bsttd", "bsttda"):
    result = run_replay(events, make_strategy(name))
    write_buffer_series(result.buffer_series, out / f"G-4_{name}.csv")
    quarters = np.array_split(np.array(result.buffer_values), 4)
    print(name, "quarter means (ms):", [round(float(q.mean())) for q in quarters])

print(f"series written to {out}/")
