"""
Sweeping a parameter
====================

Vary the offset added by the window-spread strategy and watch late events
trade against buffer size. On a rising-delay workload the bare spread is too
small, so the offset carries most of the compensation.
"""

import numpy as np

from reorderbuf import generate, preset, sweep

events = generate(preset("G-3", seed=2))
offsets = np.arange(0, 1001, 125)

for r in sweep("G-3", events, "bsttd", "offset_ms", offsets.tolist()):
    print(f"{r.params:<45} late {r.not_compensated_pct:6.2f} %  mean {r.mean_buffer_ms:7.1f} ms")
