"""
Per-frame token pruning
=======================

Top-N keeps the N most probable tokens of a frame. The relative threshold
then walks those N in descending order and stops at the first token whose
probability is at most R times the frame's best one.
"""

import numpy as np

from fltop import partial_sort_desc, prune_frame

frame = np.array([0.03, 0.7, 0.01, 0.2, 0.06])
print("frame:", frame)
print("descending ids:", partial_sort_desc(frame, frame.size).tolist())

# Top-4 alone keeps four tokens
print("N=4, R=0    ->", prune_frame(frame, 4, 0.0).entries)

# 0.06 <= 0.1 * 0.7, so the walk stops after the second token
print("N=4, R=0.1  ->", prune_frame(frame, 4, 0.1).entries)

# N=1 is greedy regardless of R
print("N=1, R=0.5  ->", prune_frame(frame, 1, 0.5).entries)

# On a peaked frame the threshold removes almost everything but the winner
rng = np.random.default_rng(0)
peaked = rng.dirichlet(np.full(32, 0.1))
peaked = (peaked + 50 * np.eye(32)[7]) / 51
for r in (0.0, 0.001, 0.007, 0.03):
    kept = prune_frame(peaked, 4, r)
    print(f"32-token peaked frame, N=4, R={r:<6} keeps {len(kept)} token(s)")
