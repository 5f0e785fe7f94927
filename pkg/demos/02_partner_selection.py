"""Path-flow overlap: how agents pick the partner they are most entangled with.

Two agents sharing a corridor in the same direction barely register; the same
corridor walked head-on produces a large decay-weighted overlap, and the
fixed partner then sticks until that overlap is fully resolved.

Run: python demos/02_partner_selection.py
"""

import numpy as np

from svo_mapf import GridMap, compute_overlap, update_fixed_partners

corridor = GridMap(np.array([[True] * 8, [False] * 8, [True] * 8]))

print("corridor cells: (1,0) .. (1,7)\n")

print("--- same direction (follower behind leader) ---")
res = compute_overlap(corridor, [(1, 0), (1, 2)], [(1, 4), (1, 6)], decay=0.95)
print("overlap matrix:\n", np.round(res.matrix, 4))
print("temporary partners:", res.partners, "(only the leader-goal cell registers)\n")

print("--- head-on (the symmetric dilemma) ---")
res = compute_overlap(corridor, [(1, 0), (1, 7)], [(1, 7), (1, 0)], decay=0.95)
print("overlap matrix:\n", np.round(res.matrix, 4))
print("temporary partners:", res.partners)
print("every contested cell adds decay**t_i + decay**t_j, so nearer conflicts weigh more\n")

print("--- fixed partners persist until their conflict clears ---")
fixed = res.partners.copy()
print("initial fixed partners:", fixed)
later = compute_overlap(corridor, [(1, 1), (1, 6)], [(1, 7), (1, 0)], decay=0.95)
fixed = update_fixed_partners(later.partners, later.matrix, fixed)
print("mid-conflict, partners held:", fixed)
resolved = np.zeros_like(later.matrix)
fixed = update_fixed_partners(np.array([0, 1]), resolved, fixed)
print("after the overlap hits zero, both re-select (self = no partner):", fixed)
