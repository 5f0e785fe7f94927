"""SVO-ordered tie-breaking: prosocial agents yield and absorb the penalty.

The five-agent fixture is a follower chain where one idling decision cascades
through the whole team: 0 follows 2, 2 follows 3, 3 follows 1 (which is about
to walk into a wall), and 4 follows 0. Resolution idles all five and routes
each pair's collision penalty to its strictly more prosocial member.

Run: python demos/03_tie_breaking.py
"""

import numpy as np

from svo_mapf import GridMap, resolve
from svo_mapf.pathing import ACTION_NAMES

obstacles = np.zeros((3, 7), dtype=bool)
obstacles[0, 1] = True  # the wall agent 1 tries to enter
grid = GridMap(obstacles)

positions = [(1, 4), (1, 1), (1, 3), (1, 2), (1, 5)]
intents = np.array([3, 1, 3, 3, 3])  # 0,2,3,4 move left; 1 moves up into the wall
svos = np.array([45.0, 40.0, 30.0, 20.0, 10.0])

print("agent positions:", positions)
print("intents:", [ACTION_NAMES[int(a)] for a in intents])
print("SVO angles (descending = chain order):", svos, "\n")

out = resolve(grid, positions, intents, svos)
print("adjusted actions:", [ACTION_NAMES[int(a)] for a in out.actions])
print("annotations:", out.annotations)
print("penalties:", out.penalties)
print("chain pops:", out.iterations)
print("\npenalized agents:", [i for i in range(5) if out.penalties[i] < 0])
print("agent 3 and 4 idle too, but being the less prosocial member of their")
print("pairs they pass through without a penalty\n")

print("--- two-agent swap: only the prosocial side pays ---")
swap_grid = GridMap(np.zeros((3, 4), dtype=bool))
out = resolve(swap_grid, [(1, 1), (1, 2)], np.array([4, 3]), np.array([45.0, 0.0]))
print("actions:", [ACTION_NAMES[int(a)] for a in out.actions],
      "penalties:", out.penalties)
