"""Single-agent shortest paths and BFS distance fields.

Shortest paths are realized as greedy descent over an exact BFS distance
field with the fixed neighbor order Up, Down, Left, Right. For unit edge
costs this returns the same lengths an open-list search would, but one BFS
per goal is amortized across every timestep and agent that plans to it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .mapgen import GridMap

# Action indices shared across the stack; Idle must be 0 (the tie-breaking
# resolver substitutes action 0). STOP marks a path's terminal vertex and is
# deliberately distinct from every movement direction when flows compare.
IDLE, UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3, 4
STOP = 0
N_ACTIONS = 5
ACTION_DELTAS = {IDLE: (0, 0), UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}
MOVE_ORDER = (UP, DOWN, LEFT, RIGHT)
ACTION_NAMES = {IDLE: "idle", UP: "up", DOWN: "down", LEFT: "left", RIGHT: "right"}

UNREACHABLE = -1


class NoPathError(RuntimeError):
    """Raised when a requested path does not exist."""


def distance_field(grid: GridMap, goal: tuple[int, int]) -> np.ndarray:
    """Exact BFS distances (in steps) from every free cell to the goal.

    Unreachable and obstacle cells hold UNREACHABLE. Fields are cached on the
    map instance, keyed by goal.
    """
    cached = grid._dfield_cache.get(goal)
    if cached is not None:
        return cached
    if not grid.is_free(*goal):
        raise ValueError(f"goal {goal} is not a free cell")
    dist = np.full((grid.height, grid.width), UNREACHABLE, dtype=np.int32)
    dist[goal] = 0
    queue = deque([goal])
    obstacles = grid.obstacles
    h, w = grid.height, grid.width
    while queue:
        r, c = queue.popleft()
        d = dist[r, c] + 1
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < h and 0 <= nc < w and not obstacles[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = d
                queue.append((nr, nc))
    dist.flags.writeable = False
    grid._dfield_cache[goal] = dist
    return dist


@dataclass
class PathFlow:
    """A shortest path with the movement direction taken at each vertex.

    directions[t] points from vertices[t] to vertices[t+1]; the terminal
    vertex carries STOP.
    """

    vertices: list[tuple[int, int]]
    directions: list[int]

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def length(self) -> int:
        return len(self.vertices) - 1


def _direction(a: tuple[int, int], b: tuple[int, int]) -> int:
    dr, dc = b[0] - a[0], b[1] - a[1]
    for action in MOVE_ORDER:
        if ACTION_DELTAS[action] == (dr, dc):
            return action
    raise ValueError(f"{a} and {b} are not 4-adjacent")


def astar_path(grid: GridMap, start: tuple[int, int], goal: tuple[int, int]) -> PathFlow:
    """Deterministic shortest path from start to goal as a PathFlow.

    Greedy descent on the goal's distance field; at each vertex the first
    neighbor (Up, Down, Left, Right order) whose distance is exactly one less
    is taken, so identical inputs always yield the identical path.
    """
    if not grid.is_free(*start):
        raise ValueError(f"start {start} is not a free cell")
    dist = distance_field(grid, goal)
    if dist[start] == UNREACHABLE:
        raise NoPathError(f"no path from {start} to {goal}")
    vertices = [start]
    directions = []
    r, c = start
    while (r, c) != goal:
        d = dist[r, c]
        for action in MOVE_ORDER:
            dr, dc = ACTION_DELTAS[action]
            nr, nc = r + dr, c + dc
            if grid.in_bounds(nr, nc) and dist[nr, nc] == d - 1:
                directions.append(action)
                vertices.append((nr, nc))
                r, c = nr, nc
                break
        else:  # unreachable by construction: every reachable cell has a descent neighbor
            raise NoPathError(f"descent stalled at {(r, c)}")
    directions.append(STOP)
    return PathFlow(vertices, directions)


def greedy_step(grid: GridMap, pos: tuple[int, int], goal: tuple[int, int]) -> int:
    """First distance-decreasing action from pos; IDLE when on goal or stuck."""
    if pos == goal:
        return IDLE
    dist = distance_field(grid, goal)
    d = dist[pos]
    if d == UNREACHABLE:
        return IDLE
    for action in MOVE_ORDER:
        dr, dc = ACTION_DELTAS[action]
        nr, nc = pos[0] + dr, pos[1] + dc
        if grid.in_bounds(nr, nc) and dist[nr, nc] == d - 1:
            return action
    return IDLE
