"""Grid maps, benchmark map text I/O, and scenario generators.

Four map families: random (i.i.d. obstacles), room-like (BSP partition with
single-cell doorways), maze (depth-first carving on a half-resolution
lattice), and two-agent corridor instances (recess / I-shape) used by the
symmetric-dilemma case study. All generation is a pure function of its
arguments and seed (see rng.SplitMix64).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .rng import SplitMix64

FREE_GLYPH = "."
OBSTACLE_GLYPH = "@"

RETRY_BUDGET = 100


class MapGenError(RuntimeError):
    """Raised when a feasible map or agent placement cannot be produced."""


class MapParseError(ValueError):
    """Raised on malformed map text; carries the offending 1-based line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GridMap:
    """Static occupancy grid. Cells are (row, col); True means obstacle.

    Moves off the edge are invalid (no wall ring is stored). Instances are
    treated as immutable after construction; distance fields computed against
    a map are cached on the instance (see pathing.distance_field).
    """

    def __init__(self, obstacles: np.ndarray):
        obstacles = np.asarray(obstacles, dtype=bool)
        if obstacles.ndim != 2:
            raise ValueError("obstacle grid must be 2-D")
        h, w = obstacles.shape
        if h < 2 or w < 2:
            raise ValueError("map must be at least 2x2")
        self.obstacles = obstacles
        self.obstacles.flags.writeable = False
        self.height = h
        self.width = w
        self._dfield_cache: dict = {}

    def in_bounds(self, r: int, c: int) -> bool:
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, r: int, c: int) -> bool:
        return self.in_bounds(r, c) and not self.obstacles[r, c]

    def free_cells(self) -> list[tuple[int, int]]:
        rs, cs = np.nonzero(~self.obstacles)
        return list(zip(rs.tolist(), cs.tolist()))

    @property
    def density(self) -> float:
        return float(self.obstacles.mean())

    def to_text(self) -> str:
        rows = ["".join(OBSTACLE_GLYPH if x else FREE_GLYPH for x in row) for row in self.obstacles]
        return "\n".join(["type octile", f"height {self.height}", f"width {self.width}", "map"] + rows) + "\n"

    def __eq__(self, other) -> bool:
        return isinstance(other, GridMap) and np.array_equal(self.obstacles, other.obstacles)

    def __hash__(self) -> int:
        return hash((self.height, self.width, self.obstacles.tobytes()))

    def __repr__(self) -> str:
        return f"GridMap({self.height}x{self.width}, density={self.density:.3f})"


def read_map(text: str) -> GridMap:
    """Parse benchmark map text ('.' free, '@' obstacle)."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if len(lines) < 4:
        raise MapParseError("missing header (need type/height/width/map lines)", max(1, len(lines)))
    if lines[0].strip() != "type octile":
        raise MapParseError(f"expected 'type octile', got {lines[0]!r}", 1)
    try:
        key, value = lines[1].split()
        assert key == "height"
        height = int(value)
    except (ValueError, AssertionError):
        raise MapParseError(f"expected 'height H', got {lines[1]!r}", 2) from None
    try:
        key, value = lines[2].split()
        assert key == "width"
        width = int(value)
    except (ValueError, AssertionError):
        raise MapParseError(f"expected 'width W', got {lines[2]!r}", 3) from None
    if lines[3].strip() != "map":
        raise MapParseError(f"expected 'map', got {lines[3]!r}", 4)
    rows = lines[4:]
    if len(rows) != height:
        raise MapParseError(f"expected {height} map rows, got {len(rows)}", 5 + len(rows))
    grid = np.zeros((height, width), dtype=bool)
    for i, row in enumerate(rows):
        line_no = 5 + i
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} cells, expected {width}", line_no)
        for j, glyph in enumerate(row):
            if glyph == OBSTACLE_GLYPH:
                grid[i, j] = True
            elif glyph != FREE_GLYPH:
                raise MapParseError(f"unknown glyph {glyph!r} at column {j + 1}", line_no)
    return GridMap(grid)


def write_map(grid: GridMap, path: str | None = None) -> str:
    """Serialize to benchmark text; optionally write to a file."""
    text = grid.to_text()
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text


@dataclass
class Scenario:
    """A map plus per-agent start and goal cells."""

    grid: GridMap
    starts: list[tuple[int, int]]
    goals: list[tuple[int, int]]
    seed: int
    unreachable: list[int] = field(default_factory=list)

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    def validate(self) -> None:
        n = len(self.starts)
        if n < 1 or len(self.goals) != n:
            raise ValueError("need n >= 1 starts and as many goals")
        if len(set(self.starts)) != n:
            raise ValueError("starts must be distinct")
        if len(set(self.goals)) != n:
            raise ValueError("goals must be distinct")
        for cell in self.starts + self.goals:
            if not self.grid.is_free(*cell):
                raise ValueError(f"cell {cell} is not free")
        labels = _component_labels(self.grid.obstacles)
        for i, (s, g) in enumerate(zip(self.starts, self.goals)):
            if labels[s] != labels[g]:
                raise ValueError(f"agent {i}: goal {g} unreachable from start {s}")

    def to_json(self, map_ref: str | None = None) -> str:
        obj = {
            "map": map_ref if map_ref is not None else self.grid.to_text(),
            "starts": [list(c) for c in self.starts],
            "goals": [list(c) for c in self.goals],
            "seed": self.seed,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def scenario_from_json(text: str, base_dir: str = ".") -> Scenario:
    obj = json.loads(text)
    map_ref = obj["map"]
    if "\n" in map_ref:
        grid = read_map(map_ref)
    else:
        with open(os.path.join(base_dir, map_ref)) as f:
            grid = read_map(f.read())
    scn = Scenario(
        grid=grid,
        starts=[tuple(c) for c in obj["starts"]],
        goals=[tuple(c) for c in obj["goals"]],
        seed=int(obj.get("seed", 0)),
    )
    scn.validate()
    return scn


def _component_labels(obstacles: np.ndarray) -> np.ndarray:
    """4-connected component label per cell (-1 on obstacles)."""
    h, w = obstacles.shape
    labels = np.full((h, w), -1, dtype=np.int32)
    current = 0
    for r in range(h):
        for c in range(w):
            if obstacles[r, c] or labels[r, c] >= 0:
                continue
            stack = [(r, c)]
            labels[r, c] = current
            while stack:
                cr, cc = stack.pop()
                for nr, nc in ((cr - 1, cc), (cr + 1, cc), (cr, cc - 1), (cr, cc + 1)):
                    if 0 <= nr < h and 0 <= nc < w and not obstacles[nr, nc] and labels[nr, nc] < 0:
                        labels[nr, nc] = current
                        stack.append((nr, nc))
            current += 1
    return labels


def _place_agents(grid: GridMap, n_agents: int, rng: SplitMix64) -> tuple[list, list]:
    """Distinct starts and distinct goals on free cells, each pair connected."""
    free = grid.free_cells()
    if len(free) < n_agents:
        raise MapGenError(f"{len(free)} free cells cannot host {n_agents} agents")
    labels = _component_labels(grid.obstacles)
    starts = rng.sample(free, n_agents)
    goals = rng.sample(free, n_agents)
    for i in range(n_agents):
        tries = 0
        while labels[starts[i]] != labels[goals[i]]:
            tries += 1
            if tries > RETRY_BUDGET:
                raise MapGenError(f"agent {i}: no connected start-goal pair after {RETRY_BUDGET} retries")
            start_pool = [c for c in free if c not in starts or c == starts[i]]
            goal_pool = [c for c in free if c not in goals or c == goals[i]]
            starts[i] = rng.choice(start_pool)
            goals[i] = rng.choice(goal_pool)
    return starts, goals


def gen_random(width: int, height: int, density: float, n_agents: int, seed: int) -> Scenario:
    """Random map: i.i.d. obstacle coin flips at the given density."""
    if not 0.0 <= density <= 0.5:
        raise ValueError("density must lie in [0, 0.5]")
    rng = SplitMix64(seed)
    for _ in range(RETRY_BUDGET):
        obstacles = np.zeros((height, width), dtype=bool)
        for r in range(height):
            for c in range(width):
                obstacles[r, c] = rng.random() < density
        grid = GridMap(obstacles)
        try:
            starts, goals = _place_agents(grid, n_agents, rng)
        except MapGenError:
            continue
        scn = Scenario(grid, starts, goals, seed)
        scn.validate()
        return scn
    raise MapGenError(f"no feasible random map after {RETRY_BUDGET} attempts")


# BSP tuning: regions smaller than this area stop splitting with the given
# probability, which spreads room sizes while keeping roughly two thirds of
# 32x32 draws inside the target density window (the rest regenerate).
_BSP_STOP_AREA = 120
_BSP_STOP_PROB = 0.1
_MIN_ROOM_SIDE = 3


def _bsp_obstacles(height: int, width: int, rng: SplitMix64) -> np.ndarray:
    obstacles = np.zeros((height, width), dtype=bool)
    doors: set[tuple[int, int]] = set()

    def door_adjacent(cells) -> bool:
        for r, c in cells:
            if ((r - 1, c) in doors or (r + 1, c) in doors
                    or (r, c - 1) in doors or (r, c + 1) in doors):
                return True
        return False

    def split(r0: int, c0: int, h: int, w: int, depth: int) -> None:
        can_h = h >= 2 * _MIN_ROOM_SIDE + 1
        can_v = w >= 2 * _MIN_ROOM_SIDE + 1
        if not (can_h or can_v):
            return
        if depth > 0 and h * w <= _BSP_STOP_AREA and rng.random() < _BSP_STOP_PROB:
            return
        if can_h and can_v:
            horizontal = rng.random() < (0.8 if h > w else 0.2) if h != w else rng.random() < 0.5
        else:
            horizontal = can_h
        if horizontal:
            lines = [R for R in range(r0 + _MIN_ROOM_SIDE, r0 + h - _MIN_ROOM_SIDE)
                     if not door_adjacent((R, c) for c in range(c0, c0 + w))]
            if not lines:
                return
            R = rng.choice(lines)
            door = (R, c0 + rng.randrange(w))
            for c in range(c0, c0 + w):
                obstacles[R, c] = True
            obstacles[door] = False
            doors.add(door)
            split(r0, c0, R - r0, w, depth + 1)
            split(R + 1, c0, r0 + h - R - 1, w, depth + 1)
        else:
            lines = [C for C in range(c0 + _MIN_ROOM_SIDE, c0 + w - _MIN_ROOM_SIDE)
                     if not door_adjacent((r, C) for r in range(r0, r0 + h))]
            if not lines:
                return
            C = rng.choice(lines)
            door = (r0 + rng.randrange(h), C)
            for r in range(r0, r0 + h):
                obstacles[r, C] = True
            obstacles[door] = False
            doors.add(door)
            split(r0, c0, h, C - c0, depth + 1)
            split(r0, C + 1, h, c0 + w - C - 1, depth + 1)

    split(0, 0, height, width, 0)
    return obstacles


def gen_room(width: int, height: int, n_agents: int, seed: int) -> Scenario:
    """Room-like map: BSP partition, one single-cell doorway per shared wall."""
    if width < 8 or height < 8:
        raise ValueError("room maps need width and height >= 8")
    rng = SplitMix64(seed)
    for _ in range(RETRY_BUDGET):
        obstacles = _bsp_obstacles(height, width, rng)
        grid = GridMap(obstacles)
        if (width, height) == (32, 32) and not 0.25 <= grid.density <= 0.35:
            continue
        try:
            starts, goals = _place_agents(grid, n_agents, rng)
        except MapGenError:
            continue
        scn = Scenario(grid, starts, goals, seed)
        scn.validate()
        return scn
    raise MapGenError(f"no feasible room map after {RETRY_BUDGET} attempts")


def gen_maze(width: int, height: int, n_agents: int, seed: int) -> Scenario:
    """Maze map: randomized depth-first carving on the half-resolution lattice.

    Lattice nodes sit on even (row, col) cells; carved edges connect nodes two
    cells apart, so free cells form a tree and no 2x2 block is fully free.
    """
    if width < 3 or height < 3:
        raise ValueError("maze maps need width and height >= 3")
    rng = SplitMix64(seed)
    obstacles = np.ones((height, width), dtype=bool)
    nodes_h = (height + 1) // 2
    nodes_w = (width + 1) // 2
    start = (rng.randrange(nodes_h), rng.randrange(nodes_w))
    visited = {start}
    stack = [start]
    obstacles[2 * start[0], 2 * start[1]] = False
    while stack:
        r, c = stack[-1]
        neighbors = [(r + dr, c + dc) for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
                     if 0 <= r + dr < nodes_h and 0 <= c + dc < nodes_w and (r + dr, c + dc) not in visited]
        if not neighbors:
            stack.pop()
            continue
        nxt = rng.choice(neighbors)
        visited.add(nxt)
        obstacles[2 * nxt[0], 2 * nxt[1]] = False
        obstacles[r + nxt[0], c + nxt[1]] = False  # edge cell between the two nodes
        stack.append(nxt)
    grid = GridMap(obstacles)
    starts, goals = _place_agents(grid, n_agents, rng)
    scn = Scenario(grid, starts, goals, seed)
    scn.validate()
    return scn


def gen_corridor(kind: str, corridor_len: int, seed: int) -> Scenario:
    """Two-agent symmetric corridor instance; goals are the swapped starts.

    kind='recess': width-1 corridor with two one-cell recesses at mirrored
    columns (random offset, each on a random side), so either half holds a
    refuge. kind='i_shape': open 3x3 plazas attached at both corridor ends.
    """
    if corridor_len < 3:
        raise ValueError("corridor_len must be >= 3")
    rng = SplitMix64(seed)
    if kind == "recess":
        length = corridor_len
        obstacles = np.ones((3, length), dtype=bool)
        obstacles[1, :] = False
        if length >= 4:
            offset = rng.randint(1, max(1, (length - 2) // 2))
            cols = (offset, length - 1 - offset)
        else:
            cols = (1, 1)  # length 3: both recesses share the center column
        rows = (rng.choice((0, 2)), rng.choice((0, 2)))
        if cols[0] == cols[1] and rows[0] == rows[1]:
            rows = (0, 2)
        for row, col in zip(rows, cols):
            obstacles[row, col] = False
        grid = GridMap(obstacles)
        starts = [(1, 0), (1, length - 1)]
    elif kind == "i_shape":
        w = corridor_len + 6
        obstacles = np.ones((3, w), dtype=bool)
        obstacles[:, 0:3] = False
        obstacles[:, w - 3:w] = False
        obstacles[1, :] = False
        grid = GridMap(obstacles)
        starts = [(1, 0), (1, w - 1)]
    else:
        raise ValueError(f"unknown corridor kind {kind!r} (expected 'recess' or 'i_shape')")
    goals = [starts[1], starts[0]]
    scn = Scenario(grid, starts, goals, seed)
    scn.validate()
    return scn
