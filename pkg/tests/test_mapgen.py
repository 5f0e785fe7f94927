from collections import deque

import numpy as np
import pytest

from svo_mapf import mapgen
from svo_mapf.mapgen import MapGenError, MapParseError


def bfs_reachable(grid, start):
    """Independent BFS oracle over free cells."""
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if grid.is_free(*nxt) and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def joint_state_solvable(scenario):
    """Exhaustive 2-agent joint-state BFS respecting both collision rules."""
    grid = scenario.grid
    deltas = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
    start = (scenario.starts[0], scenario.starts[1])
    goal = (scenario.goals[0], scenario.goals[1])
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            return True
        (r0, c0), (r1, c1) = state
        for d0 in deltas:
            n0 = (r0 + d0[0], c0 + d0[1])
            if not grid.is_free(*n0):
                continue
            for d1 in deltas:
                n1 = (r1 + d1[0], c1 + d1[1])
                if not grid.is_free(*n1) or n0 == n1:
                    continue
                if n0 == state[1] and n1 == state[0]:
                    continue
                nxt = (n0, n1)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return False


class TestRandom:
    def test_paper_configuration(self):
        scn = mapgen.gen_random(32, 32, 0.2, 50, seed=1)
        assert scn.n_agents == 50
        obstacles = int(scn.grid.obstacles.sum())
        # binomial(1024, 0.2): mean ~205, sd ~12.8
        assert 150 <= obstacles <= 260
        assert len(set(scn.starts)) == 50 and len(set(scn.goals)) == 50

    def test_zero_density(self):
        scn = mapgen.gen_random(4, 4, 0.0, 1, seed=0)
        assert scn.grid.obstacles.sum() == 0
        assert scn.n_agents == 1

    def test_all_pairs_connected(self):
        scn = mapgen.gen_random(10, 10, 0.3, 8, seed=7)
        for s, g in zip(scn.starts, scn.goals):
            assert g in bfs_reachable(scn.grid, s)

    def test_density_out_of_range(self):
        with pytest.raises(ValueError):
            mapgen.gen_random(10, 10, 0.6, 1, seed=0)

    def test_placement_infeasible(self):
        with pytest.raises(MapGenError):
            mapgen.gen_random(4, 4, 0.5, 16, seed=0)


class TestRoom:
    def test_density_window(self):
        scn = mapgen.gen_room(32, 32, 100, seed=3)
        assert 0.25 <= scn.grid.density <= 0.35
        assert scn.n_agents == 100

    def test_minimal_map_has_doorway_wall(self):
        scn = mapgen.gen_room(8, 8, 1, seed=0)
        grid = scn.grid
        assert grid.obstacles.sum() >= 1
        # a doorway: a free cell flanked along one axis by non-free cells, at
        # least one of them an in-map wall cell
        def wall(r, c):
            return grid.in_bounds(r, c) and bool(grid.obstacles[r, c])

        doorway = False
        for r in range(grid.height):
            for c in range(grid.width):
                if not grid.is_free(r, c):
                    continue
                if (not grid.is_free(r, c - 1) and not grid.is_free(r, c + 1)
                        and (wall(r, c - 1) or wall(r, c + 1))):
                    doorway = True
                if (not grid.is_free(r - 1, c) and not grid.is_free(r + 1, c)
                        and (wall(r - 1, c) or wall(r + 1, c))):
                    doorway = True
        assert doorway
        free = grid.free_cells()
        assert bfs_reachable(grid, free[0]) == set(free)

    def test_rooms_mutually_reachable(self):
        scn = mapgen.gen_room(32, 32, 8, seed=11)
        free = scn.grid.free_cells()
        assert bfs_reachable(scn.grid, free[0]) == set(free)

    def test_size_precondition(self):
        with pytest.raises(ValueError):
            mapgen.gen_room(7, 8, 1, seed=0)


class TestMaze:
    def test_density(self):
        scn = mapgen.gen_maze(32, 32, 32, seed=5)
        assert 0.45 <= scn.grid.density <= 0.55

    def test_tree_structure(self):
        scn = mapgen.gen_maze(5, 5, 1, seed=0)
        free = scn.grid.free_cells()
        assert bfs_reachable(scn.grid, free[0]) == set(free)
        edges = 0
        for r, c in free:
            if scn.grid.is_free(r + 1, c):
                edges += 1
            if scn.grid.is_free(r, c + 1):
                edges += 1
        assert edges == len(free) - 1  # connected and acyclic

    def test_no_2x2_free_block(self):
        scn = mapgen.gen_maze(17, 17, 4, seed=9)
        obst = scn.grid.obstacles
        for r in range(16):
            for c in range(16):
                assert obst[r:r + 2, c:c + 2].any()


class TestCorridor:
    def test_recess_solvable(self):
        scn = mapgen.gen_corridor("recess", 7, seed=2)
        assert scn.n_agents == 2
        recesses = [c for c in scn.grid.free_cells() if c[0] != 1]
        assert len(recesses) == 2
        assert joint_state_solvable(scn)

    def test_ishape_goals_are_swapped_starts(self):
        scn = mapgen.gen_corridor("i_shape", 3, seed=0)
        assert scn.goals == [scn.starts[1], scn.starts[0]]

    def test_recess_10_solvable(self):
        scn = mapgen.gen_corridor("recess", 10, seed=4)
        assert joint_state_solvable(scn)

    def test_length_precondition(self):
        with pytest.raises(ValueError):
            mapgen.gen_corridor("recess", 2, seed=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            mapgen.gen_corridor("loop", 5, seed=0)


class TestMapIO:
    def test_smallest_map(self):
        grid = mapgen.GridMap(np.zeros((2, 2), dtype=bool))
        assert grid.to_text() == "type octile\nheight 2\nwidth 2\nmap\n..\n..\n"

    def test_roundtrip_generated(self):
        scn = mapgen.gen_random(32, 32, 0.2, 4, seed=9)
        assert mapgen.read_map(mapgen.write_map(scn.grid)) == scn.grid
        # byte-identical canonical round trip
        text = scn.grid.to_text()
        assert mapgen.read_map(text).to_text() == text

    def test_unknown_glyph_names_line(self):
        text = "type octile\nheight 2\nwidth 2\nmap\n..\n.T\n"
        with pytest.raises(MapParseError) as err:
            mapgen.read_map(text)
        assert err.value.line == 6

    def test_ragged_row(self):
        text = "type octile\nheight 2\nwidth 2\nmap\n..\n...\n"
        with pytest.raises(MapParseError) as err:
            mapgen.read_map(text)
        assert err.value.line == 6

    def test_malformed_header(self):
        with pytest.raises(MapParseError) as err:
            mapgen.read_map("type quad\nheight 2\nwidth 2\nmap\n..\n..\n")
        assert err.value.line == 1
        with pytest.raises(MapParseError):
            mapgen.read_map("type octile\nheight x\nwidth 2\nmap\n..\n..\n")


class TestDeterminism:
    def test_identical_args_identical_scenario(self):
        for make in (
            lambda: mapgen.gen_random(16, 16, 0.25, 6, seed=5),
            lambda: mapgen.gen_room(16, 16, 6, seed=5),
            lambda: mapgen.gen_maze(15, 15, 6, seed=5),
            lambda: mapgen.gen_corridor("recess", 9, seed=5),
            lambda: mapgen.gen_corridor("i_shape", 9, seed=5),
        ):
            a, b = make(), make()
            assert a.to_json() == b.to_json()

    def test_scenario_json_roundtrip(self):
        scn = mapgen.gen_random(12, 12, 0.2, 5, seed=8)
        loaded = mapgen.scenario_from_json(scn.to_json())
        assert loaded.grid == scn.grid
        assert loaded.starts == scn.starts and loaded.goals == scn.goals

    def test_every_scenario_validates(self):
        for seed in range(20):
            mapgen.gen_random(12, 12, 0.3, 6, seed=seed).validate()
            mapgen.gen_maze(11, 11, 4, seed=seed).validate()
