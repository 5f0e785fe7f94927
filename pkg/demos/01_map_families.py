"""Generate one instance of each map family and look at its structure.

Run: python demos/01_map_families.py
"""

from svo_mapf import gen_corridor, gen_maze, gen_random, gen_room


def render(scenario):
    grid = scenario.grid
    rows = [list(line) for line in grid.to_text().splitlines()[4:]]
    for i, (r, c) in enumerate(scenario.starts):
        rows[r][c] = chr(ord("a") + i % 26)
    for i, (r, c) in enumerate(scenario.goals):
        if rows[r][c] == ".":
            rows[r][c] = chr(ord("A") + i % 26)
    return "\n".join("".join(row) for row in rows)


print("=== random 16x16, density 0.2, 6 agents (seed 7) ===")
scn = gen_random(16, 16, 0.2, 6, seed=7)
print(render(scn))
print(f"density {scn.grid.density:.3f}; lowercase = starts, uppercase = goals\n")

print("=== room-like 16x16, 6 agents (seed 7) ===")
scn = gen_room(16, 16, 6, seed=7)
print(render(scn))
print(f"density {scn.grid.density:.3f}; every wall carries exactly one doorway\n")

print("=== maze 15x15, 4 agents (seed 7) ===")
scn = gen_maze(15, 15, 4, seed=7)
print(render(scn))
print(f"density {scn.grid.density:.3f}; free cells form a tree, no 2x2 open block\n")

print("=== corridor with recesses, length 9 (seed 3) ===")
scn = gen_corridor("recess", 9, seed=3)
print(render(scn))
print("two agents swap ends; the recesses are the only passing places\n")

print("=== I-shaped corridor, length 5 (seed 0) ===")
scn = gen_corridor("i_shape", 5, seed=0)
print(render(scn))
print("open plazas at both ends, one-cell corridor between them")
