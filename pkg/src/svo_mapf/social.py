"""Partner selection and socially-aware reward machinery.

An agent's partner is the other agent whose planned path conflicts with its
own the most: shared cells visited with differing movement directions
accumulate decay-weighted overlap, same-direction co-visits contribute
nothing. Fixed partners persist until the overlap with them drops to zero.
The SVO angle then redistributes external rewards between an agent and its
partner, and the stability target blends consecutive SVO distributions with
a weight driven by that same overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mapgen import GridMap
from .pathing import STOP, NoPathError, PathFlow, astar_path

DEFAULT_OVERLAP_DECAY = 0.95
DEFAULT_SVO_IMPORTANCE = 2.0
DEFAULT_OVERLAP_CAP = 1.0  # saturation bound for the stability blend weight
DEFAULT_SVO_BINS = 5


def svo_bin_angles(n_bins: int = DEFAULT_SVO_BINS) -> np.ndarray:
    """Bin-center angles in degrees, uniform over [0, 45]."""
    if n_bins < 2:
        raise ValueError("need at least 2 SVO bins")
    return np.linspace(0.0, 45.0, n_bins)


@dataclass
class OverlapResult:
    """Weighted path-flow overlap matrix plus derived temporary partners."""

    matrix: np.ndarray          # symmetric n x n, zero diagonal
    partners: np.ndarray        # temporary partner per agent (self = no conflict)
    flows: list[PathFlow]       # per-agent planned flow used for the overlap
    unreachable: list[int]      # agents whose goal had no path this step


def agent_flow(grid: GridMap, pos: tuple[int, int], goal: tuple[int, int]) -> tuple[PathFlow, bool]:
    """Planned flow from the current position; singleton STOP if no path."""
    try:
        return astar_path(grid, pos, goal), True
    except NoPathError:
        return PathFlow([pos], [STOP]), False


def compute_overlap(
    grid: GridMap,
    positions: list[tuple[int, int]],
    goals: list[tuple[int, int]],
    decay: float = DEFAULT_OVERLAP_DECAY,
) -> OverlapResult:
    """Pairwise weighted overlap of planned path flows, and temporary partners.

    For every cell both agents visit with differing directions, decay**t_i +
    decay**t_j is added to both matrix entries, t being the cell's index along
    each path (0 = the agent's current cell). A parked goal cell carries STOP,
    which differs from every movement direction, so paths crossing another
    agent's terminal cell do register overlap. Partners are the row argmax
    (lowest index on ties); an all-zero row selects the agent itself.
    """
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must lie in (0, 1]")
    n = len(positions)
    if len(goals) != n:
        raise ValueError("positions and goals must have equal length")
    flows = []
    unreachable = []
    for i in range(n):
        flow, ok = agent_flow(grid, positions[i], goals[i])
        flows.append(flow)
        if not ok:
            unreachable.append(i)
    visit_maps = []
    for flow in flows:
        visit_maps.append({v: (t, flow.directions[t]) for t, v in enumerate(flow.vertices)})
    matrix = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            small, large = visit_maps[i], visit_maps[j]
            if len(small) > len(large):
                small, large = large, small
            total = 0.0
            for cell, (t_a, d_a) in small.items():
                hit = large.get(cell)
                if hit is not None and hit[1] != d_a:
                    total += decay ** t_a + decay ** hit[0]
            if total != 0.0:
                matrix[i, j] = total
                matrix[j, i] = total
    partners = np.arange(n, dtype=np.int64)
    for i in range(n):
        row = matrix[i]
        if row.any():
            partners[i] = int(np.argmax(row))  # argmax takes the lowest index on ties
    return OverlapResult(matrix, partners, flows, unreachable)


def update_fixed_partners(
    temporary: np.ndarray, overlap: np.ndarray, previous: np.ndarray
) -> np.ndarray:
    """Keep each fixed partner while overlap with it persists, else re-select.

    Self-partnered agents have zero diagonal overlap, so they re-evaluate
    every step by construction.
    """
    n = len(temporary)
    if overlap.shape != (n, n) or len(previous) != n:
        raise ValueError("inconsistent shapes")
    updated = np.array(previous, dtype=np.int64, copy=True)
    for i in range(n):
        if overlap[i, previous[i]] == 0.0:
            updated[i] = temporary[i]
    return updated


def redistribute_rewards(
    reward_self: float, reward_partner: float, svo_degrees: float,
    importance: float = DEFAULT_SVO_IMPORTANCE,
) -> tuple[float, float]:
    """Split external rewards into the SVO-policy and action-policy streams.

    reward_svo = (own + partner) / importance;
    reward_action = cos(Z) * own + sin(Z) * partner, Z in degrees.
    Self-partnered agents should pass their own reward as the partner reward.
    """
    if not 0.0 <= svo_degrees <= 45.0:
        raise ValueError(f"SVO angle {svo_degrees} outside [0, 45] degrees")
    if importance <= 0:
        raise ValueError("importance factor must be positive")
    z = math.radians(svo_degrees)
    reward_svo = (reward_self + reward_partner) / importance
    reward_action = math.cos(z) * reward_self + math.sin(z) * reward_partner
    return reward_svo, reward_action


def stability_target(
    z_current: np.ndarray, z_previous: np.ndarray, overlap_with_partner: float,
    cap: float = DEFAULT_OVERLAP_CAP,
) -> tuple[float, np.ndarray]:
    """Blend weight and expected SVO distribution for the stability loss.

    alpha = min(o, clip(o, 0, cap)) / cap rises with partner overlap and
    saturates at 1; the expected distribution alpha*z_prev + (1-alpha)*z_cur
    pins the SVO under heavy conflict and frees it as conflict fades.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    o = float(overlap_with_partner)
    clipped = min(max(o, 0.0), cap)
    alpha = min(o, clipped) / cap
    z_exp = alpha * np.asarray(z_previous, dtype=np.float64) + (1.0 - alpha) * np.asarray(z_current, dtype=np.float64)
    return alpha, z_exp
