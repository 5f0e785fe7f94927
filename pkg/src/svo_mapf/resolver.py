"""SVO-ordered conflict resolution for simultaneous joint actions.

Intended actions are screened through a FIFO consideration chain seeded with
agents sorted most-prosocial-first. Moves into obstacles or off the map are
invalid and replaced by idling with a collision penalty; moves that would
produce a vertex or edge conflict are restricted and replaced by idling, with
the penalty routed to the strictly more prosocial member of each conflicting
pair. Idling an agent can break previously valid plans, so affected agents
re-enter the chain; an idled agent is never un-idled, which bounds the chain.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .mapgen import GridMap
from .pathing import ACTION_DELTAS, IDLE, greedy_step

NORMAL = "normal"
INVALIDATED = "invalidated"
RESTRICTED_IDLED = "restricted-idled"

COLLISION_PENALTY = -2.0


class ResolverError(RuntimeError):
    """Internal contract violation (termination bound exceeded)."""


@dataclass
class ResolutionOutcome:
    """Conflict-free joint action with penalty routing and audit trail."""

    actions: np.ndarray      # adjusted action per agent
    penalties: np.ndarray    # COLLISION_PENALTY where assessed, else 0 (pass-through)
    annotations: list[str]   # NORMAL / INVALIDATED / RESTRICTED_IDLED per agent
    iterations: int          # chain pops consumed


def _target(positions, actions, i) -> tuple[int, int]:
    dr, dc = ACTION_DELTAS[int(actions[i])]
    r, c = positions[i]
    return r + dr, c + dc


def classify(
    grid: GridMap,
    positions: list[tuple[int, int]],
    actions: np.ndarray,
    agent: int,
) -> tuple[str, set[int]]:
    """Classify one agent's action under the current working joint intent.

    Returns ('invalid', {}), ('restricted', conflicting_agents), or
    ('valid', {}). Invalid means a static collision (obstacle or boundary);
    restricted means a vertex conflict (shared target cell) or edge conflict
    (position swap) with at least one other agent's current intent.
    """
    tgt = _target(positions, actions, agent)
    if not grid.is_free(*tgt):
        return "invalid", set()
    conflicts = set()
    for j in range(len(positions)):
        if j == agent:
            continue
        tgt_j = _target(positions, actions, j)
        if tgt_j == tgt:
            conflicts.add(j)
        elif tgt == positions[j] and tgt_j == positions[agent]:
            conflicts.add(j)
    if conflicts:
        return "restricted", conflicts
    return "valid", set()


def resolve(
    grid: GridMap,
    positions: list[tuple[int, int]],
    intents: np.ndarray,
    svo_degrees: np.ndarray,
) -> ResolutionOutcome:
    """Produce a conflict-free joint action from intended actions and SVOs."""
    n = len(positions)
    intents = np.asarray(intents, dtype=np.int64)
    svo = np.asarray(svo_degrees, dtype=np.float64)
    if intents.shape != (n,) or svo.shape != (n,):
        raise ValueError("intents and svo_degrees must both have one entry per agent")

    actions = intents.copy()
    penalties = np.zeros(n, dtype=np.float64)
    annotations = [NORMAL] * n
    idled = [False] * n

    order = sorted(range(n), key=lambda i: (-svo[i], i))
    chain = deque(order)
    queued = set(order)
    max_pops = 4 * n
    iterations = 0

    def cascade(i: int) -> None:
        # Agent i now permanently occupies its cell; everyone aiming at that
        # cell has a broken plan and must be reconsidered.
        for j in range(n):
            if j == i or idled[j] or j in queued:
                continue
            if _target(positions, actions, j) == positions[i]:
                chain.append(j)
                queued.add(j)

    while chain:
        i = chain.popleft()
        queued.discard(i)
        iterations += 1
        if iterations > max_pops:
            raise ResolverError(f"chain exceeded {max_pops} pops for {n} agents")
        if idled[i]:
            continue
        kind, conflicts = classify(grid, positions, actions, i)
        if kind == "invalid":
            actions[i] = IDLE
            idled[i] = True
            annotations[i] = INVALIDATED
            penalties[i] = COLLISION_PENALTY
            cascade(i)
        elif kind == "restricted":
            actions[i] = IDLE
            idled[i] = True
            annotations[i] = RESTRICTED_IDLED
            for j in sorted(conflicts):
                if svo[i] > svo[j]:
                    penalties[i] = COLLISION_PENALTY
                elif svo[j] > svo[i]:
                    penalties[j] = COLLISION_PENALTY
            cascade(i)
        # valid: intended action stands, reward passes through

    return ResolutionOutcome(actions, penalties, annotations, iterations)


def greedy_intents(
    grid: GridMap,
    positions: list[tuple[int, int]],
    goals: list[tuple[int, int]],
) -> np.ndarray:
    """Baseline intent generator: first distance-decreasing move, idle on goal."""
    return np.array(
        [greedy_step(grid, pos, goal) for pos, goal in zip(positions, goals)],
        dtype=np.int64,
    )
