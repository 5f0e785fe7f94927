"""Discrete-time multi-agent gridworld with simultaneous moves.

All agents commit intents, the resolver sanitizes them, and the environment
applies the joint action atomically. The environment never repairs unsafe
input: a joint action that breaks the no-shared-vertex or no-swap conditions
raises, because the resolver owns conflict handling (including the collision
penalty routing). Per-step external reward composes the movement cost, the
resolver-assigned collision penalty, and the blocking penalty.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mapgen import Scenario
from .pathing import ACTION_DELTAS, IDLE, UNREACHABLE, distance_field
from .social import DEFAULT_OVERLAP_CAP, DEFAULT_OVERLAP_DECAY, DEFAULT_SVO_BINS, DEFAULT_SVO_IMPORTANCE

MOVE_COST = -0.3
IDLE_OFF_GOAL_COST = -0.3
IDLE_ON_GOAL_REWARD = 0.0
BLOCK_PENALTY = -1.0


class ConditionViolation(RuntimeError):
    """Joint action reached the environment unsanitized."""


@dataclass
class EnvConfig:
    max_episode_length: int = 256
    fov: int = 9
    fov_heuristic: int = 5
    svo_bins: int = DEFAULT_SVO_BINS
    overlap_decay: float = DEFAULT_OVERLAP_DECAY
    svo_importance: float = DEFAULT_SVO_IMPORTANCE
    overlap_cap: float = DEFAULT_OVERLAP_CAP
    block_threshold: int = 10
    # Blocking detection runs a masked BFS per agent pair; batch safety fuzzes
    # that never read rewards can turn it off.
    blocking_rewards: bool = True


@dataclass
class StepOutcome:
    actions: np.ndarray
    rewards: np.ndarray          # external reward per agent, fully composed
    base_rewards: np.ndarray     # movement / idle component only
    blocked_counts: np.ndarray   # agents blocked by each agent this step
    on_goal: np.ndarray
    t: int
    all_done: bool


def obs_length(fov: int, svo_bins: int) -> int:
    """Observation layout: 3 FoV planes, 4 goal-vector slots, own previous and
    partner SVO encodings, and the clamped partner offset."""
    return 3 * fov * fov + 4 + 2 * svo_bins + 2


class Gridworld:
    """One episode's mutable state over a shared read-only map."""

    def __init__(self, scenario: Scenario, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        self.scenario = scenario
        self.grid = scenario.grid
        self.n = scenario.n_agents
        self.goals = list(scenario.goals)
        self.reset()

    def reset(self) -> None:
        self.positions = list(self.scenario.starts)
        self.t = 0
        self.terminated = False
        self.success = False
        k = self.config.svo_bins
        self.partners = np.arange(self.n, dtype=np.int64)
        self.svo_current = np.full((self.n, k), 1.0 / k)
        self.svo_prev = np.full((self.n, k), 1.0 / k)

    def on_goal(self) -> np.ndarray:
        return np.array([self.positions[i] == self.goals[i] for i in range(self.n)])

    def arrival_rate(self) -> float:
        return float(self.on_goal().sum()) / self.n

    def goal_field(self, i: int) -> np.ndarray:
        return distance_field(self.grid, self.goals[i])

    def step(self, joint_action: np.ndarray, collision_penalties: np.ndarray | None = None) -> StepOutcome:
        if self.terminated:
            raise RuntimeError("episode already terminated")
        joint_action = np.asarray(joint_action, dtype=np.int64)
        if joint_action.shape != (self.n,):
            raise ValueError("need one action per agent")
        new_positions = []
        for i in range(self.n):
            dr, dc = ACTION_DELTAS[int(joint_action[i])]
            r, c = self.positions[i]
            tgt = (r + dr, c + dc)
            if not self.grid.is_free(*tgt):
                raise ConditionViolation(f"agent {i} action {joint_action[i]} hits a static obstacle")
            new_positions.append(tgt)
        if len(set(new_positions)) != self.n:
            raise ConditionViolation("two agents share a vertex after the joint move")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if new_positions[i] == self.positions[j] and new_positions[j] == self.positions[i]:
                    raise ConditionViolation(f"agents {i} and {j} swap vertices")

        self.positions = new_positions
        self.t += 1

        base = np.empty(self.n)
        on_goal = self.on_goal()
        for i in range(self.n):
            if joint_action[i] == IDLE:
                base[i] = IDLE_ON_GOAL_REWARD if on_goal[i] else IDLE_OFF_GOAL_COST
            else:
                base[i] = MOVE_COST
        rewards = base.copy()
        if collision_penalties is not None:
            rewards += np.asarray(collision_penalties, dtype=np.float64)
        blocked = np.zeros(self.n, dtype=np.int64)
        if self.config.blocking_rewards:
            for i in range(self.n):
                blocked[i] = detect_blocking(self, i)
            rewards += BLOCK_PENALTY * blocked

        if bool(on_goal.all()):
            self.terminated = True
            self.success = True
        elif self.t >= self.config.max_episode_length:
            self.terminated = True
        return StepOutcome(joint_action, rewards, base, blocked, on_goal, self.t, self.terminated)


def _blocks_agent(grid, blocker_cell, start, goal, threshold) -> bool:
    """Does treating blocker_cell as an obstacle choke start's route to goal?

    Cheap exact prefilter first: removing a cell can only lengthen the
    distance if the cell lies on at least one shortest path, i.e.
    d(start, cell) + d(cell, goal) equals the unobstructed distance. Both
    fields are cached on the map, so most pairs never run the masked BFS.
    """
    if start == goal:
        return False
    goal_field = distance_field(grid, goal)
    d0 = int(goal_field[start])
    if d0 == UNREACHABLE:
        return False
    via = int(goal_field[blocker_cell])
    if via == UNREACHABLE:
        return False
    start_field = distance_field(grid, start)
    if int(start_field[blocker_cell]) + via != d0:
        return False
    limit = d0 + threshold
    masked = _masked_distance(grid, start, goal, blocker_cell, limit)
    return masked == UNREACHABLE or masked > limit


def detect_blocking(env: Gridworld, agent: int) -> int:
    """Count agents whose route to goal the given agent currently chokes.

    Agent j counts as blocked when treating agent's cell as an obstacle makes
    j's goal unreachable or lengthens its shortest path by more than the
    configured threshold relative to the unobstructed distance field.
    """
    threshold = env.config.block_threshold
    cell = env.positions[agent]
    count = 0
    for j in range(env.n):
        if j != agent and _blocks_agent(env.grid, cell, env.positions[j],
                                        env.goals[j], threshold):
            count += 1
    return count


def _masked_distance(grid, start, goal, masked_cell, limit) -> int:
    """BFS distance start->goal with one extra obstacle; UNREACHABLE beyond limit."""
    if start == masked_cell:
        return UNREACHABLE
    if start == goal:
        return 0
    h, w = grid.height, grid.width
    obstacles = grid.obstacles
    seen = np.zeros((h, w), dtype=bool)
    seen[start] = True
    seen[masked_cell] = True
    queue = deque([(start, 0)])
    while queue:
        (r, c), d = queue.popleft()
        if d >= limit:
            return UNREACHABLE
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            nr, nc = nxt
            if 0 <= nr < h and 0 <= nc < w and not obstacles[nr, nc] and not seen[nr, nc]:
                if nxt == goal:
                    return d + 1
                seen[nr, nc] = True
                queue.append((nxt, d + 1))
    return UNREACHABLE


def observe(env: Gridworld, agent: int) -> np.ndarray:
    """Fixed-length observation vector for one agent.

    FoV-centered occupancy, other-agent, and goal-descent planes (the descent
    plane marks cells inside the heuristic window that are strictly closer to
    the goal than the agent), a 4-slot goal vector (unit direction, clamped
    Euclidean magnitude, clamped BFS distance), the agent's previous SVO
    encoding, its partner's current SVO encoding, and the partner offset
    clamped to the FoV. Out-of-map cells read as obstacles.
    """
    cfg = env.config
    fov = cfg.fov
    half = fov // 2
    r0, c0 = env.positions[agent]
    occupancy = np.zeros((fov, fov))
    others = np.zeros((fov, fov))
    heuristic = np.zeros((fov, fov))

    occupied = {pos: i for i, pos in enumerate(env.positions)}
    dist = env.goal_field(agent)
    d0 = int(dist[r0, c0])
    h_half = cfg.fov_heuristic // 2
    for dr in range(-half, half + 1):
        for dc in range(-half, half + 1):
            r, c = r0 + dr, c0 + dc
            fr, fc = dr + half, dc + half
            if not env.grid.is_free(r, c):
                occupancy[fr, fc] = 1.0
                continue
            j = occupied.get((r, c))
            if j is not None and j != agent:
                others[fr, fc] = 1.0
            if abs(dr) <= h_half and abs(dc) <= h_half and d0 != UNREACHABLE:
                d = int(dist[r, c])
                if d != UNREACHABLE and d < d0:
                    heuristic[fr, fc] = 1.0

    gr, gc = env.goals[agent]
    dr, dc = gr - r0, gc - c0
    mag = float(np.hypot(dr, dc))
    clamp = float(max(env.grid.height, env.grid.width))
    if mag > 0:
        goal_vec = [dr / mag, dc / mag, min(mag, clamp) / clamp,
                    (min(d0, clamp) / clamp) if d0 != UNREACHABLE else 1.0]
    else:
        goal_vec = [0.0, 0.0, 0.0, 0.0]

    partner = int(env.partners[agent])
    pr, pc = env.positions[partner]
    off = [max(-half, min(half, pr - r0)) / max(1, half),
           max(-half, min(half, pc - c0)) / max(1, half)]
    return np.concatenate([
        occupancy.ravel(), others.ravel(), heuristic.ravel(),
        np.array(goal_vec), env.svo_prev[agent], env.svo_current[partner], np.array(off),
    ])
