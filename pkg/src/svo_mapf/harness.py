"""Benchmark orchestration, scripted case-study policies, and statistics.

Episodes are driven through the shared pipeline (overlap, partner update,
policy intents, tie-breaking resolution, environment step). Scripted policies
exercise the symmetric corridor dilemma without any training: the homogeneous
mode keeps every agent selfishly greedy, while the heterogeneous mode makes
the lower-indexed member of each conflicted partner pair fully prosocial, and
that agent withdraws to the nearest cell off its partner's planned path until
the conflict clears.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import social
from .gridworld import EnvConfig, Gridworld
from .mapgen import GridMap, Scenario, gen_corridor, gen_maze, gen_random, gen_room
from .pathing import ACTION_DELTAS, IDLE, MOVE_ORDER, UNREACHABLE, distance_field
from .resolver import NORMAL, greedy_intents, resolve
from .rng import SplitMix64, derive_seed


@dataclass
class EpisodeMetrics:
    success: bool
    episode_length: int
    arrival_rate: float
    collisions_prevented: int
    goals_reached: int
    svo_trace: list[list[float]] = field(default_factory=list)


@dataclass
class EpisodeResult:
    metrics: EpisodeMetrics
    paths: list[list[tuple[int, int]]]
    total_external_reward: float


class GreedyPolicy:
    """Homogeneous-selfish baseline: pure greedy descent, all SVOs at zero."""

    needs_social = False

    def step(self, env: Gridworld, overlap):
        intents = greedy_intents(env.grid, env.positions, env.goals)
        return intents, np.zeros(env.n)


def _occupancy_aware_greedy(env: Gridworld, agent: int) -> int:
    """First distance-decreasing action whose target is not a parked agent.

    Falls back to the plain greedy step when every descent cell is occupied by
    an agent resting on its goal, and idles on goal or when stuck.
    """
    pos, goal = env.positions[agent], env.goals[agent]
    if pos == goal:
        return IDLE
    dist = distance_field(env.grid, goal)
    d = dist[pos]
    if d == UNREACHABLE:
        return IDLE
    parked = {env.positions[j] for j in range(env.n)
              if j != agent and env.positions[j] == env.goals[j]}
    fallback = IDLE
    for action in MOVE_ORDER:
        dr, dc = ACTION_DELTAS[action]
        nxt = (pos[0] + dr, pos[1] + dc)
        if env.grid.in_bounds(*nxt) and dist[nxt] == d - 1:
            if nxt not in parked:
                return action
            if fallback == IDLE:
                fallback = action
    return fallback


class HeterogeneousScriptedPolicy:
    """Within each conflicted fixed-partner pair, the lower-indexed agent takes
    the prosocial role (45 degrees) and withdraws; the other stays selfish.

    The withdrawing agent idles once it stands off its partner's planned path,
    otherwise it steps toward the nearest such refuge cell. The conflict is
    considered cleared when the pairwise overlap hits zero or the partner is
    resting on its goal, after which the agent resumes (occupancy-aware)
    greedy descent.
    """

    needs_social = True

    def step(self, env: Gridworld, overlap: social.OverlapResult):
        n = env.n
        svo = np.zeros(n)
        intents = np.empty(n, dtype=np.int64)
        for i in range(n):
            p = int(env.partners[i])
            in_conflict = (
                p != i
                and overlap.matrix[i, p] > 0.0
                and env.positions[p] != env.goals[p]
            )
            if in_conflict and i < p:
                svo[i] = 45.0
                intents[i] = self._retreat_step(env, i, overlap.flows[p])
            else:
                intents[i] = _occupancy_aware_greedy(env, i)
        return intents, svo

    @staticmethod
    def _retreat_step(env: Gridworld, agent: int, partner_flow) -> int:
        path_cells = set(partner_flow.vertices)
        pos = env.positions[agent]
        if pos not in path_cells:
            return IDLE
        refuge = _nearest_refuge(env.grid, pos, path_cells)
        if refuge is None:
            return IDLE
        dist = distance_field(env.grid, refuge)
        d = dist[pos]
        for action in MOVE_ORDER:
            dr, dc = ACTION_DELTAS[action]
            nxt = (pos[0] + dr, pos[1] + dc)
            if env.grid.in_bounds(*nxt) and dist[nxt] == d - 1:
                return action
        return IDLE


def _nearest_refuge(grid: GridMap, start, path_cells) -> tuple[int, int] | None:
    """Closest free cell off the given path; ties by (distance, row, col)."""
    seen = {start}
    frontier = deque([(start, 0)])
    best = None
    best_key = None
    best_dist = None
    while frontier:
        (r, c), d = frontier.popleft()
        if best_dist is not None and d > best_dist:
            break
        if (r, c) not in path_cells:
            key = (d, r, c)
            if best_key is None or key < best_key:
                best, best_key, best_dist = (r, c), key, d
            continue
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if grid.is_free(*nxt) and nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, d + 1))
    return best


class TrainedPolicyAdapter:
    """Drives episodes with a trained checkpoint (deterministic argmax)."""

    needs_social = True

    def __init__(self, trained):
        self.trained = trained

    def step(self, env: Gridworld, overlap):
        return self.trained.step(env, overlap)

    def env_config(self, base: EnvConfig) -> EnvConfig:
        # observation geometry must match the checkpoint; episode limits and
        # reward toggles stay with the caller
        cfg = replace(self.trained.env_cfg)
        cfg.max_episode_length = base.max_episode_length
        cfg.blocking_rewards = base.blocking_rewards
        return cfg


def effective_env_cfg(policy, env_cfg: EnvConfig | None) -> EnvConfig:
    env_cfg = env_cfg or EnvConfig()
    if hasattr(policy, "env_config"):
        return policy.env_config(env_cfg)
    return env_cfg


def make_policy(name: str, env_cfg: EnvConfig):
    if name in ("greedy", "homo", "homogeneous", "scripted-homo"):
        return GreedyPolicy()
    if name in ("hetero", "heterogeneous", "scripted", "scripted-hetero"):
        return HeterogeneousScriptedPolicy()
    if name.startswith("trained:"):
        from .learner import TrainedPolicy

        return TrainedPolicyAdapter(TrainedPolicy.from_checkpoint(name.split(":", 1)[1]))
    raise ValueError(f"unknown policy {name!r}")


def scripted_policy_step(env: Gridworld, mode: str, overlap=None):
    """One scripted decision: intended actions and SVO angles for all agents."""
    policy = make_policy(mode, env.config)
    if policy.needs_social and overlap is None:
        overlap = social.compute_overlap(env.grid, env.positions, env.goals,
                                         env.config.overlap_decay)
        env.partners = overlap.partners.copy()
    return policy.step(env, overlap)


def run_episode(scenario: Scenario, policy, env_cfg: EnvConfig | None = None,
                trace_writer=None, trace_social: bool = False) -> EpisodeResult:
    """Drive one episode to termination through the resolver pipeline.

    trace_social additionally dumps the overlap matrix and partner arrays into
    every trace record (n^2 per step; meant for small-team debugging).
    """
    env = Gridworld(scenario, effective_env_cfg(policy, env_cfg))
    paths = [[pos] for pos in env.positions]
    collisions_prevented = 0
    svo_trace: list[list[float]] = []
    total_external = 0.0
    fixed = np.arange(env.n, dtype=np.int64)
    while not env.terminated:
        overlap = None
        if policy.needs_social or trace_social:
            overlap = social.compute_overlap(env.grid, env.positions, env.goals,
                                             env.config.overlap_decay)
            if env.t == 0:
                fixed = overlap.partners.copy()
            else:
                fixed = social.update_fixed_partners(overlap.partners, overlap.matrix, fixed)
            env.partners = fixed
        intents, svo_deg = policy.step(env, overlap)
        res = resolve(env.grid, env.positions, intents, svo_deg)
        out = env.step(res.actions, res.penalties)
        collisions_prevented += sum(1 for a in res.annotations if a != NORMAL)
        svo_trace.append([float(z) for z in svo_deg])
        total_external += float(out.rewards.sum())
        for i in range(env.n):
            paths[i].append(env.positions[i])
        if trace_writer is not None:
            record = {
                "t": env.t,
                "positions": [list(p) for p in env.positions],
                "actions": [int(a) for a in res.actions],
                "svos": [float(z) for z in svo_deg],
                "rewards": [round(float(r), 10) for r in out.rewards],
            }
            if trace_social and overlap is not None:
                record["overlap"] = [[round(float(x), 10) for x in row]
                                     for row in overlap.matrix]
                record["temporary_partners"] = [int(p) for p in overlap.partners]
                record["fixed_partners"] = [int(p) for p in fixed]
            trace_writer(record)
    on_goal = env.on_goal()
    metrics = EpisodeMetrics(
        success=env.success,
        episode_length=env.t,
        arrival_rate=float(on_goal.sum()) / env.n,
        collisions_prevented=collisions_prevented,
        goals_reached=int(on_goal.sum()),
        svo_trace=svo_trace,
    )
    return EpisodeResult(metrics, paths, total_external)


@dataclass
class BenchmarkReport:
    family: str
    size: int
    density: float
    n_agents: int
    instances: int
    seed: int
    policy: str
    success_rate: float
    mean_episode_length: float
    mean_arrival_rate: float
    time_general: float
    time_success: float
    per_instance: list[dict]

    def metric_column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.per_instance], dtype=np.float64)

    def to_csv(self) -> str:
        columns = ["instance", "success", "episode_length", "arrival_rate",
                   "goals_reached", "collisions_prevented"]
        lines = [",".join(columns)]
        for row in self.per_instance:
            lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                                  for c in columns))
        return "\n".join(lines) + "\n"

    def to_json(self, include_timings: bool = False) -> str:
        # Wall-clock fields are excluded from the canonical report so that
        # identical (args, seed) reruns serialize byte-identically.
        obj = {
            "family": self.family, "size": self.size, "density": self.density,
            "n_agents": self.n_agents, "instances": self.instances,
            "seed": self.seed, "policy": self.policy,
            "success_rate": self.success_rate,
            "mean_episode_length": self.mean_episode_length,
            "mean_arrival_rate": self.mean_arrival_rate,
            "per_instance": [
                {k: v for k, v in row.items() if include_timings or k != "wall_time"}
                for row in self.per_instance
            ],
        }
        if include_timings:
            obj["time_general"] = self.time_general
            obj["time_success"] = self.time_success
        return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def _make_scenario(family: str, size: int, density: float, n_agents: int, seed: int) -> Scenario:
    if family == "random":
        return gen_random(size, size, density, n_agents, seed)
    if family == "room":
        return gen_room(size, size, n_agents, seed)
    if family == "maze":
        return gen_maze(size, size, n_agents, seed)
    raise ValueError(f"unknown map family {family!r}")


def run_batch(family: str, size: int, density: float, n_agents: int, instances: int,
              policy_name: str, seed: int, env_cfg: EnvConfig | None = None) -> BenchmarkReport:
    """Generate and run a batch of instances; deterministic given the seed.

    Per-instance seeds derive from (seed, index), so results are independent
    of any execution order. Reports carry no reward fields, so the default
    environment skips the blocking-reward computation; pass an env_cfg to
    override.
    """
    env_cfg = env_cfg or EnvConfig(blocking_rewards=False)
    policy = make_policy(policy_name, env_cfg)
    per_instance = []
    t_all = 0.0
    t_success = 0.0
    for i in range(instances):
        inst_seed = derive_seed(seed, i)
        scenario = _make_scenario(family, size, density, n_agents, inst_seed)
        t0 = time.perf_counter()
        result = run_episode(scenario, policy, env_cfg)
        wall = time.perf_counter() - t0
        t_all += wall
        if result.metrics.success:
            t_success += wall
        per_instance.append({
            "instance": i,
            "success": int(result.metrics.success),
            "episode_length": result.metrics.episode_length,
            "arrival_rate": result.metrics.arrival_rate,
            "goals_reached": result.metrics.goals_reached,
            "collisions_prevented": result.metrics.collisions_prevented,
            "wall_time": wall,
        })
    successes = sum(row["success"] for row in per_instance)
    return BenchmarkReport(
        family=family, size=size, density=density, n_agents=n_agents,
        instances=instances, seed=seed, policy=policy_name,
        success_rate=successes / instances,
        mean_episode_length=float(np.mean([r["episode_length"] for r in per_instance])),
        mean_arrival_rate=float(np.mean([r["arrival_rate"] for r in per_instance])),
        time_general=t_all / instances,
        time_success=t_success / successes if successes else 0.0,
        per_instance=per_instance,
    )


class DegenerateInputError(ValueError):
    """Paired samples whose differences have zero variance."""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def paired_t_test(samples_a, samples_b) -> tuple[float, float]:
    """Classical paired t statistic and two-sided p-value.

    p = I_{df/(df+t^2)}(df/2, 1/2) via the regularized incomplete beta with
    df = n - 1.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need two equal-length 1-D sample arrays")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two paired samples")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateInputError("paired differences have zero variance")
    t = float(d.mean()) / (sd / math.sqrt(n))
    df = n - 1
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return t, p


@dataclass
class CaseStudyResult:
    mean_goals: float
    episodes: int
    per_episode_goals: list[int]
    per_kind_goals: dict

    def kind_mean(self, kind: str) -> float:
        counts = self.per_kind_goals.get(kind, [])
        return float(np.mean(counts)) if counts else float("nan")


def corridor_case_study(p_recess: float, p_ishape: float, episodes: int, policy_name: str,
                        seed: int, env_cfg: EnvConfig | None = None,
                        corridor_lengths: tuple[int, int] = (5, 12)) -> CaseStudyResult:
    """Mean goals reached over a mixture of recess and I-shaped instances.

    The map kind is sampled per episode with the given probabilities and the
    corridor length varies uniformly over the configured range.
    """
    if abs(p_recess + p_ishape - 1.0) > 1e-9:
        raise ValueError("kind probabilities must sum to 1")
    env_cfg = env_cfg or EnvConfig(blocking_rewards=False)  # goals-only metric
    policy = make_policy(policy_name, env_cfg)
    per_episode = []
    per_kind: dict = {"recess": [], "i_shape": []}
    for ep in range(episodes):
        rng = SplitMix64(derive_seed(seed, ep))
        kind = "recess" if rng.random() < p_recess else "i_shape"
        length = rng.randint(*corridor_lengths)
        scenario = gen_corridor(kind, length, rng.next_u64())
        result = run_episode(scenario, policy, env_cfg)
        per_episode.append(result.metrics.goals_reached)
        per_kind[kind].append(result.metrics.goals_reached)
    return CaseStudyResult(
        mean_goals=float(np.mean(per_episode)),
        episodes=episodes,
        per_episode_goals=per_episode,
        per_kind_goals=per_kind,
    )
