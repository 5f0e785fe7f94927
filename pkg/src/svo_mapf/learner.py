"""Desk-scale trainer for the two-level policy (SVO head + action head).

A single two-layer tanh network carries output blocks for action logits,
SVO logits, two value estimates (one per reward stream), and a blocking
logit. Both policy heads train with clipped surrogates whose advantages are
cross-utilized: the action ratio pairs with the SVO-stream advantage and the
SVO ratio pairs with the action-stream advantage. Supervised terms keep the
SVO stable under partner overlap, push probability mass off statically
invalid moves, and teach the blocking head. The forward and backward passes
are hand-written numpy so gradients can be checked against central finite
differences coordinate by coordinate.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import social
from .gridworld import EnvConfig, Gridworld, observe, obs_length
from .mapgen import gen_corridor
from .pathing import ACTION_DELTAS, N_ACTIONS
from .resolver import resolve
from .rng import SplitMix64, derive_seed

_EPS = 1e-12

PARAM_KEYS = ("w_in", "b_in", "w_act", "b_act", "w_svo", "b_svo",
              "w_va", "b_va", "w_vs", "b_vs", "w_blk", "b_blk")


class TrainingDiverged(RuntimeError):
    """Loss or gradients went non-finite; the last good checkpoint survives."""


@dataclass
class SmpConfig:
    """Optimization hyperparameters (defaults follow the training recipe)."""

    gamma: float = 0.95
    lam: float = 0.95
    clip_eps: float = 0.2
    value_coef: float = 0.08
    policy_coef: float = 10.0
    entropy_coef: float = 0.01
    valid_coef: float = 0.5
    blocking_coef: float = 0.5
    stability_coef: float = 0.5
    learning_rate: float = 1e-5
    momentum: float = 0.9
    grad_clip: float = 10.0
    epochs: int = 10
    minibatch: int = 16
    hidden: int = 64
    normalize_advantages: bool = True

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ValueError("gamma in (0,1], lam in [0,1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")


def init_params(obs_dim: int, hidden: int, svo_bins: int, seed: int, scale: float = 0.1) -> dict:
    """Small random parameters; biases start at zero."""
    rng = SplitMix64(seed)

    def mat(rows, cols):
        return np.array([[rng.normal() for _ in range(cols)] for _ in range(rows)]) * scale / math.sqrt(rows)

    return {
        "w_in": mat(obs_dim, hidden),
        "b_in": np.zeros(hidden),
        "w_act": mat(hidden, N_ACTIONS),
        "b_act": np.zeros(N_ACTIONS),
        "w_svo": mat(hidden, svo_bins),
        "b_svo": np.zeros(svo_bins),
        "w_va": mat(hidden, 1)[:, 0],
        "b_va": np.zeros(1),
        "w_vs": mat(hidden, 1)[:, 0],
        "b_vs": np.zeros(1),
        "w_blk": mat(hidden, 1)[:, 0],
        "b_blk": np.zeros(1),
    }


def params_to_vector(params: dict) -> np.ndarray:
    return np.concatenate([np.asarray(params[k]).ravel() for k in PARAM_KEYS])


def vector_to_params(vec: np.ndarray, template: dict) -> dict:
    out = {}
    offset = 0
    for k in PARAM_KEYS:
        shape = np.asarray(template[k]).shape
        size = int(np.prod(shape)) if shape else 1
        out[k] = vec[offset:offset + size].reshape(shape).copy()
        offset += size
    if offset != vec.size:
        raise ValueError("parameter vector size mismatch")
    return out


def forward(params: dict, obs: np.ndarray) -> dict:
    """Shared trunk plus the four output blocks; obs is (B, D)."""
    obs = np.atleast_2d(obs)
    hidden = np.tanh(obs @ params["w_in"] + params["b_in"])
    return {
        "obs": obs,
        "hidden": hidden,
        "logits_act": hidden @ params["w_act"] + params["b_act"],
        "logits_svo": hidden @ params["w_svo"] + params["b_svo"],
        "value_act": hidden @ params["w_va"] + params["b_va"][0],
        "value_svo": hidden @ params["w_vs"] + params["b_vs"][0],
        "logit_blk": hidden @ params["w_blk"] + params["b_blk"][0],
    }


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def gae_advantages(rewards, values, gamma: float, lam: float, bootstrap: float = 0.0) -> np.ndarray:
    """Generalized advantage estimates over one contiguous segment.

    delta_t = r_t + gamma * V_{t+1} - V_t with V_T = bootstrap;
    A_t = sum_k (gamma * lam)^k delta_{t+k}.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have equal length")
    adv = np.zeros_like(rewards)
    running = 0.0
    next_value = bootstrap
    for t in range(len(rewards) - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv


@dataclass
class RolloutBatch:
    """Flattened per-(step, agent) training samples."""

    obs: np.ndarray
    actions: np.ndarray
    svo_bins: np.ndarray
    logp_act_old: np.ndarray
    logp_svo_old: np.ndarray
    adv_action: np.ndarray
    adv_svo: np.ndarray
    ret_action: np.ndarray
    ret_svo: np.ndarray
    valid_mask: np.ndarray
    blocking_label: np.ndarray
    z_exp: np.ndarray
    alpha: np.ndarray
    reward_action: np.ndarray
    reward_svo: np.ndarray
    reward_external: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def subset(self, idx) -> "RolloutBatch":
        return RolloutBatch(**{k: getattr(self, k)[idx] for k in self.__dataclass_fields__})


def smp3o_loss(params: dict, batch: RolloutBatch, cfg: SmpConfig) -> tuple[float, dict]:
    loss, _, diag = smp3o_loss_and_grad(params, batch, cfg, want_grad=False)
    return loss, diag


def smp3o_loss_and_grad(params: dict, batch: RolloutBatch, cfg: SmpConfig,
                        want_grad: bool = True) -> tuple[float, dict | None, dict]:
    """Total objective, analytic parameter gradients, and per-term diagnostics.

    total = -policy * (L_act + L_svo)                 (clipped surrogates,
                                                       cross-utilized advantages)
            + value * (mse_va + mse_vs)
            - entropy * (H_act + H_svo)
            + stability * bce(svo_dist, z_exp)
            + valid * (-log mass on valid actions)
            + blocking * bce(sigmoid(blk), label)
    """
    out = forward(params, batch.obs)
    B = len(batch)
    rows = np.arange(B)

    lp_act = log_softmax(out["logits_act"])
    lp_svo = log_softmax(out["logits_svo"])
    p_act = np.exp(lp_act)
    p_svo = np.exp(lp_svo)

    # Clipped surrogates. The action ratio is weighted by the SVO-stream
    # advantage and vice versa.
    ratio_act = np.exp(lp_act[rows, batch.actions] - batch.logp_act_old)
    ratio_svo = np.exp(lp_svo[rows, batch.svo_bins] - batch.logp_svo_old)
    lo, hi = 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps
    surr_act_raw = ratio_act * batch.adv_svo
    surr_act_clip = np.clip(ratio_act, lo, hi) * batch.adv_svo
    surr_act = np.minimum(surr_act_raw, surr_act_clip)
    surr_svo_raw = ratio_svo * batch.adv_action
    surr_svo_clip = np.clip(ratio_svo, lo, hi) * batch.adv_action
    surr_svo = np.minimum(surr_svo_raw, surr_svo_clip)
    loss_pi_act = surr_act.mean()
    loss_pi_svo = surr_svo.mean()

    err_va = out["value_act"] - batch.ret_action
    err_vs = out["value_svo"] - batch.ret_svo
    mse_va = float((err_va ** 2).mean())
    mse_vs = float((err_vs ** 2).mean())

    ent_act = float((-(p_act * lp_act).sum(axis=1)).mean())
    ent_svo = float((-(p_svo * lp_svo).sum(axis=1)).mean())

    # SVO stability: elementwise binary cross entropy against the blend target.
    t = batch.z_exp
    stab_terms = -(t * np.log(p_svo + _EPS) + (1.0 - t) * np.log(1.0 - p_svo + _EPS))
    loss_stab = float(stab_terms.sum(axis=1).mean())

    valid_mass = (p_act * batch.valid_mask).sum(axis=1)
    loss_valid = float((-np.log(valid_mass + _EPS)).mean())

    blk_prob = 1.0 / (1.0 + np.exp(-out["logit_blk"]))
    y = batch.blocking_label
    loss_blk = float(-(y * np.log(blk_prob + _EPS) + (1.0 - y) * np.log(1.0 - blk_prob + _EPS)).mean())

    total = (
        -cfg.policy_coef * (loss_pi_act + loss_pi_svo)
        + cfg.value_coef * (mse_va + mse_vs)
        - cfg.entropy_coef * (ent_act + ent_svo)
        + cfg.stability_coef * loss_stab
        + cfg.valid_coef * loss_valid
        + cfg.blocking_coef * loss_blk
    )
    diagnostics = {
        "loss_pi_act": float(loss_pi_act), "loss_pi_svo": float(loss_pi_svo),
        "mse_value_act": mse_va, "mse_value_svo": mse_vs,
        "entropy_act": ent_act, "entropy_svo": ent_svo,
        "loss_stability": loss_stab, "loss_valid": loss_valid,
        "loss_blocking": loss_blk, "total": float(total),
        "ratio_act_mean": float(ratio_act.mean()), "ratio_svo_mean": float(ratio_svo.mean()),
    }
    if not np.isfinite(total):
        raise TrainingDiverged(f"non-finite loss; diagnostics: {diagnostics}")
    if not want_grad:
        return float(total), None, diagnostics

    # ---- backward ----
    d_logits_act = np.zeros_like(p_act)
    d_logits_svo = np.zeros_like(p_svo)

    # policy surrogates: d surr / d logp(chosen) is ratio * adv on the active
    # branch; the clipped branch only passes gradient while inside the window.
    act_unclipped = surr_act_raw <= surr_act_clip
    act_pass = np.where(act_unclipped, 1.0, ((ratio_act > lo) & (ratio_act < hi)).astype(float))
    d_lp_chosen_act = -cfg.policy_coef / B * act_pass * ratio_act * batch.adv_svo
    svo_unclipped = surr_svo_raw <= surr_svo_clip
    svo_pass = np.where(svo_unclipped, 1.0, ((ratio_svo > lo) & (ratio_svo < hi)).astype(float))
    d_lp_chosen_svo = -cfg.policy_coef / B * svo_pass * ratio_svo * batch.adv_action
    # d logp(a) / d logits = onehot(a) - p
    onehot_act = np.zeros_like(p_act)
    onehot_act[rows, batch.actions] = 1.0
    onehot_svo = np.zeros_like(p_svo)
    onehot_svo[rows, batch.svo_bins] = 1.0
    d_logits_act += d_lp_chosen_act[:, None] * (onehot_act - p_act)
    d_logits_svo += d_lp_chosen_svo[:, None] * (onehot_svo - p_svo)

    # entropy: dH/dz_k = -p_k (log p_k + H)
    h_act = -(p_act * lp_act).sum(axis=1, keepdims=True)
    h_svo = -(p_svo * lp_svo).sum(axis=1, keepdims=True)
    d_logits_act += -cfg.entropy_coef / B * (-(p_act * (lp_act + h_act)))
    d_logits_svo += -cfg.entropy_coef / B * (-(p_svo * (lp_svo + h_svo)))

    # stability bce through softmax: dL/dz_k = p_k (g_k - sum_j p_j g_j)
    g = (-t / (p_svo + _EPS) + (1.0 - t) / (1.0 - p_svo + _EPS))
    s = (p_svo * g).sum(axis=1, keepdims=True)
    d_logits_svo += cfg.stability_coef / B * p_svo * (g - s)

    # valid-mass loss: dL/dz_k = -p_k (m_k - q) / q
    q = valid_mass + _EPS
    d_logits_act += cfg.valid_coef / B * (-(p_act * (batch.valid_mask - q[:, None])) / q[:, None])

    d_va = cfg.value_coef / B * 2.0 * err_va
    d_vs = cfg.value_coef / B * 2.0 * err_vs
    d_blk = cfg.blocking_coef / B * (blk_prob - y)

    hidden = out["hidden"]
    d_hidden = (
        d_logits_act @ params["w_act"].T
        + d_logits_svo @ params["w_svo"].T
        + d_va[:, None] * params["w_va"][None, :]
        + d_vs[:, None] * params["w_vs"][None, :]
        + d_blk[:, None] * params["w_blk"][None, :]
    )
    d_pre = d_hidden * (1.0 - hidden ** 2)
    grads = {
        "w_in": batch.obs.T @ d_pre,
        "b_in": d_pre.sum(axis=0),
        "w_act": hidden.T @ d_logits_act,
        "b_act": d_logits_act.sum(axis=0),
        "w_svo": hidden.T @ d_logits_svo,
        "b_svo": d_logits_svo.sum(axis=0),
        "w_va": hidden.T @ d_va,
        "b_va": np.array([d_va.sum()]),
        "w_vs": hidden.T @ d_vs,
        "b_vs": np.array([d_vs.sum()]),
        "w_blk": hidden.T @ d_blk,
        "b_blk": np.array([d_blk.sum()]),
    }
    return float(total), grads, diagnostics


def _sample_categorical(rng: SplitMix64, probs: np.ndarray) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def static_valid_mask(grid, pos) -> np.ndarray:
    mask = np.zeros(N_ACTIONS)
    for a in range(N_ACTIONS):
        dr, dc = ACTION_DELTAS[a]
        if grid.is_free(pos[0] + dr, pos[1] + dc):
            mask[a] = 1.0
    return mask


@dataclass
class CorridorCurriculum:
    """Scenario sampler mixing recess and I-shaped corridor instances."""

    p_recess: float = 0.8
    corridor_lengths: tuple[int, int] = (5, 12)
    seed: int = 0
    _count: int = field(default=0, repr=False)

    def sample(self):
        rng = SplitMix64(derive_seed(self.seed, self._count))
        self._count += 1
        kind = "recess" if rng.random() < self.p_recess else "i_shape"
        length = rng.randint(*self.corridor_lengths)
        return gen_corridor(kind, length, rng.next_u64()), kind


def collect_rollout(params: dict, cfg: SmpConfig, env_cfg: EnvConfig, sampler,
                    min_steps: int, rng: SplitMix64) -> tuple[RolloutBatch, dict]:
    """Whole episodes until at least min_steps env steps are gathered.

    Per timestep: overlap + partner update, observe, sample an SVO bin and an
    action per agent from the shared forward pass, resolve, step, then
    redistribute rewards and record the stability target. Advantages use one
    GAE pass per (episode, agent) per reward stream; solved episodes bootstrap
    with 0 and step-cap truncations bootstrap from the critic.
    """
    angles = social.svo_bin_angles(env_cfg.svo_bins)
    flat: dict[str, list] = {k: [] for k in (
        "obs", "actions", "svo_bins", "logp_act_old", "logp_svo_old",
        "valid_mask", "blocking_label", "z_exp", "alpha",
        "reward_action", "reward_svo", "reward_external",
        "adv_action", "adv_svo", "ret_action", "ret_svo",
    )}
    stats = {"episodes": 0, "env_steps": 0, "external_reward": 0.0, "goals": 0.0, "length": 0.0}

    steps_done = 0
    while steps_done < min_steps:
        scenario, _ = sampler.sample()
        env = Gridworld(scenario, env_cfg)
        n = env.n
        z_prev_dist = np.full((n, env_cfg.svo_bins), 1.0 / env_cfg.svo_bins)
        ep: dict[str, list] = {k: [] for k in flat}   # step-major episode buffer
        ep_ra = [[] for _ in range(n)]
        ep_rs = [[] for _ in range(n)]
        ep_va = [[] for _ in range(n)]
        ep_vs = [[] for _ in range(n)]
        ep_external = 0.0
        fixed = np.arange(n, dtype=np.int64)
        while not env.terminated:
            ov = social.compute_overlap(env.grid, env.positions, env.goals, env_cfg.overlap_decay)
            if env.t == 0:
                fixed = ov.partners.copy()
            else:
                fixed = social.update_fixed_partners(ov.partners, ov.matrix, fixed)
            env.partners = fixed
            obs = np.stack([observe(env, i) for i in range(n)])
            out = forward(params, obs)
            lp_act = log_softmax(out["logits_act"])
            lp_svo = log_softmax(out["logits_svo"])
            p_act = np.exp(lp_act)
            p_svo = np.exp(lp_svo)
            svo_bins = np.array([_sample_categorical(rng, p_svo[i]) for i in range(n)])
            actions = np.array([_sample_categorical(rng, p_act[i]) for i in range(n)])
            svo_deg = angles[svo_bins]

            valid_masks = [static_valid_mask(env.grid, env.positions[i]) for i in range(n)]
            res = resolve(env.grid, env.positions, actions, svo_deg)
            step = env.step(res.actions, res.penalties)
            ep_external += float(step.rewards.sum())

            for i in range(n):
                p = int(fixed[i])
                r_s, r_a = social.redistribute_rewards(
                    step.rewards[i], step.rewards[p], float(svo_deg[i]), env_cfg.svo_importance)
                alpha, z_exp = social.stability_target(
                    p_svo[i], z_prev_dist[i], ov.matrix[i, p], env_cfg.overlap_cap)
                ep["obs"].append(obs[i])
                ep["actions"].append(int(actions[i]))
                ep["svo_bins"].append(int(svo_bins[i]))
                ep["logp_act_old"].append(float(lp_act[i, actions[i]]))
                ep["logp_svo_old"].append(float(lp_svo[i, svo_bins[i]]))
                ep["valid_mask"].append(valid_masks[i])
                ep["blocking_label"].append(float(step.blocked_counts[i] > 0))
                ep["z_exp"].append(z_exp)
                ep["alpha"].append(alpha)
                ep["reward_action"].append(r_a)
                ep["reward_svo"].append(r_s)
                ep["reward_external"].append(float(step.rewards[i]))
                ep_ra[i].append(r_a)
                ep_rs[i].append(r_s)
                ep_va[i].append(float(out["value_act"][i]))
                ep_vs[i].append(float(out["value_svo"][i]))

            # standing SVO for the next observation
            for i in range(n):
                onehot = np.zeros(env_cfg.svo_bins)
                onehot[svo_bins[i]] = 1.0
                env.svo_prev[i] = onehot
                env.svo_current[i] = onehot
            z_prev_dist = p_svo.copy()
            steps_done += 1

        # per-agent GAE over the finished episode, scattered back step-major.
        # A solved episode is absorbing (bootstrap 0); hitting the step cap is
        # a truncation, so the tail bootstraps from the critic's estimate of
        # the final state instead of pretending the episode ended well.
        T = env.t
        if env.success:
            boot_a = np.zeros(n)
            boot_s = np.zeros(n)
        else:
            final_out = forward(params, np.stack([observe(env, i) for i in range(n)]))
            boot_a = final_out["value_act"]
            boot_s = final_out["value_svo"]
        adv_a = [gae_advantages(ep_ra[i], ep_va[i], cfg.gamma, cfg.lam, float(boot_a[i]))
                 for i in range(n)]
        adv_s = [gae_advantages(ep_rs[i], ep_vs[i], cfg.gamma, cfg.lam, float(boot_s[i]))
                 for i in range(n)]
        for t in range(T):
            for i in range(n):
                ep["adv_action"].append(adv_a[i][t])
                ep["adv_svo"].append(adv_s[i][t])
                ep["ret_action"].append(adv_a[i][t] + ep_va[i][t])
                ep["ret_svo"].append(adv_s[i][t] + ep_vs[i][t])
        for k in flat:
            flat[k].extend(ep[k])
        stats["episodes"] += 1
        stats["env_steps"] += T
        stats["external_reward"] += ep_external
        stats["goals"] += float(env.on_goal().sum())
        stats["length"] += T

    adv_action = np.array(flat["adv_action"])
    adv_svo = np.array(flat["adv_svo"])
    if cfg.normalize_advantages:
        for arr in (adv_action, adv_svo):
            mean, std = arr.mean(), arr.std()
            arr -= mean
            if std > 1e-8:
                arr /= std

    batch = RolloutBatch(
        obs=np.stack(flat["obs"]),
        actions=np.array(flat["actions"], dtype=np.int64),
        svo_bins=np.array(flat["svo_bins"], dtype=np.int64),
        logp_act_old=np.array(flat["logp_act_old"]),
        logp_svo_old=np.array(flat["logp_svo_old"]),
        adv_action=adv_action,
        adv_svo=adv_svo,
        ret_action=np.array(flat["ret_action"]),
        ret_svo=np.array(flat["ret_svo"]),
        valid_mask=np.stack(flat["valid_mask"]),
        blocking_label=np.array(flat["blocking_label"]),
        z_exp=np.stack(flat["z_exp"]),
        alpha=np.array(flat["alpha"]),
        reward_action=np.array(flat["reward_action"]),
        reward_svo=np.array(flat["reward_svo"]),
        reward_external=np.array(flat["reward_external"]),
    )
    if stats["episodes"]:
        stats["goals"] /= stats["episodes"]
        stats["length"] /= stats["episodes"]
        stats["external_reward"] /= stats["episodes"]
    return batch, stats


@dataclass
class TrainConfig:
    """Full training recipe: optimization, environment, and curriculum."""

    smp: SmpConfig = field(default_factory=SmpConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    p_recess: float = 0.8
    corridor_lengths: tuple[int, int] = (5, 12)
    total_env_steps: int = 200_000
    rollout_steps: int = 1024
    seed: int = 0
    param_scale: float = 0.1

    def to_json(self) -> str:
        obj = asdict(self)
        obj["corridor_lengths"] = list(self.corridor_lengths)
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "TrainConfig":
        obj = json.loads(text)
        smp = SmpConfig(**obj.pop("smp", {}))
        env = EnvConfig(**obj.pop("env", {}))
        obj["corridor_lengths"] = tuple(obj.get("corridor_lengths", (5, 12)))
        return TrainConfig(smp=smp, env=env, **obj)


def config_hash(cfg: TrainConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()[:16]


def save_checkpoint(path: str, params: dict, cfg: TrainConfig) -> None:
    obj = {
        "format": 1,
        "config": json.loads(cfg.to_json()),
        "config_hash": config_hash(cfg),
        "params": {k: np.asarray(v).tolist() for k, v in params.items()},
    }
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_checkpoint(path: str) -> tuple[dict, TrainConfig]:
    with open(path) as f:
        obj = json.load(f)
    if obj.get("format") != 1:
        raise ValueError(f"unsupported checkpoint format {obj.get('format')!r}")
    cfg = TrainConfig.from_json(json.dumps(obj["config"]))
    params = {k: np.array(v, dtype=np.float64) for k, v in obj["params"].items()}
    return params, cfg


@dataclass
class TrainResult:
    params: dict
    curve: list[dict]          # per-iteration {iteration, env_steps, mean_reward, goals, ep_len}
    config: TrainConfig


def clip_gradients(grads: dict, max_norm: float) -> float:
    total = math.sqrt(sum(float((np.asarray(g) ** 2).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for k in grads:
            grads[k] = grads[k] * scale
    return total


def train(cfg: TrainConfig, params: dict | None = None, progress=None) -> TrainResult:
    """Iterate rollout collection and minibatched momentum-SGD epochs.

    Deterministic for a fixed config and seed. Divergence (non-finite loss or
    gradients) aborts, keeping the parameters from the previous iteration.
    """
    obs_dim = obs_length(cfg.env.fov, cfg.env.svo_bins)
    if params is None:
        params = init_params(obs_dim, cfg.smp.hidden, cfg.env.svo_bins,
                             derive_seed(cfg.seed, 0), cfg.param_scale)
    sampler = CorridorCurriculum(cfg.p_recess, cfg.corridor_lengths, derive_seed(cfg.seed, 1))
    rollout_rng = SplitMix64(derive_seed(cfg.seed, 2))
    shuffle_rng = SplitMix64(derive_seed(cfg.seed, 3))
    velocity = {k: np.zeros_like(np.asarray(v), dtype=np.float64) for k, v in params.items()}
    curve: list[dict] = []
    env_steps = 0
    iteration = 0
    last_good = {k: np.array(v, copy=True) for k, v in params.items()}
    while env_steps < cfg.total_env_steps:
        batch, stats = collect_rollout(params, cfg.smp, cfg.env, sampler,
                                       cfg.rollout_steps, rollout_rng)
        env_steps += stats["env_steps"]
        try:
            for _ in range(cfg.smp.epochs):
                order = list(range(len(batch)))
                shuffle_rng.shuffle(order)
                for lo in range(0, len(order), cfg.smp.minibatch):
                    idx = np.array(order[lo:lo + cfg.smp.minibatch])
                    _, grads, _ = smp3o_loss_and_grad(params, batch.subset(idx), cfg.smp)
                    for g in grads.values():
                        if not np.all(np.isfinite(g)):
                            raise TrainingDiverged("non-finite gradient")
                    clip_gradients(grads, cfg.smp.grad_clip)
                    for k in params:
                        velocity[k] = cfg.smp.momentum * velocity[k] + grads[k]
                        params[k] = params[k] - cfg.smp.learning_rate * velocity[k]
        except TrainingDiverged:
            params = last_good
            break
        last_good = {k: np.array(v, copy=True) for k, v in params.items()}
        iteration += 1
        row = {
            "iteration": iteration,
            "env_steps": env_steps,
            "mean_reward": stats["external_reward"],
            "goals": stats["goals"],
            "ep_len": stats["length"],
        }
        curve.append(row)
        if progress is not None:
            progress(row)
    return TrainResult(params, curve, cfg)


class TrainedPolicy:
    """Deterministic (argmax) controller backed by trained parameters."""

    def __init__(self, params: dict, env_cfg: EnvConfig):
        self.params = params
        self.env_cfg = env_cfg
        self.angles = social.svo_bin_angles(env_cfg.svo_bins)

    @staticmethod
    def from_checkpoint(path: str) -> "TrainedPolicy":
        params, cfg = load_checkpoint(path)
        return TrainedPolicy(params, cfg.env)

    def step(self, env: Gridworld, overlap: social.OverlapResult) -> tuple[np.ndarray, np.ndarray]:
        n = env.n
        obs = np.stack([observe(env, i) for i in range(n)])
        out = forward(self.params, obs)
        svo_bins = np.argmax(out["logits_svo"], axis=1)
        actions = np.argmax(out["logits_act"], axis=1)
        for i in range(n):
            onehot = np.zeros(self.env_cfg.svo_bins)
            onehot[svo_bins[i]] = 1.0
            env.svo_prev[i] = onehot
            env.svo_current[i] = onehot
        return actions.astype(np.int64), self.angles[svo_bins]


def smoke_train_config(seed: int = 0, total_env_steps: int = 200_000) -> TrainConfig:
    """Corridor-curriculum recipe that improves measurably at desk scale.

    Overrides three SmpConfig defaults: plain momentum-SGD at the default
    1e-5 cannot outrun the idle-ward drift from wall-bump penalties within
    200k steps, so the smoke recipe raises the learning rate, strengthens the
    critics, and shortens episodes for denser finish events.
    """
    return TrainConfig(
        smp=SmpConfig(learning_rate=1e-3, value_coef=1.0, entropy_coef=0.03),
        env=EnvConfig(max_episode_length=64),
        total_env_steps=total_env_steps,
        rollout_steps=1024,
        seed=seed,
    )
