"""Desk-scale policy training on the corridor curriculum.

A short run (40k env steps, a fifth of the acceptance budget) is enough to
see goals-reached climb as the two-level policy learns goal seeking under the
cross-utilized advantages. Expect a few minutes of runtime.

Run: python demos/05_training.py
"""

from svo_mapf.learner import smoke_train_config, train

cfg = smoke_train_config(seed=0, total_env_steps=40_000)
print(f"curriculum: {cfg.p_recess:.0%} recess / {1 - cfg.p_recess:.0%} I-shape, "
      f"corridor lengths {cfg.corridor_lengths}, "
      f"lr {cfg.smp.learning_rate}, {cfg.total_env_steps} env steps\n")
print(f"{'iter':>4} {'env steps':>9} {'goals/2':>8} {'ep len':>7} {'ext reward':>11}")

rows = []


def progress(row):
    rows.append(row)
    print(f"{row['iteration']:>4} {row['env_steps']:>9} {row['goals']:>8.2f} "
          f"{row['ep_len']:>7.1f} {row['mean_reward']:>11.1f}")


result = train(cfg, progress=progress)
first = sum(r["goals"] for r in rows[:5]) / 5
last = sum(r["goals"] for r in rows[-5:]) / 5
print(f"\ngoals-reached moving average: first 5 iterations {first:.2f} "
      f"-> last 5 iterations {last:.2f}")
