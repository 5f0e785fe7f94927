"""Instance batches and paired significance testing.

Runs the greedy+resolver baseline over small batches of each map family,
then compares two policies on identical corridor instances with a paired
t-test on goals reached.

Run: python demos/07_benchmark_stats.py
"""

from svo_mapf import paired_t_test, run_batch
from svo_mapf.gridworld import EnvConfig

cfg = EnvConfig(max_episode_length=96, blocking_rewards=False)

print(f"{'family':8s} {'success':>8s} {'arrival':>8s} {'ep len':>7s}")
for family, density in (("random", 0.15), ("room", 0.3), ("maze", 0.5)):
    report = run_batch(family, 12, density, 4, instances=40,
                       policy_name="greedy", seed=9, env_cfg=cfg)
    print(f"{family:8s} {report.success_rate:8.2f} {report.mean_arrival_rate:8.2f} "
          f"{report.mean_episode_length:7.1f}")

print("\npaired t-test: scripted-social vs plain greedy on the same 40 random maps")
greedy = run_batch("random", 12, 0.15, 6, instances=40,
                   policy_name="greedy", seed=31, env_cfg=cfg)
social = run_batch("random", 12, 0.15, 6, instances=40,
                   policy_name="hetero", seed=31, env_cfg=cfg)
t, p = paired_t_test(social.metric_column("episode_length"),
                     greedy.metric_column("episode_length"))
print(f"episode length: social {social.mean_episode_length:.1f}, "
      f"greedy {greedy.mean_episode_length:.1f}")
print(f"arrival rate:   social {social.mean_arrival_rate:.2f}, "
      f"greedy {greedy.mean_arrival_rate:.2f}")
print(f"t = {t:.3f}, two-sided p = {p:.4f}"
      + ("  (significant at 0.05)" if p < 0.05 else "  (not significant)"))
