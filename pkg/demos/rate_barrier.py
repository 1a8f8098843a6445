"""Why the spacings process cannot be coupled to a Gaussian limit faster than N^(-1/4).

The spacings empirical process splits into the block-sum process plus a
random-shift term sup|Lambda(mu x) - Lambda(x)|.  The shift term decays like
N^(-1/4) (up to logs), while a dyadic coupling of the uniform empirical
process with a Brownian bridge closes at log N / sqrt(N).  The script fits
both slopes on a log-log scale.
"""

import math

import numpy as np

from spacings_lab import ExperimentConfig, run_experiment
from spacings_lab.gamma import shorack_constant
from spacings_lab.oscillation import rate_values

N_LIST = [2**e for e in range(10, 17)]
REPS = 30

cfg = ExperimentConfig("rate_slopes", {"fixed": 1}, N_LIST, REPS, 1991, "demo_output")
res = run_experiment(cfg, write=False)

print(f"{'N':>8} {'median sup|R2|':>16} {'a_N':>8} {'ratio':>7} {'median coupling':>16} {'log N/sqrt N':>13}")
for agg in res.aggregates:
    N = agg["N"]
    a_n = rate_values(N, 0.5).a_N
    print(f"{N:>8} {agg['sup_r2_median']:>16.5f} {a_n:>8.4f} {agg['sup_r2_median'] / a_n:>7.3f} "
          f"{agg['coupling_distance_median']:>16.5f} {math.log(N) / math.sqrt(N):>13.5f}")

s = res.summary
for name, key in (("shift term", "fit_sup_r2"), ("coupling", "fit_coupling_distance")):
    fit = s[key]
    print(f"{name:>10}: slope {fit['slope']:+.3f}  95% CI [{fit['ci_low']:+.3f}, {fit['ci_high']:+.3f}]")
print(f"confidence intervals disjoint: {s['cis_disjoint']}")
print(f"K(1) = {shorack_constant(1):.4f}; median sup|R2| / a_N at the largest N = {s['ratio_sup_r2_over_a_N']:.4f}")
print("local slope of log N / sqrt N over this range:",
      f"{np.polyfit(np.log(N_LIST), np.log(np.log(N_LIST) / np.sqrt(N_LIST)), 1)[0]:+.3f}")
