"""Oscillation of the reduced spacings process over short windows.

kappa(d, R) is the largest increment of R over windows no wider than d.  For
the uniform empirical process it behaves like (2 d log(1/d))^(1/2); the
script tracks the ratio for a few window widths, together with the window
conditions that make such a limit plausible.
"""

from spacings_lab import RngStream, kappa, rate_values, reduced_process, sample_exponential_spacings
from spacings_lab import stute_conditions_check

N = 10**5
samples = [reduced_process(sample_exponential_spacings(RngStream(1991, r), N, 1)) for r in range(20)]
print(f"N = {N}, 20 replications")
print(f"{'d':>10} {'q_N(d)':>8} {'median kappa/q':>15} {'s1-s4 hold':>11}")
for d in (N**-0.5, 0.01, N**-0.35, 0.05):
    q = rate_values(N, d).q_N
    ratios = sorted(kappa(p, d).value / q for p in samples)
    print(f"{d:>10.5f} {q:>8.4f} {ratios[len(ratios) // 2]:>15.4f} {str(stute_conditions_check(N, d, 1).all_s1_s4):>11}")
