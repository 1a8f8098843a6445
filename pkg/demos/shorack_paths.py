"""Sample paths of the Shorack process and the finite-N spacings process.

Both are compared with the covariance
min(H(x), H(y)) - H(x) H(y) - psi(x) psi(y) / k at x, y in {k/2, k, 2k}.
The subtracted psi term is what distinguishes spacings from an i.i.d. Gamma
sample: the random total length of the sample is estimated away.
"""

import numpy as np

from spacings_lab import RngStream, sample_exponential_spacings, sample_shorack_batch, shorack_covariance
from spacings_lab.spacings import beta_process

for k in (1, 4):
    xs = np.array([0.5, 1.0, 2.0]) * k
    gauss, integrals = sample_shorack_batch(RngStream(1991, k), k, xs, 20000)
    beta = np.array([beta_process(sample_exponential_spacings(RngStream(1991, 10**6 + r), 500, k))(xs)
                     for r in range(3000)])
    theory = shorack_covariance(k, xs[:, None], xs[None, :])
    print(f"k = {k}")
    print("  theory\n", np.array2string(theory, precision=4, prefix="  "))
    print("  Gaussian paths (20000)\n", np.array2string(np.cov(gauss.T), precision=4, prefix="  "))
    print("  beta_N, N = 500 (3000)\n", np.array2string(np.cov(beta.T), precision=4, prefix="  "))
    # int B(H(x)) dx has the covariance of int (1{Y <= x} - H(x)) dx = k - Y, so its variance is k
    print(f"  int B(H(x)) dx: mean {integrals.mean():+.4f}, variance {integrals.var():.4f} (k = {k})")
