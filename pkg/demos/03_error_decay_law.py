"""The 1/N law of batch-mean errors.

Averaging N oracle draws shrinks the squared stochastic error like 1/N, so
the product N * E||eps_N||^2 is flat across batch sizes.  On the scalar
zero-mean noise problem the law is exact: the product equals sigma^2.  On
the linear problem it equals the variance x^T B x at the query point, which
is why the probe doubles as a variance-law check.
"""

import numpy as np

from stochvi.problems import gen_constant_noise, gen_linear_svi, variance_at
from stochvi.sampling import error_decay_probe

print("scalar noise, sigma = 1 (product should hover at 1.0):")
rows = error_decay_probe(gen_constant_noise(sigma=1.0), np.zeros(1),
                         [1, 4, 16, 64, 256], replications=5000, master_seed=1)
print("    N    E||eps_N||^2    N * E||eps_N||^2")
for r in rows:
    print(f"{r['N']:5d}    {r['mean_sq_error']:.6f}      {r['product']:.4f}")

problem = gen_linear_svi(4, seed=6, noise_scale=0.5)
x = np.array([2.0, -1.0, 0.5, 1.5])
print(f"\nlinear operator at x with x^T B x = {variance_at(problem, x):.3f}:")
rows = error_decay_probe(problem, x, [2, 8, 32, 128], replications=5000,
                         master_seed=2)
for r in rows:
    print(f"{r['N']:5d}    {r['mean_sq_error']:.6f}      {r['product']:.4f}")
