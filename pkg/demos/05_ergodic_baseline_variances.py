"""Why variance reduction matters: the ergodic mirror-prox baseline.

On the zero-mean constant-operator problem the fixed-horizon mirror-prox
recursion collapses to explicit Gaussian sums, so its variances are exact:
Var[z^K] = sigma^2 sum_k (alpha_k^K)^2 for the terminal iterate and
Var[zbar^K] = sigma^2 sum_k (theta_k^K)^2 for the ergodic average.  The
terminal coefficient sum approaches 1/(3 sigma^2), so the last iterate keeps
fluctuating at every horizon; by contrast the variance-reduced extragradient
method drives its residual to zero on the same problem class.
"""

from stochvi.baselines import MirrorProxSchedule, variance_scaling_probe

print("exact coefficient sums (sigma = 1, L = 1):")
print("     K    sum alpha^2    sum theta^2   sum p_k")
for K in (30, 60, 120, 1000):
    s = MirrorProxSchedule.build(K, sigma=1.0, L=1.0)
    print(f"{K:6d}    {s.terminal_var_coeff:.5f}        {s.average_var_coeff:.5f}"
          f"       {s.weights.sum():.12f}")

print("\nempirical vs exact over 3000 replications:")
rows = variance_scaling_probe([60, 120], sigma=1.0, L=1.0, replications=3000,
                              master_seed=5)
print("     K    Var[z^K] emp/exact       Var[zbar^K] emp/exact")
for r in rows:
    print(f"{r['K']:6d}    {r['var_zK_emp']:.5f} / {r['var_zK_exact']:.5f}"
          f"      {r['var_zbar_emp']:.5f} / {r['var_zbar_exact']:.5f}")
