"""Dyadic block coding just below and just above capacity.

A k-bit block names a dyadic cell; its midpoint is the message.  After n
feedback rounds the decoder reads the block back from its credible
interval.  At 90% of capacity the error rate collapses; at 120% it is
catastrophic, exactly as the channel coding theorem demands.
"""

import numpy as np

from pmlab import bit_error_experiment, bsc, capacity_dmc, make_kit

channel = bsc(0.2)
capacity = capacity_dmc(channel).capacity_bits
kit = make_kit(channel, "cdf1d")
n = 1500

print(f"BSC(0.2), n = {n} uses, capacity {capacity:.4f} bits/use\n")
for factor in (0.9, 1.2):
    k = round(factor * capacity * n)
    report = bit_error_experiment(kit, k=k, n_steps=n, trials=40,
                                  rng=np.random.default_rng(int(10 * factor)))
    print(f"rate {factor:.1f} x capacity  (k = {k} bits): "
          f"block error {report.error_rate:.2f}, "
          f"undecided {report.undecided_rate:.2f}")
