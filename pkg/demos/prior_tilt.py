"""Does the decoder's uniform-prior assumption matter?

The encoder's message is drawn from a tilted prior (density 1.5 on the
lower half, 0.5 on the upper half) while the decoder keeps assuming a
uniform prior.  Over an informative channel the two posteriors merge:
the data washes the prior out.  Over a useless channel (BSC with
crossover 1/2) they never do.
"""

import numpy as np

from pmlab import PiecewiseConstantDensity1D, bsc, make_kit, prior_sensitivity

nu = PiecewiseConstantDensity1D([0.0, 0.5, 1.0], [1.5, 0.5])
rng = np.random.default_rng(3)

for p, label in ((0.2, "informative BSC(0.2)"), (0.5, "useless BSC(0.5)")):
    kit = make_kit(bsc(p), "cdf1d")
    ns, tv = prior_sensitivity(kit, nu, n_max=500, trials=30, rng=rng)
    print(f"{label}: mean total variation between posteriors")
    for n, t in list(zip(ns, tv))[::5]:
        print(f"  n={n:4d}   TV={t:.4f}")
    print()
