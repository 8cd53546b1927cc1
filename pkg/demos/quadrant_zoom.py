"""Quadrant clicking over a noisy 4-ary channel: the zoom interface.

A target point lives in the unit square.  Each round the player names the
quadrant of the current (warped) view that contains the target; the
channel garbles the answer with probability 0.3.  The decoder's credible
box shrinks geometrically even so, and the dyadic prefixes of the target
coordinates emerge bit by bit.
"""

import numpy as np

from pmlab import PmSession, capacity_dmc, make_kit, qsc
from pmlab.codec import common_prefix_bits

channel = qsc(0.3)
print(f"QSC(0.3): capacity {capacity_dmc(channel).capacity_bits:.4f} bits/use\n")

kit = make_kit(channel, "kr-grid")
target = np.array([0.3125, 0.71875])
session = PmSession(kit, message=target, seed=5)

print("step  click  heard  credible box area   decoded prefixes")
for t in range(1, 31):
    x, y = session.step()
    if t % 5 and t > 1:
        continue
    box = session.central_credible_box(0.1)
    area = float(np.prod(box.bounds[:, 1] - box.bounds[:, 0]))
    prefixes = [common_prefix_bits(float(lo), float(hi), k_max=10) or "-"
                for lo, hi in box.bounds]
    print(f"{t:4d}  {int(x):5d}  {int(y):5d}  {area:16.3e}   "
          f"{prefixes[0]:>10s} {prefixes[1]:>10s}")

print(f"\ntarget axis bits: "
      f"{''.join(str(int(target[0] * 2 ** (i + 1)) % 2) for i in range(6))} "
      f"{''.join(str(int(target[1] * 2 ** (i + 1)) % 2) for i in range(6))}")
print(f"recovered target: {session.recover_message().round(6)}")
