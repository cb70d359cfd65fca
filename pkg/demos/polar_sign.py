"""Singular radial weight, dominance scan and the sign of R1^2 on the cone.

For each alpha the dominance margin of the adjoint radial operator is
checked on [1e-6, 1e6].  For the first passing alpha the weight
W2(r) Gamma(theta) is sampled on a 2048^2 box and R1^2 W is probed on an
annulus, once on the vertical cone and once on a horizontal control cone.
"""
import numpy as np

from stretchblow.polar import ALPHA_SCAN, ConeAngularProfile, dominance_scan, ha_experiment
from stretchblow.spectral import Grid

scan = dominance_scan(ALPHA_SCAN, 1.0, 1.0)
for d in scan:
    print(f"alpha {d.alpha:<5g} passes {d.passes!s:<5} min margin {d.min_margin:+.3e} at r = {d.argmin:.1e}")
alpha = next(d.alpha for d in scan if d.passes)

grid = Grid.box(2048, 12.8, ndim=2)
for label, center in (("vertical cone", np.pi / 2), ("horizontal cone", 0.0)):
    h = ha_experiment(alpha, ConeAngularProfile.default(center=center), grid=grid)
    print(f"{label:16s} min R1^2 W / max W = {h.relative_min:+.3e}")

for a in sorted(ALPHA_SCAN, reverse=True):
    print(f"alpha {a:<5g} L2/L1 = {ha_experiment(a, grid=grid).l2_over_l1:.4f}")
