"""Burgers' equation w_t = w w_x as a stretching equation with R = d/dx.

The derivative steepens until the spectral tail fills; the detected time is
compared with 1/max w0' from characteristics.
"""
import numpy as np

from stretchblow.simulator import BlowupThresholds, Scenario, burgers_blowup_time, oracle_residual, run
from stretchblow.spectral import Grid, derivative

grid = Grid.torus(1024)
res = oracle_residual("burgers", grid, np.sin, [0.25, 0.5, 0.75, 0.9], df=np.cos)
print(f"characteristics oracle residual: {res:.2e}")

T = burgers_blowup_time(np.cos, 0.0, 2 * np.pi)
sc = Scenario(grid, derivative(0, 1), np.sin, 1e-3, 1.5, integrator="rk4",
              thresholds=BlowupThresholds(tail_fraction=1e-4), sample_every=10)
tr = run(sc)
lo, hi = tr.blowup_bracket
print(f"oracle blow-up {T:.4f}; detected bracket [{lo:.5f}, {hi:.5f}] ({tr.blowup_reason})")
print(f"relative offset {(lo - T) / T:+.2%}")
