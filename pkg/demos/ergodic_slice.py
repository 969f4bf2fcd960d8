"""
An irrational line winding around the torus
============================================

Folding the points (x, sqrt 3 x) back into [0, 2 pi)^2 gives a line that never
closes.  As it gets longer it comes arbitrarily close to every point, which
the covering radius below measures.
"""

import math

import numpy as np

from qpspec import core

P = core.ProjectionMatrix([[1.0, math.sqrt(3.0)]])
probes = np.random.default_rng(1).uniform(0, 2 * math.pi, size=(4000, 2))

for x_max in (25, 50, 100, 200, 400, 800):
    pts = core.slice_modulo_points(P, x_max, 0.05)
    print(f"x_max={x_max:4d}  points={len(pts):6d}  covering radius={core.covering_radius(pts, probes):.3f}")

# The same points as CSV, ready for any plotting tool:
#   qpspec slice --x-max 60 --step 0.05 --out slice.csv
