"""
Quasiperiodic functions and their parent
========================================

A quasiperiodic function on the line is the restriction of a periodic
function on a higher-dimensional torus to an irrational slice.  Here the
slice direction is (1, sqrt 5), so every mode k = (k1, k2) carries the
physical frequency k1 + k2 sqrt 5.
"""

import math

import numpy as np

from qpspec import core

P = core.ProjectionMatrix([[1.0, math.sqrt(5.0)]])

# the potential used throughout: cos x + cos(sqrt 5 x), written as four unit modes
v = core.QpCoefficientMap(P, [(1, 0), (-1, 0), (0, 1), (0, -1)], np.ones(4))
print("v(0) =", core.evaluate(v, 0.0))
print("v(pi) =", core.evaluate(v, math.pi))

# Every pair of box indices must land on distinct frequencies
print("injective on K_8:", core.validate_injectivity(P, 8))
print("(1, 1) collides already at N=1:", not core.validate_injectivity([[1.0, 1.0]], 1))

# %%
# Mean values recover the coefficients
# ------------------------------------
# The coefficient at frequency lambda is the mean of f(x) exp(-i lambda x).
# Over a finite box [-T, T] the other modes leave an oscillating residue
# bounded by a multiple of 1/T, so single values of T need not improve
# monotonically.

for T in (1e2, 1e3, 1e4):
    est, exact, gap = core.verify_coefficient_equality(v, (1, 0), core.BoxAverageConfig(T=T))
    print(f"T={T:8.0f}  estimate={est.real:+.6f}  exact={exact.real:+.1f}  gap={gap:.2e}")

# %%
# Norms
# -----
# Parseval's identity turns the mean of |f|^2 into a sum of squared coefficients.
k = core.index_box(2, 32)
psi0 = core.QpCoefficientMap(P, k, np.exp(-np.abs(k).sum(axis=1)))
print("||psi0|| =", core.parseval_l2_norm(psi0))
print("|psi0|_1 with l1 frequency magnitude:", core.sobolev_seminorm(psi0, 1.0))
print("|Psi0|_1 of the parent on the torus:", core.parent_seminorm(psi0, 1.0))
