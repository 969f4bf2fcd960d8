"""
Interpolation on the torus and the aliasing split
=================================================

The projection method samples the parent function on a (2N)^n torus grid and
transforms with an n-dimensional FFT.  The resulting interpolant I_N f is the
truncation P_N f plus an aliasing part R_N f, which folds every mode outside
the box back onto its image inside.
"""

import math

import numpy as np

from qpspec import core, pm, qsm

P = core.ProjectionMatrix([[1.0, math.sqrt(5.0)]])
rng = np.random.default_rng(0)

N = 4
k = rng.integers(-3 * N, 3 * N, size=(40, 2))
f = core.QpCoefficientMap(P, k, rng.normal(size=40) + 1j * rng.normal(size=40))

samples = pm.sample_on_collocation(f, N)
interp = pm.interpolate(samples, P)
trunc, alias = pm.aliasing_decompose(f, N)

residual = interp - trunc - alias
print("max |I_N f - P_N f - R_N f| =", np.abs(residual.values).max())
print("||R_N f|| =", core.parseval_l2_norm(alias))

# %%
# Rates for an analytic parent
# ----------------------------
# With coefficients exp(-(|k1| + |k2|)) both errors decay exponentially in N.
# The first doubling gains only about e^2, later ones far more.
kk = core.index_box(2, 32)
g = core.QpCoefficientMap(P, kk, np.exp(-np.abs(kk).sum(axis=1)))
for N in (2, 4, 8, 16):
    i_err = core.parseval_l2_norm(pm.interpolate(pm.sample_on_collocation(g, N), P) - g)
    print(f"N={N:2d}  truncation={qsm.truncation_error(g, N):.3e}  interpolation={i_err:.3e}")
