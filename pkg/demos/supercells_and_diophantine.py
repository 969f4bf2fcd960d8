"""
Supercells from continued fractions
===================================

The periodic approximation replaces sqrt 5 by a rational h / L, so the
function becomes periodic on a supercell of length 2 pi L.  The distance of
L sqrt 5 to the nearest integer controls the error that no spatial refinement
can remove, and its record lows sit at the convergent denominators.
"""

import math

import numpy as np

from qpspec import pam

alpha = math.sqrt(5.0)
for c in pam.convergents(alpha, 7):
    print(f"{c.p:5d}/{c.q:<5d}  |q alpha - p| = {pam.diophantine_error(alpha, c.q):.3e}")

L = np.arange(1, 1300)
err = pam.diophantine_error(alpha, L)
records = [int(l) for i, l in enumerate(L) if np.all(err[i] < err[:i])]
print("record minima up to 1300:", records)

# %%
# The plateau
# -----------
# Mapping sqrt 5 to 38/17 misplaces that frequency by about 7.7e-4.  The
# error of a time-dependent run at L = 17 therefore stays near 1.9e-2
# however many grid points per period are used; see ``tqse_benchmark.py``.
print("|38/17 - sqrt 5| =", abs(38 / 17 - alpha))
