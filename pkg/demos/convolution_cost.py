"""
Direct convolution against FFT products
=======================================

The spectral method applies the potential by a direct sum over the index box,
costing O(D^2) for D = (2N)^2 coefficients.  The projection method multiplies
on the torus grid between FFTs instead.  Both give the same answer while the
images of the product stay inside the box.
"""

import math
import time

import numpy as np

from qpspec import core, pm, qsm, tqse

problem = tqse.default_problem()
P, v = problem.P, problem.potential

for N in (4, 8, 16, 32):
    psi = qsm.truncate(problem.initial, N)
    plan = qsm.ConvolutionPlan(v, N)
    qsm.convolve(v, psi, plan)  # compile outside the timing
    t0 = time.perf_counter()
    direct = qsm.convolve(v, psi, plan)
    t_direct = time.perf_counter() - t0

    V = pm.sample_on_collocation(v, N).values
    t0 = time.perf_counter()
    phys = np.fft.ifftn(psi.coeffs, norm="forward")
    product = np.fft.fftn(V * phys, norm="forward")
    t_fft = time.perf_counter() - t0

    # the FFT product wraps around the box; the direct sum drops what leaves it
    inner = core.index_box(2, N - 1)
    slots = tuple(np.mod(inner, 2 * N).T)
    gap = np.abs(direct.coeffs[slots] - product[slots]).max()
    print(f"N={N:2d}  direct {t_direct * 1e3:8.3f} ms   fft {t_fft * 1e3:6.3f} ms   interior gap {gap:.1e}")
