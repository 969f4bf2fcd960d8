"""
The quasiperiodic Schrodinger benchmark
=======================================

i psi_t = -psi_xx / 2 + v psi with the two-frequency potential, integrated to
T = 0.001 with Strang splitting at tau = 1e-7.  The reference is the
projection method at N = 128; it is computed once (about half a minute) and
cached on disk.

Setting ``QPSPEC_CACHE_DIR`` moves the cache.
"""

from qpspec import tqse

problem = tqse.default_problem()
reference = tqse.reference_solution(problem)

# %%
# Projection method: spectral convergence down to roundoff
for N in (2, 4, 8, 16, 32):
    _, rep = tqse.run(problem, "pm", N, reference=reference)
    print(f"pm   N={N:2d}  e_N={rep.e_N:.3e}  aliasing={rep.aliasing_norm:.1e}  {rep.wall_seconds:6.2f} s")

# %%
# Spectral method: the same accuracy at O(D^2) cost per step
for N in (2, 4, 8):
    _, rep = tqse.run(problem, "qsm", N, reference=reference)
    print(f"qsm  N={N:2d}  e_N={rep.e_N:.3e}  {rep.wall_seconds:6.2f} s")

# %%
# Periodic approximation: the error sits on the Diophantine plateau
for L in (17, 72, 305):
    _, rep = tqse.run(problem, "pam", 8, L=L, reference=reference)
    print(f"pam  L={L:4d}  e_N={rep.e_N:.3e}  {rep.wall_seconds:6.2f} s")
