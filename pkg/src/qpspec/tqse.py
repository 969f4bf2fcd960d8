"""Time-dependent quasiperiodic Schrodinger equation ``i psi_t = -psi_xx / 2 + v psi``.

Time stepping is Strang splitting: an exact kinetic half step, one RK4 step
for the potential term, and a second kinetic half step.  Space is
discretized by one of three backends:

``qsm``
    coefficients over K_N^n, potential applied by direct convolution.
``pm``
    coefficients over K_N^n, potential applied pointwise on the torus grid
    between n-d FFTs.
``pam``
    periodic approximant on a supercell of length ``2 pi L`` with ``2 L M``
    nodes, potential applied pointwise between 1-d FFTs.

Numerical solutions at resolution N start from the discrete coefficients of
the initial data at that resolution, and are scored against the discrete
coefficients of the reference at the same resolution (see :func:`error_eN`).
"""
from __future__ import annotations

import dataclasses
import gzip
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from scipy import fft as sfft

from .core import ProjectionMatrix, QpCoefficientMap, _as_projection, index_box
from .pam import PeriodicApproximant, pam_error_eM, periodize
from .pm import aliasing_decompose, box_slots, forward_dft, interpolate, sample_on_collocation
from .qsm import ConvolutionPlan, TruncatedSpectrum, _direct_convolution, truncate

__all__ = [
    "METHODS",
    "SolverBlowUp",
    "TqseProblem",
    "WaveState",
    "RunReport",
    "default_problem",
    "initial_state",
    "kinetic_half_step",
    "potential_step_qsm",
    "potential_step_pm",
    "potential_step_pam",
    "os2_step",
    "run",
    "reference_solution",
    "error_eN",
    "aliasing_norm",
]

log = logging.getLogger(__name__)

METHODS = ("qsm", "pm", "pam")
REFERENCE_N = 128
_CACHE_FORMAT = 1


class SolverBlowUp(FloatingPointError):
    """The discrete state became non-finite."""


@dataclass(frozen=True, eq=False)
class TqseProblem:
    P: ProjectionMatrix
    potential: QpCoefficientMap
    initial: QpCoefficientMap
    T_final: float = 1e-3
    tau: float = 1e-7

    def __post_init__(self):
        P = _as_projection(self.P)
        object.__setattr__(self, "P", P)
        if self.potential.P != P or self.initial.P != P:
            raise ValueError("potential and initial data must share the problem's projection matrix")
        if not (self.T_final > 0 and self.tau > 0):
            raise ValueError("T_final and tau must be positive")
        steps = round(self.T_final / self.tau)
        if steps < 1 or abs(steps * self.tau - self.T_final) > 64 * np.finfo(float).eps * self.T_final:
            raise ValueError(f"tau={self.tau} does not divide T_final={self.T_final}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.tau))

    def replace(self, **changes) -> "TqseProblem":
        return dataclasses.replace(self, **changes)

    def canonical(self) -> dict:
        return {
            "P": self.P.to_list(),
            "potential": self.potential.to_json_obj(),
            "initial": self.initial.to_json_obj(),
            "T_final": repr(float(self.T_final)),
            "tau": repr(float(self.tau)),
        }

    def digest(self, **extra) -> str:
        payload = dict(self.canonical(), **{k: repr(v) for k, v in extra.items()})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def default_problem() -> TqseProblem:
    """Four unit potential modes at 1, -1, sqrt 5, -sqrt 5 and 64^2 initial modes ``exp(-(|m|+|n|))``."""
    P = ProjectionMatrix([[1.0, np.sqrt(5.0)]])
    v = QpCoefficientMap(P, [(1, 0), (-1, 0), (0, 1), (0, -1)], np.ones(4))
    k = index_box(2, 32)
    psi0 = QpCoefficientMap(P, k, np.exp(-np.abs(k).sum(axis=1).astype(float)))
    return TqseProblem(P, v, psi0, T_final=1e-3, tau=1e-7)


@dataclass(frozen=True, eq=False)
class WaveState:
    """Discrete solution at time ``t``.

    For ``qsm`` and ``pm`` the coefficients cover K_N^n in FFT layout.  For
    ``pam`` they are the supercell coefficients in FFT layout with the grid
    phase of :meth:`PeriodicApproximant.grid_coefficients`.
    """

    method: str
    coeffs: np.ndarray
    t: float
    P: ProjectionMatrix
    N: int
    L: int | None = None
    M: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "pam" and (self.L is None or self.M is None):
            raise ValueError("pam state needs L and M")

    def evolve(self, coeffs: np.ndarray, dt: float = 0.0) -> "WaveState":
        return dataclasses.replace(self, coeffs=coeffs, t=self.t + dt)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def spectrum(self) -> TruncatedSpectrum | PeriodicApproximant:
        if self.method == "pam":
            return PeriodicApproximant.from_grid_coefficients(self.L, self.M, self.coeffs)
        return TruncatedSpectrum(self.P, self.N, self.coeffs)

    def to_map(self) -> QpCoefficientMap:
        if self.method == "pam":
            raise TypeError("a periodic approximant has no quasiperiodic coefficient map")
        return QpCoefficientMap(self.P, index_box(self.P.n, self.N), box_slots(self.coeffs))

    def beta_squared(self) -> np.ndarray:
        """``|beta|^2`` for every stored coefficient, same layout as ``coeffs``."""
        if self.method == "pam":
            K = 2 * self.L * self.M
            h = sfft.fftfreq(K, 1.0 / K)
            return (h / self.L) ** 2
        n = self.P.n
        k = sfft.fftfreq(2 * self.N, 1.0 / (2 * self.N))
        grids = np.meshgrid(*([k] * n), indexing="ij")
        beta = sum(np.multiply.outer(g, self.P.entries[:, m]) for m, g in enumerate(grids))
        return np.sum(beta ** 2, axis=-1)


@dataclass
class RunReport:
    method: str
    N: int
    L: int | None
    M: int | None
    e_N: float
    wall_seconds: float
    steps: int
    aliasing_norm: float | None = None

    def as_row(self) -> dict:
        return dataclasses.asdict(self)


def initial_state(problem: TqseProblem, method: str, N: int, L: int | None = None, M: int | None = None) -> WaveState:
    """Discrete initial data: interpolated coefficients (qsm, pm) or the sampled periodic approximant (pam)."""
    if method == "pam":
        if L is None:
            raise ValueError("pam needs a supercell size L")
        M = 4 * N if M is None else M
        u = periodize(problem.initial, L)
        return WaveState("pam", u.grid_coefficients(M), 0.0, problem.P, N, L, M)
    if method not in ("qsm", "pm"):
        raise ValueError(f"unknown method {method!r}")
    c = forward_dft(sample_on_collocation(problem.initial, N), problem.P).coeffs
    return WaveState(method, c, 0.0, problem.P, N)


def kinetic_half_step(state: WaveState, tau: float) -> WaveState:
    """Exact flow of the kinetic term over ``tau / 2``: multiply by ``exp(-i |beta|^2 tau / 4)``."""
    return state.evolve(state.coeffs * np.exp(-0.25j * tau * state.beta_squared()))


def _rk4(apply, y: np.ndarray, tau: float) -> np.ndarray:
    k1 = apply(y)
    k2 = apply(y + 0.5 * tau * k1)
    k3 = apply(y + 0.5 * tau * k2)
    k4 = apply(y + tau * k3)
    return y + (tau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def potential_step_qsm(state: WaveState, v: QpCoefficientMap, tau: float, plan: ConvolutionPlan | None = None) -> WaveState:
    """One RK4 step of ``i d psi/dt = v * psi`` with the direct convolution (4 convolutions)."""
    if state.method != "qsm":
        raise ValueError("state is not a qsm state")
    plan = ConvolutionPlan(v, state.N) if plan is None else plan
    flat = np.ascontiguousarray(box_slots(state.coeffs))
    out = _rk4(lambda y: -1j * plan.apply(np.ascontiguousarray(y)), flat, tau)
    return state.evolve(TruncatedSpectrum.from_centered(state.P, state.N, out).coeffs)


def potential_step_pm(state: WaveState, v: QpCoefficientMap, tau: float, V: np.ndarray | None = None) -> WaveState:
    """One RK4 step of the pointwise system ``i Psi_t = V(y_j) Psi`` between an inverse and a forward FFT."""
    if state.method != "pm":
        raise ValueError("state is not a pm state")
    if V is None:
        V = sample_on_collocation(v, state.N).values
    phys = sfft.ifftn(state.coeffs, norm="forward")
    phys = _rk4(lambda y: -1j * V * y, phys, tau)
    return state.evolve(sfft.fftn(phys, norm="forward"))


def potential_step_pam(state: WaveState, u: PeriodicApproximant, tau: float, U: np.ndarray | None = None) -> WaveState:
    """Same as :func:`potential_step_pm` on the supercell grid."""
    if state.method != "pam":
        raise ValueError("state is not a pam state")
    if U is None:
        U = u.grid_values(state.M)
    phys = sfft.ifft(state.coeffs, norm="forward")
    phys = _rk4(lambda y: -1j * U * y, phys, tau)
    return state.evolve(sfft.fft(phys, norm="forward"))


def os2_step(state: WaveState, problem: TqseProblem, tau: float | None = None) -> WaveState:
    """Kinetic ``tau/2``, potential ``tau`` (RK4), kinetic ``tau/2``; advances ``t`` by ``tau``."""
    tau = problem.tau if tau is None else tau
    s = kinetic_half_step(state, tau)
    if s.method == "qsm":
        s = potential_step_qsm(s, problem.potential, tau)
    elif s.method == "pm":
        s = potential_step_pm(s, problem.potential, tau)
    else:
        s = potential_step_pam(s, periodize(problem.potential, s.L), tau)
    s = kinetic_half_step(s, tau)
    return dataclasses.replace(s, t=state.t + tau)


@numba.njit(cache=True)
def _qsm_os2_loop(psi, kin, vflat, offsets, c0, tau, nsteps):
    D = psi.shape[0]
    k1 = np.empty(D, np.complex128)
    k2 = np.empty(D, np.complex128)
    k3 = np.empty(D, np.complex128)
    k4 = np.empty(D, np.complex128)
    y = np.empty(D, np.complex128)
    mi = -1j
    for _ in range(nsteps):
        for i in range(D):
            psi[i] *= kin[i]
        _direct_convolution(vflat, offsets, c0, psi, k1)
        for i in range(D):
            k1[i] *= mi
            y[i] = psi[i] + 0.5 * tau * k1[i]
        _direct_convolution(vflat, offsets, c0, y, k2)
        for i in range(D):
            k2[i] *= mi
            y[i] = psi[i] + 0.5 * tau * k2[i]
        _direct_convolution(vflat, offsets, c0, y, k3)
        for i in range(D):
            k3[i] *= mi
            y[i] = psi[i] + tau * k3[i]
        _direct_convolution(vflat, offsets, c0, y, k4)
        for i in range(D):
            k4[i] *= mi
            psi[i] = (psi[i] + (tau / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])) * kin[i]


def _fft_os2_loop(coeffs, kin, V, tau, nsteps, forward, inverse, check_every=1000):
    c = coeffs
    # overflow is reported as SolverBlowUp, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(nsteps):
            phys = inverse(c * kin, norm="forward")
            k1 = -1j * V * phys
            k2 = -1j * V * (phys + 0.5 * tau * k1)
            k3 = -1j * V * (phys + 0.5 * tau * k2)
            k4 = -1j * V * (phys + tau * k3)
            phys = phys + (tau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            c = forward(phys, norm="forward") * kin
            if (step + 1) % check_every == 0 and not np.all(np.isfinite(c)):
                raise SolverBlowUp(f"non-finite state after {step + 1} steps")
    return c


def _evolve(state: WaveState, problem: TqseProblem) -> tuple[WaveState, float]:
    """Run all ``problem.n_steps`` steps; returns the final state and the stepping wall time."""
    tau, nsteps = problem.tau, problem.n_steps
    kin = np.exp(-0.25j * tau * state.beta_squared())
    if state.method == "qsm":
        plan = ConvolutionPlan(problem.potential, state.N)
        psi = np.ascontiguousarray(box_slots(state.coeffs))
        kin_flat = np.ascontiguousarray(box_slots(kin))
        # compile (or load) the kernel outside the timed region
        _qsm_os2_loop(psi.copy(), kin_flat, plan.vflat, plan.offsets, plan.c0, tau, 0)
        t0 = time.perf_counter()
        _qsm_os2_loop(psi, kin_flat, plan.vflat, plan.offsets, plan.c0, tau, nsteps)
        wall = time.perf_counter() - t0
        coeffs = TruncatedSpectrum.from_centered(state.P, state.N, psi).coeffs
    elif state.method == "pm":
        V = sample_on_collocation(problem.potential, state.N).values
        t0 = time.perf_counter()
        coeffs = _fft_os2_loop(state.coeffs, kin, V, tau, nsteps, sfft.fftn, sfft.ifftn)
        wall = time.perf_counter() - t0
    else:
        U = periodize(problem.potential, state.L).grid_values(state.M)
        t0 = time.perf_counter()
        coeffs = _fft_os2_loop(state.coeffs, kin, U, tau, nsteps, sfft.fft, sfft.ifft)
        wall = time.perf_counter() - t0
    if not np.all(np.isfinite(coeffs)):
        raise SolverBlowUp(f"{state.method} state became non-finite")
    return dataclasses.replace(state, coeffs=coeffs, t=state.t + nsteps * tau), wall


def aliasing_norm(state: WaveState) -> float:
    """``||R_N psi||`` of the final interpolant, from a resample on the 2N grid."""
    f = state.to_map()
    g = interpolate(sample_on_collocation(f, 2 * state.N), state.P)
    _, alias = aliasing_decompose(g, state.N)
    return float(np.linalg.norm(alias.values))


def error_eN(numeric: WaveState, reference: QpCoefficientMap, projection: str = "discrete") -> float:
    """Parseval distance between a numerical state and the reference over the state's own modes.

    ``projection="discrete"`` compares against the reference's discrete
    coefficients at the state's resolution: the interpolant on the same
    torus grid for qsm/pm, the supercell samples for pam.
    ``projection="exact"`` compares against the reference restricted to K_N^n
    (qsm/pm) or mapped through :func:`periodize` (pam).
    """
    if projection not in ("discrete", "exact"):
        raise ValueError(f"unknown projection {projection!r}")
    if numeric.method == "pam":
        mode = "sampled" if projection == "discrete" else "periodized"
        return pam_error_eM(numeric.spectrum(), reference, numeric.L, numeric.M, mode=mode)
    if reference.P != numeric.P:
        raise ValueError("reference and state have different projection matrices")
    if projection == "discrete":
        ref = forward_dft(sample_on_collocation(reference, numeric.N), numeric.P).coeffs
    else:
        ref = truncate(reference, numeric.N).coeffs
    return float(np.linalg.norm(ref - numeric.coeffs))


def _cache_dir(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("QPSPEC_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qpspec"


def reference_path(problem: TqseProblem, N: int = REFERENCE_N, cache_dir=None) -> Path:
    key = problem.digest(method="pm", N=N, format=_CACHE_FORMAT)
    return _cache_dir(cache_dir) / f"{key}.json.gz"


def reference_solution(problem: TqseProblem, N: int = REFERENCE_N, cache_dir=None, use_cache: bool = True) -> QpCoefficientMap:
    """PM solution at resolution N (default 128) and time ``T_final``, cached on disk.

    The cache file is the gzip-compressed coefficient-map JSON with an extra
    ``"t"`` entry, named by the SHA-256 of the problem's canonical form.
    An unreadable cache file is recomputed and overwritten.
    """
    path = reference_path(problem, N, cache_dir)
    if use_cache and path.exists():
        try:
            with gzip.open(path, "rt") as fh:
                obj = json.load(fh)
            ref = QpCoefficientMap.from_json_obj(obj)
            if ref.P == problem.P and len(ref) == (2 * N) ** problem.P.n:
                return ref
            log.warning("reference cache %s has unexpected content; recomputing", path)
        except (OSError, ValueError, KeyError, EOFError) as exc:
            log.warning("reference cache %s unreadable (%s); recomputing", path, exc)
    state, wall = _evolve(initial_state(problem, "pm", N), problem)
    log.info("reference solution at N=%d took %.1f s", N, wall)
    ref = state.to_map()
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        obj = ref.to_json_obj()
        obj["t"] = state.t
        tmp = path.with_suffix(".tmp")
        with gzip.open(tmp, "wt") as fh:
            json.dump(obj, fh, separators=(",", ":"))
        os.replace(tmp, path)
    return ref


def run(problem: TqseProblem, method: str, N: int, L: int | None = None, M: int | None = None,
        reference: QpCoefficientMap | None = None, projection: str = "discrete") -> tuple[WaveState, RunReport]:
    """Integrate ``problem`` to ``T_final`` with the chosen backend and score it.

    Only the stepping loop is timed.  When ``reference`` is omitted the cached
    N=128 PM reference is used (computed on first use).
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if method == "pam":
        M = 4 * N if M is None else M
    state0 = initial_state(problem, method, N, L, M)
    final, wall = _evolve(state0, problem)
    if reference is None:
        reference = reference_solution(problem)
    e = error_eN(final, reference, projection)
    alias = aliasing_norm(final) if method == "pm" else None
    report = RunReport(method, N, L if method == "pam" else None, M if method == "pam" else None,
                       e, wall, problem.n_steps, alias)
    return final, report
