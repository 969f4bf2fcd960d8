"""Periodic approximation of one-dimensional quasiperiodic functions.

Each frequency ``lam`` is replaced by the rational ``h / L`` with
``h = round(L * lam)``, giving a function periodic on a supercell of length
``2 pi L``.  The supercell grid used by the solver is centred at the origin:
``x_j = -pi L + j pi / M`` for ``j = 0, ..., 2 L M - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
from scipy import fft as sfft

from .core import QpCoefficientMap, evaluate

__all__ = [
    "Convergent",
    "PeriodicApproximant",
    "continued_fraction",
    "convergents",
    "diophantine_error",
    "periodize",
    "supercell_grid",
    "pam_error_eM",
]


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("denominator must be positive")
        if gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not in lowest terms")

    @property
    def value(self) -> float:
        return self.p / self.q


def continued_fraction(alpha: float, count: int) -> list[int]:
    """Partial quotients of ``alpha`` (its exact binary value), at most ``count`` of them."""
    x = Fraction(alpha)
    terms = []
    while len(terms) < count:
        a = x.numerator // x.denominator
        terms.append(a)
        rem = x - a
        if rem == 0:
            break
        x = 1 / rem
    return terms


def convergents(alpha: float, count: int) -> list[Convergent]:
    """First ``count`` continued-fraction convergents p_i/q_i of ``alpha > 0``.

    Stops early when the expansion terminates (rational input).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    # seeds p_{-2}/q_{-2} = 0/1 and p_{-1}/q_{-1} = 1/0
    p_prev, q_prev, p, q = 0, 1, 1, 0
    for a in continued_fraction(alpha, count):
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        out.append(Convergent(p, q))
    return out


def diophantine_error(alpha: float, L) -> float | np.ndarray:
    """Distance from ``L * alpha`` to the nearest integer."""
    La = np.asarray(L) * alpha
    err = np.abs(La - np.rint(La))
    return float(err) if np.ndim(err) == 0 else err


@dataclass(frozen=True, eq=False)
class PeriodicApproximant:
    """Integer modes ``h`` with physical frequency ``h / L`` on ``[-pi L, pi L)``.

    ``collisions`` counts source modes that landed on an already occupied ``h``.
    """

    L: int
    h: np.ndarray
    amplitudes: np.ndarray
    collisions: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be a positive integer")
        h = np.asarray(self.h, dtype=np.int64).reshape(-1)
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if h.shape != a.shape:
            raise ValueError("h and amplitudes have different lengths")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "amplitudes", a)

    def __len__(self):
        return self.h.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.h / self.L

    def as_dict(self) -> dict[int, complex]:
        return {int(k): complex(c) for k, c in zip(self.h, self.amplitudes)}

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.exp(1j * np.outer(x, self.frequencies)) @ self.amplitudes

    def grid_coefficients(self, M: int) -> np.ndarray:
        """Coefficients folded onto the ``2 L M`` supercell modes, FFT layout, grid phase included.

        Slot ``h mod 2LM`` holds ``sum (-1)^h u_h`` so that ``ifft * 2LM``
        reproduces the samples at the centred grid.  Folding is exact on the
        grid because ``exp(i 2LM x_j / L) = 1``.
        """
        K = 2 * self.L * M
        out = np.zeros(K, dtype=complex)
        sign = np.where(self.h % 2 == 0, 1.0, -1.0)
        np.add.at(out, np.mod(self.h, K), sign * self.amplitudes)
        return out

    def grid_values(self, M: int) -> np.ndarray:
        K = 2 * self.L * M
        return sfft.ifft(self.grid_coefficients(M)) * K

    @classmethod
    def from_grid_coefficients(cls, L: int, M: int, coeffs: np.ndarray) -> "PeriodicApproximant":
        """Inverse of :meth:`grid_coefficients` restricted to ``-LM <= h < LM``."""
        K = 2 * L * M
        h = np.arange(-L * M, L * M)
        sign = np.where(h % 2 == 0, 1.0, -1.0)
        return cls(L, h, sign * np.asarray(coeffs)[np.mod(h, K)])


def periodize(f: QpCoefficientMap, L: int) -> PeriodicApproximant:
    """Map each mode ``lam = P k`` to ``h = round(L lam)`` (half to even); collisions are summed."""
    if f.P.d != 1:
        raise ValueError("periodic approximation is implemented for d = 1")
    if L < 1:
        raise ValueError("L must be a positive integer")
    if len(f) == 0:
        return PeriodicApproximant(L, np.zeros(0, np.int64), np.zeros(0, complex))
    h_all = np.rint(L * f.frequencies[:, 0]).astype(np.int64)
    h, inverse = np.unique(h_all, return_inverse=True)
    amp = np.zeros(h.size, dtype=complex)
    np.add.at(amp, inverse.reshape(-1), f.values)
    return PeriodicApproximant(L, h, amp, collisions=int(h_all.size - h.size))


def supercell_grid(L: int, M: int) -> np.ndarray:
    """The ``2 L M`` nodes ``-pi L + j pi / M``."""
    return -np.pi * L + np.arange(2 * L * M) * (np.pi / M)


def pam_error_eM(numeric: PeriodicApproximant, reference: QpCoefficientMap, L: int, M: int,
                 mode: str = "sampled", prune: float = 1e-15) -> float:
    """Parseval distance between a periodic solution and a quasiperiodic reference on ``-LM <= h < LM``.

    ``mode="sampled"``: the reference's supercell coefficients are its
    discrete Fourier coefficients on the supercell grid, so the result equals
    the RMS of ``reference(x_j) - numeric(x_j)`` over the ``2LM`` nodes.  This
    is what measures the cost of misplacing irrational frequencies.

    ``mode="periodized"``: the reference is first mapped through
    :func:`periodize` and compared coefficientwise; frequency placement is
    then invisible to the metric.

    Reference modes with modulus ``<= prune`` are skipped when sampling.
    """
    if numeric.L != L:
        raise ValueError(f"approximant has L={numeric.L}, expected {L}")
    K = 2 * L * M
    if mode == "sampled":
        x = supercell_grid(L, M)
        ref = evaluate(reference.pruned(prune) if prune > 0 else reference, x[:, None])
        diff = ref - numeric.grid_values(M)
        return float(np.sqrt(np.mean(np.abs(diff) ** 2)))
    if mode == "periodized":
        mapped = periodize(reference, L)
        a = np.zeros(K, dtype=complex)
        b = np.zeros(K, dtype=complex)
        for src, dst in ((mapped, a), (numeric, b)):
            keep = (src.h >= -L * M) & (src.h < L * M)
            np.add.at(dst, src.h[keep] + L * M, src.amplitudes[keep])
        return float(np.linalg.norm(a - b))
    raise ValueError(f"unknown mode {mode!r}")
