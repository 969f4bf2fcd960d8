"""Quasiperiodic spectral method: truncation and direct reciprocal-space convolution.

The convolution here is deliberately the direct double sum over the index
box, O(D^2) for D = (2N)^n.  Products are never routed through an FFT.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import ProjectionMatrix, QpCoefficientMap, _as_projection, index_box, parseval_l2_norm
from .pm import box_slots, slots_from_box

__all__ = [
    "TruncatedSpectrum",
    "ConvolutionPlan",
    "truncate",
    "convolve",
    "truncation_error",
]


@dataclass(frozen=True, eq=False)
class TruncatedSpectrum:
    """Dense coefficients over K_N^n, stored in FFT layout (index k at slot k mod 2N)."""

    P: ProjectionMatrix
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        P = _as_projection(self.P)
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.N,) * P.n:
            raise ValueError(f"coefficient array shape {c.shape} does not match K_{self.N}^{P.n}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "coeffs", c)

    @property
    def D(self) -> int:
        return self.coeffs.size

    def to_map(self) -> QpCoefficientMap:
        return QpCoefficientMap(self.P, index_box(self.P.n, self.N), box_slots(self.coeffs))

    def centered(self) -> np.ndarray:
        """Coefficients flattened in lexicographic box order."""
        return box_slots(self.coeffs)

    @classmethod
    def from_centered(cls, P, N: int, flat: np.ndarray) -> "TruncatedSpectrum":
        P = _as_projection(P)
        return cls(P, N, slots_from_box(flat, P.n, N))


def truncate(f: QpCoefficientMap, N: int) -> TruncatedSpectrum:
    """Projection onto K_N^n; modes outside the half-open box are dropped."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = f.P.n
    arr = np.zeros((2 * N,) * n, dtype=complex)
    idx = f.indices
    inside = np.all((idx >= -N) & (idx < N), axis=1)
    slots = tuple(np.mod(idx[inside], 2 * N).T)
    arr[slots] = f.values[inside]
    return TruncatedSpectrum(f.P, N, arr)


@numba.njit(cache=True)
def _direct_convolution(vflat, offsets, c0, psi, out):
    # out[b] = sum_l v[k_b - k_l] psi[l]; the difference index is c0 + offsets[b] - offsets[l]
    D = psi.shape[0]
    for b in range(D):
        s = 0j
        base = c0 + offsets[b]
        for l in range(D):
            s += vflat[base - offsets[l]] * psi[l]
        out[b] = s


class ConvolutionPlan:
    """Kernel lookup table for convolving with a fixed ``v`` on K_N^n.

    ``v`` is tabulated densely over all index differences that can occur
    between two members of the box, i.e. ``[-(2N-1), 2N-1]^n``; modes of
    ``v`` outside that window cannot reach the box and are ignored.
    """

    def __init__(self, v: QpCoefficientMap, N: int):
        n = v.P.n
        self.P = v.P
        self.N = N
        width = 4 * N - 1
        strides = width ** np.arange(n - 1, -1, -1)
        self.c0 = int((2 * N - 1) * strides.sum())
        self.offsets = np.ascontiguousarray(index_box(n, N) @ strides, dtype=np.int64)
        table = np.zeros(width ** n, dtype=complex)
        idx = v.indices
        ok = np.all(np.abs(idx) <= 2 * N - 1, axis=1)
        table[(idx[ok] + 2 * N - 1) @ strides] = v.values[ok]
        self.vflat = table

    def apply(self, psi_centered: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(psi_centered)
        _direct_convolution(self.vflat, self.offsets, self.c0, psi_centered, out)
        return out


def convolve(v: QpCoefficientMap, psi: TruncatedSpectrum, plan: ConvolutionPlan | None = None) -> TruncatedSpectrum:
    """``out[beta] = sum_{lambda in box} v[beta - lambda] psi[lambda]`` for every beta in K_N^n.

    Differences are taken on integer indices, so frequencies are matched
    exactly.  Cost is O(D^2) regardless of the sparsity of ``v``.
    """
    if v.P != psi.P:
        raise ValueError("v and psi have different projection matrices")
    if plan is None:
        plan = ConvolutionPlan(v, psi.N)
    out = plan.apply(np.ascontiguousarray(psi.centered()))
    return TruncatedSpectrum.from_centered(psi.P, psi.N, out)


def truncation_error(f: QpCoefficientMap, N: int) -> float:
    """Parseval norm of ``f - P_N f``, the exact mass of the dropped tail."""
    idx = f.indices
    outside = ~np.all((idx >= -N) & (idx < N), axis=1)
    return parseval_l2_norm(QpCoefficientMap(f.P, idx[outside], f.values[outside]))
