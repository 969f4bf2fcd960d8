"""Projection method: torus grids, discrete Fourier-Bohr transform, interpolation.

Coefficient arrays over the box K_N^n = {k : -N <= k_j < N} use the FFT
layout throughout: the amplitude of index ``k`` lives at array slot
``k mod 2N`` along every axis.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .core import ProjectionMatrix, QpCoefficientMap, _as_projection, index_box

__all__ = [
    "TorusGrid",
    "TorusField",
    "DiscreteCoefficients",
    "discrete_inner_product",
    "forward_dft",
    "inverse_dft",
    "collocation_points",
    "parent_values",
    "sample_on_collocation",
    "interpolate",
    "aliasing_decompose",
    "box_slots",
    "dump_field",
    "load_field",
]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with 2N nodes of spacing pi/N on each of n torus axes."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError(f"torus grid needs n >= 1 and N >= 1, got n={self.n}, N={self.N}")

    @property
    def h(self) -> float:
        return np.pi / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.N,) * self.n

    @property
    def size(self) -> int:
        return (2 * self.N) ** self.n

    def axis(self) -> np.ndarray:
        return np.arange(2 * self.N) * self.h

    def nodes(self) -> np.ndarray:
        """All nodes y_j, row-major in (j_1, ..., j_n), shape (size, n)."""
        grids = np.meshgrid(*([self.axis()] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True, eq=False)
class TorusField:
    """Grid function on a :class:`TorusGrid`; ``values`` has shape ``grid.shape``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))


@dataclass(frozen=True, eq=False)
class DiscreteCoefficients:
    """Discrete Fourier-Bohr coefficients over K_N^n in FFT layout."""

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

    def to_map(self) -> QpCoefficientMap:
        return QpCoefficientMap(self.P, index_box(self.P.n, self.N), box_slots(self.coeffs))


def box_slots(arr: np.ndarray) -> np.ndarray:
    """Flatten an FFT-layout array into lexicographic order over K_N^n."""
    return sfft.fftshift(arr).ravel()


def slots_from_box(values: np.ndarray, n: int, N: int) -> np.ndarray:
    """Inverse of :func:`box_slots`."""
    return sfft.ifftshift(np.asarray(values).reshape((2 * N,) * n))


def _check_same_grid(F: TorusField, G: TorusField):
    if F.grid != G.grid:
        raise ValueError(f"grid mismatch: {F.grid} vs {G.grid}")


def discrete_inner_product(F: TorusField, G: TorusField) -> complex:
    """``(2N)^-n sum_j F(y_j) conj(G(y_j))``."""
    _check_same_grid(F, G)
    return complex(np.vdot(G.values, F.values) / F.grid.size)


def forward_dft(F: TorusField, P=None) -> DiscreteCoefficients:
    """Discrete coefficients ``<F, exp(i k.y)>_N`` for every k in K_N^n via an n-d FFT."""
    grid = F.grid
    if P is None:
        P = ProjectionMatrix(np.eye(grid.n))
    P = _as_projection(P)
    if P.n != grid.n:
        raise ValueError("projection matrix and grid disagree on n")
    return DiscreteCoefficients(P, grid.N, sfft.fftn(F.values) / grid.size)


def inverse_dft(c: DiscreteCoefficients) -> TorusField:
    grid = TorusGrid(c.P.n, c.N)
    return TorusField(grid, sfft.ifftn(c.coeffs) * grid.size)


def collocation_points(P, N: int) -> np.ndarray:
    """``x_j = P y_j`` for every grid node, same order as the field layout, shape (D, d)."""
    P = _as_projection(P)
    return TorusGrid(P.n, N).nodes() @ P.entries.T


def parent_values(f: QpCoefficientMap, grid: TorusGrid) -> np.ndarray:
    """Direct evaluation of the parent sum ``sum_k c_k exp(i k.y_j)`` on the grid.

    No FFT and no index folding is involved, so out-of-box modes are carried
    with their true wavenumbers.  The sum is factorized axis by axis over the
    bounding box of the support; very sparse, widely spread supports fall back
    to a chunked dense sum.
    """
    n = grid.n
    if f.P.n != n:
        raise ValueError("coefficient map and grid disagree on n")
    out_shape = grid.shape
    if len(f) == 0:
        return np.zeros(out_shape, dtype=complex)
    y = grid.axis()
    lo = f.indices.min(axis=0)
    hi = f.indices.max(axis=0)
    box = hi - lo + 1
    if np.prod(box.astype(float)) <= 16 * len(f) + 4096:
        dense = np.zeros(tuple(box), dtype=complex)
        dense[tuple((f.indices - lo).T)] = f.values
        acc = dense
        for m in range(n):
            E = np.exp(1j * np.outer(y, np.arange(lo[m], hi[m] + 1)))
            acc = np.tensordot(acc, E, axes=([0], [1]))
        return acc
    nodes = grid.nodes()
    out = np.empty(nodes.shape[0], dtype=complex)
    chunk = max(1, (1 << 22) // len(f))
    kT = f.indices.T.astype(float)
    for s in range(0, nodes.shape[0], chunk):
        out[s:s + chunk] = np.exp(1j * (nodes[s:s + chunk] @ kT)) @ f.values
    return out.reshape(out_shape)


def sample_on_collocation(f: QpCoefficientMap, N: int) -> TorusField:
    """Exact samples ``f(x_j)``, computed as parent values at the torus nodes ``y_j``."""
    grid = TorusGrid(f.P.n, N)
    return TorusField(grid, parent_values(f, grid))


def interpolate(F: TorusField, P) -> QpCoefficientMap:
    """Trigonometric interpolant I_N f as a coefficient map supported on K_N^n."""
    return forward_dft(F, P).to_map()


def aliasing_decompose(f: QpCoefficientMap, N: int) -> tuple[QpCoefficientMap, QpCoefficientMap]:
    """Split the interpolant I_N f into truncation ``P_N f`` and aliasing ``R_N f``.

    ``P_N f`` keeps the modes inside K_N^n.  ``R_N f`` folds each outside mode
    ``k + 2N m`` (m != 0) onto its image ``k`` inside the box, summing
    amplitudes that land on the same index.
    """
    idx = f.indices
    inside = np.all((idx >= -N) & (idx < N), axis=1)
    trunc = QpCoefficientMap(f.P, idx[inside], f.values[inside])
    folded = np.mod(idx[~inside] + N, 2 * N) - N
    alias = QpCoefficientMap(f.P, folded, f.values[~inside])
    return trunc, alias


_HEADER = struct.Struct("<qq")


def dump_field(F: TorusField, path) -> None:
    """Binary layout: int64 n, int64 N (little-endian), then interleaved float64 re/im, row-major."""
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(F.grid.n, F.grid.N))
        fh.write(np.ascontiguousarray(F.values, dtype="<c16").tobytes())


def load_field(path) -> TorusField:
    raw = Path(path).read_bytes()
    n, N = _HEADER.unpack_from(raw)
    grid = TorusGrid(int(n), int(N))
    values = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if values.size != grid.size:
        raise ValueError(f"truncated field file: expected {grid.size} values, found {values.size}")
    return TorusField(grid, values.astype(complex))
