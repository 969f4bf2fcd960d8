"""Quasiperiodic functions, their parent periodic functions, and mean values.

A quasiperiodic function on R^d is stored through the Fourier data of its
parent function on the n-torus: ``f(x) = sum_k c_k exp(i (P k) . x)`` with an
integer index ``k`` in Z^n and a d-by-n projection matrix ``P``.  The same
coefficients serve as the quasiperiodic coefficients of ``f`` and the periodic
coefficients of the parent ``F(y) = sum_k c_k exp(i k . y)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "ProjectionMatrix",
    "QpCoefficientMap",
    "BoxAverageConfig",
    "InjectivityError",
    "index_box",
    "validate_injectivity",
    "frequency_box",
    "evaluate",
    "box_mean",
    "continuous_fourier_bohr",
    "parseval_l2_norm",
    "sobolev_seminorm",
    "parent_seminorm",
    "min_singular_value",
    "slice_modulo_points",
    "covering_radius",
    "verify_coefficient_equality",
]

TWO_PI = 2.0 * np.pi
DEFAULT_INJECTIVITY_TOL = 1e-9


class InjectivityError(ValueError):
    """Two indices of a truncation box map to (numerically) the same frequency."""


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """The d-by-n matrix whose columns generate the frequency module.

    ``entries`` may be given as a flat sequence, in which case d = 1.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < a.shape[0]:
            raise ValueError(f"projection matrix must be d x n with 1 <= d <= n, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("projection matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def frequencies(self, k) -> np.ndarray:
        """Return ``P k`` for one index (shape (n,)) or a stack of them (shape (m, n))."""
        k = np.asarray(k)
        if k.shape[-1] != self.n:
            raise ValueError(f"index length {k.shape[-1]} does not match n = {self.n}")
        return k @ self.entries.T

    def to_list(self) -> list[list[float]]:
        return self.entries.tolist()

    def __eq__(self, other):
        if not isinstance(other, ProjectionMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.all(self.entries == other.entries))

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"ProjectionMatrix({self.to_list()!r})"


def _as_projection(P) -> ProjectionMatrix:
    return P if isinstance(P, ProjectionMatrix) else ProjectionMatrix(P)


@dataclass(frozen=True, eq=False)
class QpCoefficientMap:
    """Finite map from integer indices k in Z^n to complex amplitudes.

    Indices are kept unique and lexicographically sorted.  Duplicate indices
    passed to the constructor are summed.  Entries with ``|c| <= drop_tol``
    are removed only when ``drop_tol > 0``; the default keeps every value that
    was explicitly supplied, zeros included.
    """

    P: ProjectionMatrix
    indices: np.ndarray
    values: np.ndarray
    drop_tol: float = field(default=0.0, repr=False)

    def __post_init__(self):
        P = _as_projection(self.P)
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, P.n)
        val = np.asarray(self.values, dtype=complex).reshape(-1)
        if idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values have different lengths")
        if idx.shape[0]:
            uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
            if uniq.shape[0] != idx.shape[0]:
                summed = np.zeros(uniq.shape[0], dtype=complex)
                np.add.at(summed, inverse.reshape(-1), val)
                idx, val = uniq, summed
            else:
                order = np.lexsort(idx.T[::-1])
                idx, val = idx[order], val[order]
        if self.drop_tol > 0:
            keep = np.abs(val) > self.drop_tol
            idx, val = idx[keep], val[keep]
        idx = np.ascontiguousarray(idx)
        val = np.ascontiguousarray(val)
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, P, coeffs: Mapping[tuple, complex], drop_tol: float = 0.0) -> "QpCoefficientMap":
        P = _as_projection(P)
        if not coeffs:
            return cls.zero(P)
        keys = np.array([tuple(k) for k in coeffs.keys()], dtype=np.int64).reshape(-1, P.n)
        return cls(P, keys, np.array(list(coeffs.values()), dtype=complex), drop_tol)

    @classmethod
    def zero(cls, P) -> "QpCoefficientMap":
        P = _as_projection(P)
        return cls(P, np.zeros((0, P.n), dtype=np.int64), np.zeros(0, dtype=complex))

    @classmethod
    def single_mode(cls, P, k, amplitude: complex = 1.0) -> "QpCoefficientMap":
        return cls.from_dict(P, {tuple(k): amplitude})

    @cached_property
    def _lookup(self) -> dict:
        return {tuple(int(v) for v in k): c for k, c in zip(self.indices, self.values)}

    def as_dict(self) -> dict[tuple, complex]:
        return dict(self._lookup)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, k) -> complex:
        return self._lookup.get(tuple(int(v) for v in k), 0j)

    def __contains__(self, k) -> bool:
        return tuple(int(v) for v in k) in self._lookup

    @property
    def frequencies(self) -> np.ndarray:
        """Frequencies ``P k`` of the stored modes, shape (len, d)."""
        return self.P.frequencies(self.indices)

    def _check_same_P(self, other: "QpCoefficientMap"):
        if self.P != other.P:
            raise ValueError("coefficient maps have different projection matrices")

    def __add__(self, other: "QpCoefficientMap") -> "QpCoefficientMap":
        self._check_same_P(other)
        return QpCoefficientMap(
            self.P,
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.values, other.values]),
        )

    def __neg__(self):
        return QpCoefficientMap(self.P, self.indices, -self.values)

    def __sub__(self, other: "QpCoefficientMap") -> "QpCoefficientMap":
        return self + (-other)

    def __mul__(self, scalar) -> "QpCoefficientMap":
        return QpCoefficientMap(self.P, self.indices, complex(scalar) * self.values)

    __rmul__ = __mul__

    def restrict(self, mask_fn: Callable[[np.ndarray], np.ndarray]) -> "QpCoefficientMap":
        keep = mask_fn(self.indices)
        return QpCoefficientMap(self.P, self.indices[keep], self.values[keep])

    def pruned(self, tol: float) -> "QpCoefficientMap":
        """Copy without entries of modulus <= ``tol``."""
        keep = np.abs(self.values) > tol
        return QpCoefficientMap(self.P, self.indices[keep], self.values[keep])

    # JSON layout: {"P": [[...]], "coeffs": [{"k": [...], "re": r, "im": i}, ...]}
    def to_json_obj(self) -> dict:
        return {
            "P": self.P.to_list(),
            "coeffs": [
                {"k": [int(v) for v in k], "re": float(c.real), "im": float(c.imag)}
                for k, c in zip(self.indices, self.values)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict) -> "QpCoefficientMap":
        P = ProjectionMatrix(obj["P"])
        rows = obj["coeffs"]
        if not rows:
            return cls.zero(P)
        idx = np.array([r["k"] for r in rows], dtype=np.int64)
        val = np.array([complex(r["re"], r["im"]) for r in rows])
        return cls(P, idx, val)

    @classmethod
    def from_json(cls, text: str) -> "QpCoefficientMap":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class BoxAverageConfig:
    """Quadrature settings for a mean value over the cube ``s + [-T, T]^d``."""

    T: float
    s: tuple = (0.0,)
    samples_per_unit: int = 8

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("box half-width T must be positive")
        if self.samples_per_unit < 1:
            raise ValueError("samples_per_unit must be a positive integer")
        object.__setattr__(self, "s", tuple(float(v) for v in np.atleast_1d(self.s)))

    @property
    def d(self) -> int:
        return len(self.s)

    def resolves(self, max_frequency: float) -> bool:
        """True when the sampling density is at least twice ``max_frequency``."""
        return self.samples_per_unit >= 2.0 * max_frequency


def index_box(n: int, N: int) -> np.ndarray:
    """All k with -N <= k_j < N, lexicographic order, shape ((2N)^n, n)."""
    if N < 1 or n < 1:
        raise ValueError(f"index box needs n >= 1 and N >= 1, got n={n}, N={N}")
    axes = [np.arange(-N, N)] * n
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1).astype(np.int64)


def validate_injectivity(P, N: int, tol: float = DEFAULT_INJECTIVITY_TOL) -> bool:
    """Check that k -> P k separates every pair of indices in the box K_N^n by more than ``tol``."""
    P = _as_projection(P)
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = P.frequencies(index_box(P.n, N))
    tree = cKDTree(lam)
    return len(tree.query_pairs(r=tol, output_type="ndarray")) == 0


def frequency_box(P, N: int, tol: float = DEFAULT_INJECTIVITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Indices of K_N^n in lexicographic order and their frequencies ``P k``.

    Returns ``(indices, frequencies)`` with shapes ((2N)^n, n) and ((2N)^n, d).
    """
    P = _as_projection(P)
    if not validate_injectivity(P, N, tol):
        raise InjectivityError(f"k -> Pk is not injective on K_{N}^{P.n} at tolerance {tol}")
    k = index_box(P.n, N)
    return k, P.frequencies(k)


def evaluate(f: QpCoefficientMap, x) -> complex | np.ndarray:
    """Finite Fourier sum ``sum_k c_k exp(i (P k) . x)``.

    ``x`` is one point of shape (d,) (a scalar is accepted when d = 1) or a
    stack of points of shape (m, d); the result is a complex scalar or an
    array of shape (m,) respectively.
    """
    x = np.asarray(x, dtype=float)
    d = f.P.d
    single = x.ndim == 0 or (x.ndim == 1 and x.shape[0] == d)
    pts = x.reshape(-1, d)
    lam = f.frequencies
    out = np.empty(pts.shape[0], dtype=complex)
    # chunked so that the phase matrix stays near 2**22 entries
    chunk = max(1, (1 << 22) // max(1, len(f)))
    for start in range(0, pts.shape[0], chunk):
        phase = pts[start:start + chunk] @ lam.T
        out[start:start + chunk] = np.exp(1j * phase) @ f.values
    return complex(out[0]) if single else out


def _box_nodes(cfg: BoxAverageConfig) -> tuple[list[np.ndarray], list[np.ndarray]]:
    m = int(np.ceil(2 * cfg.T * cfg.samples_per_unit))
    nodes, weights = [], []
    for s in cfg.s:
        xs = np.linspace(s - cfg.T, s + cfg.T, m + 1)
        w = np.full(m + 1, 1.0 / m)
        w[0] = w[-1] = 0.5 / m
        nodes.append(xs)
        weights.append(w)
    return nodes, weights


def box_mean(func: Callable[[np.ndarray], np.ndarray], cfg: BoxAverageConfig) -> complex:
    """Composite-trapezoid average of ``func`` over ``s + [-T, T]^d``.

    ``func`` receives an (m, d) array of points and returns m values.
    """
    nodes, weights = _box_nodes(cfg)
    grids = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = weights[0]
    for wj in weights[1:]:
        w = np.multiply.outer(w, wj)
    vals = np.asarray(func(pts), dtype=complex).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite samples in box mean")
    return complex(np.dot(np.ravel(w), vals))


def continuous_fourier_bohr(func: Callable[[np.ndarray], np.ndarray], lam, cfg: BoxAverageConfig) -> complex:
    """Box estimate of the Fourier-Bohr coefficient at frequency ``lam``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    return box_mean(lambda x: np.asarray(func(x)) * np.exp(-1j * (x @ lam)), cfg)


def parseval_l2_norm(f: QpCoefficientMap) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2)))


def sobolev_seminorm(f: QpCoefficientMap, alpha: float) -> float:
    """``(sum_k |P k|^(2 alpha) |c_k|^2)^(1/2)`` with ``|.|`` the l1 magnitude of the frequency.

    The l1 magnitude is squared as a whole, not componentwise.
    """
    mag = np.sum(np.abs(f.frequencies), axis=1)
    return float(np.sqrt(np.sum(mag ** (2 * alpha) * np.abs(f.values) ** 2)))


def parent_seminorm(f: QpCoefficientMap, alpha: float) -> float:
    """Torus seminorm ``(sum_k ||k||_2^(2 alpha) |c_k|^2)^(1/2)`` of the parent function."""
    mag = np.linalg.norm(f.indices.astype(float), axis=1)
    return float(np.sqrt(np.sum(mag ** (2 * alpha) * np.abs(f.values) ** 2)))


def min_singular_value(P) -> float:
    """Smallest nonzero singular value of ``P``."""
    P = _as_projection(P)
    s = np.linalg.svd(P.entries, compute_uv=False)
    nonzero = s[s > s.max() * max(P.entries.shape) * np.finfo(float).eps]
    return float(nonzero.min()) if nonzero.size else 0.0


def slice_modulo_points(P, x_max: float, step: float) -> np.ndarray:
    """Points ``P^T x mod 2 pi`` for ``x = 0, step, 2 step, ..., <= x_max`` (d = 1 only).

    Returns an array of shape (m, n) in order of increasing x.
    """
    P = _as_projection(P)
    if P.d != 1:
        raise ValueError("slice points are defined for d = 1")
    if not step > 0:
        raise ValueError("step must be positive")
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    count = int(np.floor(x_max / step * (1 + 1e-12))) + 1
    x = np.arange(count) * step
    return np.mod(np.outer(x, P.entries[0]), TWO_PI)


def covering_radius(points: np.ndarray, probes: np.ndarray) -> float:
    """Largest periodic distance from a probe to its nearest point on the 2 pi torus."""
    points = np.mod(np.asarray(points, dtype=float), TWO_PI)
    probes = np.mod(np.asarray(probes, dtype=float), TWO_PI)
    # boxsize requires coordinates strictly below the period
    points[points >= TWO_PI] = 0.0
    probes[probes >= TWO_PI] = 0.0
    tree = cKDTree(points, boxsize=TWO_PI)
    dist, _ = tree.query(probes)
    return float(dist.max())


def verify_coefficient_equality(f: QpCoefficientMap, k, cfg: BoxAverageConfig) -> tuple[complex, complex, float]:
    """Compare a box-mean Fourier-Bohr estimate at ``P k`` with the stored parent coefficient.

    Returns ``(estimate, exact, |estimate - exact|)``.
    """
    lam = f.P.frequencies(np.asarray(k, dtype=np.int64))
    estimate = continuous_fourier_bohr(lambda x: evaluate(f, x), lam, cfg)
    exact = f[k]
    return estimate, exact, abs(estimate - exact)

