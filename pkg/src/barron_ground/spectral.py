"""Cosine-basis function algebra on the unit hypercube.

A :class:`CosineSeries` stores a finite, sparse set of coefficients of the
Neumann cosine basis ``Phi_k(x) = prod_i cos(pi k_i x_i)`` keyed by the
multi-index ``k``.  Everything here is exact up to floating point: products
use the product-to-sum identity and inner products use orthogonality.
"""
from __future__ import annotations

import json
import math
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidInputError

# magnitude below which series_multiply drops a coefficient
PRODUCT_PRUNE_TOL = 1e-15


def _as_index(k, dim: int | None = None) -> tuple[int, ...]:
    try:
        idx = tuple(int(v) for v in k)
    except TypeError:
        idx = (int(k),)
    if any(v < 0 for v in idx) or len(idx) == 0:
        raise InvalidInputError(f"multi-index must be nonempty and nonnegative, got {k!r}")
    if any(int(v) != v for v in np.atleast_1d(k)):
        raise InvalidInputError(f"multi-index entries must be integers, got {k!r}")
    if dim is not None and len(idx) != dim:
        raise InvalidInputError(f"multi-index {idx} does not have dimension {dim}")
    return idx


def basis_weight(k: Iterable[int]) -> float:
    """``<Phi_k, Phi_k>``: 1 for each zero index, 1/2 for each nonzero one."""
    return 0.5 ** sum(1 for v in k if v != 0)


class CosineSeries:
    """Finite cosine expansion ``u(x) = sum_k coeffs[k] * Phi_k(x)``.

    Instances are treated as immutable.  Exact zeros are dropped on
    construction; nothing else is pruned.
    """

    __slots__ = ("dim", "_coeffs", "_K", "_c")

    def __init__(self, dim: int, coeffs: Mapping | None = None):
        if int(dim) != dim or dim < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {dim!r}")
        self.dim = int(dim)
        clean: dict[tuple[int, ...], float] = {}
        for k, v in (coeffs or {}).items():
            idx = _as_index(k, self.dim)
            v = float(v)
            if not math.isfinite(v):
                raise InvalidInputError(f"non-finite coefficient at {idx}")
            if v != 0.0:
                clean[idx] = clean.get(idx, 0.0) + v
        self._coeffs = {k: v for k, v in sorted(clean.items()) if v != 0.0}
        if self._coeffs:
            self._K = np.array(list(self._coeffs), dtype=float).reshape(-1, self.dim)
            self._c = np.array(list(self._coeffs.values()))
        else:
            self._K = np.zeros((0, self.dim))
            self._c = np.zeros(0)

    # construction helpers
    @classmethod
    def constant(cls, dim: int, value: float = 1.0) -> "CosineSeries":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def mode(cls, k, value: float = 1.0) -> "CosineSeries":
        idx = _as_index(k)
        return cls(len(idx), {idx: value})

    @classmethod
    def from_arrays(cls, dim: int, indices, values) -> "CosineSeries":
        indices = np.asarray(indices, dtype=int).reshape(-1, dim)
        return cls(dim, {tuple(k): v for k, v in zip(indices.tolist(), np.asarray(values, float))})

    @property
    def coeffs(self) -> dict[tuple[int, ...], float]:
        return dict(self._coeffs)

    @property
    def indices(self) -> np.ndarray:
        """Multi-indices as a ``(p, d)`` float array, sorted lexicographically."""
        return self._K.copy()

    @property
    def values(self) -> np.ndarray:
        return self._c.copy()

    def __len__(self) -> int:
        return len(self._coeffs)

    def __getitem__(self, k) -> float:
        return self._coeffs.get(_as_index(k, self.dim), 0.0)

    def max_frequency(self) -> int:
        return int(self._K.max()) if len(self) else 0

    def __repr__(self) -> str:
        return f"CosineSeries(dim={self.dim}, coeffs={self._coeffs!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, CosineSeries):
            return NotImplemented
        return self.dim == other.dim and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.dim, tuple(self._coeffs.items())))

    # linear structure
    def _check(self, other: "CosineSeries"):
        if self.dim != other.dim:
            raise InvalidInputError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = CosineSeries.constant(self.dim, other)
        if not isinstance(other, CosineSeries):
            return NotImplemented
        self._check(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return CosineSeries(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        return self + (-other)

    def scale(self, alpha: float) -> "CosineSeries":
        return CosineSeries(self.dim, {k: alpha * v for k, v in self._coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, CosineSeries):
            return series_multiply(self, other)
        if isinstance(other, (int, float, np.floating)):
            return self.scale(float(other))
        return NotImplemented

    __rmul__ = __mul__

    # pointwise evaluation (vectorized over rows of x)
    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[-1] != self.dim:
            raise InvalidInputError(f"point dimension {pts.shape[-1]} does not match series dimension {self.dim}")
        return pts, single

    def __call__(self, x):
        pts, single = self._points(x)
        if not len(self):
            out = np.zeros(len(pts))
        else:
            phase = np.pi * pts[:, None, :] * self._K[None, :, :]
            out = np.cos(phase).prod(axis=2) @ self._c
        return float(out[0]) if single else out

    def gradient(self, x):
        pts, single = self._points(x)
        out = np.zeros(pts.shape)
        if len(self):
            phase = np.pi * pts[:, None, :] * self._K[None, :, :]
            cos, sin = np.cos(phase), np.sin(phase)
            for i in range(self.dim):
                factor = cos.copy()
                factor[:, :, i] = -np.pi * self._K[None, :, i] * sin[:, :, i]
                out[:, i] = factor.prod(axis=2) @ self._c
        return out[0] if single else out

    # serialization
    def to_dict(self) -> dict:
        return {"dim": self.dim, "coeffs": [{"k": list(k), "v": v} for k, v in self._coeffs.items()]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CosineSeries":
        if not isinstance(data, Mapping):
            raise InvalidInputError("series JSON must be an object")
        unknown = set(data) - {"dim", "coeffs"}
        if unknown:
            raise InvalidInputError(f"unknown key(s) in series JSON: {sorted(unknown)}")
        if "dim" not in data or "coeffs" not in data:
            raise InvalidInputError("series JSON needs 'dim' and 'coeffs'")
        dim = data["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise InvalidInputError("'dim' must be an integer")
        if not isinstance(data["coeffs"], list):
            raise InvalidInputError("'coeffs' must be a list")
        coeffs: dict[tuple[int, ...], float] = {}
        for entry in data["coeffs"]:
            if not isinstance(entry, Mapping) or set(entry) != {"k", "v"}:
                raise InvalidInputError(f"each coefficient needs exactly keys 'k' and 'v', got {entry!r}")
            k, v = entry["k"], entry["v"]
            if not isinstance(k, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in k):
                raise InvalidInputError(f"'k' must be a list of integers, got {k!r}")
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise InvalidInputError(f"'v' must be a number, got {v!r}")
            idx = _as_index(k, dim)
            if idx in coeffs:
                raise InvalidInputError(f"duplicate multi-index {list(idx)}")
            coeffs[idx] = float(v)
        return cls(dim, coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CosineSeries":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed JSON: {exc}") from exc
        return cls.from_dict(data)


def evaluate(series: CosineSeries, x):
    """Value of the series at a point (float) or at each row of an array."""
    return series(x)


def gradient(series: CosineSeries, x):
    """Analytic gradient at a point, or at each row of an ``(N, d)`` array."""
    return series.gradient(x)


def inner_product(a: CosineSeries, b: CosineSeries) -> float:
    """Exact L2 inner product on the unit hypercube."""
    a._check(b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    terms = [v * large._coeffs[k] * basis_weight(k) for k, v in small._coeffs.items() if k in large._coeffs]
    return math.fsum(terms)


def series_multiply(a: CosineSeries, b: CosineSeries) -> CosineSeries:
    """Exact pointwise product via cos A cos B = (cos(A-B) + cos(A+B)) / 2 per axis."""
    a._check(b)
    if not len(a) or not len(b):
        return CosineSeries(a.dim)
    d = a.dim
    Ka = a._K.astype(np.int64)
    Kb = b._K.astype(np.int64)
    amp = np.outer(a._c, b._c).ravel() / 2.0**d
    rows = []
    for signs in product((-1, 1), repeat=d):
        rows.append(np.abs(Ka[:, None, :] + np.asarray(signs) * Kb[None, :, :]).reshape(-1, d))
    idx = np.concatenate(rows)
    vals = np.tile(amp, len(rows))
    uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
    acc = np.zeros(len(uniq))
    np.add.at(acc, inverse.ravel(), vals)
    keep = np.abs(acc) >= PRODUCT_PRUNE_TOL
    return CosineSeries(d, {tuple(k): v for k, v in zip(uniq[keep].tolist(), acc[keep])})


def barron_norm(series: CosineSeries, s: float) -> float:
    """Spectral Barron norm ``sum_k (1 + pi^s |k|_1^s) |u_k|``."""
    if not s >= 0:
        raise InvalidInputError(f"Barron order must be nonnegative, got {s!r}")
    if not len(series):
        return 0.0
    l1 = series._K.sum(axis=1)
    # the k = 0 term has weight 1 for every s, including s = 0
    weights = 1.0 + np.where(l1 > 0, np.pi**s * l1**s, 0.0)
    return math.fsum(weights * np.abs(series._c))


def sup_bound(series: CosineSeries) -> float:
    """``sum_k |u_k|``, an upper bound for ``max |u|`` on the hypercube."""
    return math.fsum(np.abs(series._c))
