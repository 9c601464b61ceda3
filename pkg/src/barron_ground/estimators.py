"""Sampling, empirical and population Rayleigh quotients, and error metrics.

Any object with ``u(X) -> (n,)`` and ``u.gradient(X) -> (n, d)`` can be
measured here; both :class:`~barron_ground.spectral.CosineSeries` and
:class:`~barron_ground.ansatz.TwoLayerNetwork` qualify.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .errors import DegenerateTrialError, InvalidInputError

DEFAULT_GAUSS_ORDER = 48
QMC_POINTS = 2**17
QMC_SEED = 314159
TENSOR_MAX_DIM = 3


def stream_seed(seed: int, name: str) -> int:
    """64-bit key for the named random sub-stream of a run seed."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(zlib.crc32(name.encode()),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class SampleSet:
    dim: int
    n: int
    seed: int
    points: np.ndarray


def sample(dim: int, n: int, seed: int) -> SampleSet:
    """``n`` uniform points on the unit hypercube from a Philox counter stream keyed by ``seed``.

    Row ``j`` depends only on ``(seed, j)``: a longer sample extends a shorter one.
    """
    if n < 1 or dim < 1:
        raise InvalidInputError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    gen = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    pts = gen.random((n, dim))
    pts.flags.writeable = False
    return SampleSet(dim=dim, n=n, seed=int(seed), points=pts)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    kind: str  # "tensor-gauss" or "quasi-random"
    order: int  # points per axis (tensor) or total count (quasi-random)
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]


@lru_cache(maxsize=16)
def tensor_gauss(dim: int, order: int = DEFAULT_GAUSS_ORDER) -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    grids = np.meshgrid(*[x] * dim, indexing="ij")
    wgrids = np.meshgrid(*[w] * dim, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule("tensor-gauss", order, nodes, weights)


@lru_cache(maxsize=8)
def quasi_random(dim: int, count: int = QMC_POINTS, seed: int = QMC_SEED) -> QuadratureRule:
    nodes = qmc.Sobol(d=dim, scramble=True, seed=seed).random(count)
    return QuadratureRule("quasi-random", count, nodes, np.full(count, 1.0 / count))


def default_rule(dim: int) -> QuadratureRule:
    return tensor_gauss(dim) if dim <= TENSOR_MAX_DIM else quasi_random(dim)


def _values(u, X):
    vals = np.asarray(u(X), dtype=float)
    grads = np.asarray(u.gradient(X), dtype=float).reshape(len(X), -1)
    return vals, grads


def _potential(V, X):
    return np.asarray(V(X), dtype=float) if callable(V) else np.broadcast_to(np.asarray(V, float), (len(X),))


def empirical_losses(u, V, S: SampleSet) -> tuple[float, float, float]:
    """``(E_{n,V}, E_{n,2}, E_n)`` as plain sample means."""
    X = np.asarray(getattr(S, "points", S), dtype=float)
    vals, grads = _values(u, X)
    e_v = float(np.mean((grads * grads).sum(axis=1) + _potential(V, X) * vals * vals))
    e_2 = float(np.mean(vals * vals))
    if not e_2 > 0:
        raise DegenerateTrialError("trial function vanishes on every sample")
    return e_v, e_2, e_v / e_2


def population_losses(u, V, rule: QuadratureRule | None = None) -> tuple[float, float, float]:
    """``(E_V, E_2, E)`` by quadrature over the unit hypercube."""
    if rule is None:
        rule = default_rule(getattr(u, "dim", None) or V.dim)
    vals, grads = _values(u, rule.nodes)
    e_v = float(rule.weights @ ((grads * grads).sum(axis=1) + _potential(V, rule.nodes) * vals * vals))
    e_2 = float(rule.weights @ (vals * vals))
    if not e_2 > 0:
        raise DegenerateTrialError("trial function has zero L2 norm")
    return e_v, e_2, e_v / e_2


@dataclass(frozen=True)
class EvalReport:
    energy: float
    e_V: float
    e_2: float
    excess: float
    l2_norm: float
    h1_norm: float
    overlap: float
    p_perp_l2: float
    p_perp_h1: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def error_metrics(u, truth, V, rule: QuadratureRule | None = None) -> EvalReport:
    """Energy, energy excess and ground-state projector errors of ``u``.

    The projector metrics refer to the normalized ``u / ||u||``:
    ``p_perp_l2^2 = 1 - overlap^2`` and ``p_perp_h1^2`` adds the squared
    gradient seminorm of ``u / ||u|| - overlap * u*``.
    """
    ustar = truth.ustar
    if rule is None:
        rule = default_rule(ustar.dim)
    q = rule.weights
    vals, grads = _values(u, rule.nodes)
    l2_sq = float(q @ (vals * vals))
    if not l2_sq > 0:
        raise DegenerateTrialError("trial function has zero L2 norm")
    semi_sq = float(q @ (grads * grads).sum(axis=1))
    e_v = semi_sq + float(q @ (_potential(V, rule.nodes) * vals * vals))
    l2 = math.sqrt(l2_sq)
    un, gn = vals / l2, grads / l2
    us, gs = _values(ustar, rule.nodes)
    alpha = float(q @ (un * us))
    perp_l2_sq = max(0.0, 1.0 - alpha * alpha)
    dg = gn - alpha * gs
    perp_h1_sq = perp_l2_sq + float(q @ (dg * dg).sum(axis=1))
    energy = e_v / l2_sq
    return EvalReport(
        energy=energy,
        e_V=e_v,
        e_2=l2_sq,
        excess=energy - truth.lambda0,
        l2_norm=l2,
        h1_norm=math.sqrt(l2_sq + semi_sq),
        overlap=alpha,
        p_perp_l2=math.sqrt(perp_l2_sq),
        p_perp_h1=math.sqrt(perp_h1_sq),
    )
