"""Cosine-Galerkin reference eigensolver for -Laplace + V with Neumann conditions.

The trial space is ``span{Phi_k : max_i k_i <= K}``.  Because the cosine
basis diagonalizes the Neumann Laplacian, the stiffness part is diagonal and
only the potential couples modes; its matrix is a sum of Kronecker products
of one-dimensional triple-product tables.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.linalg
from scipy.stats import qmc

from .errors import (
    AssumptionViolation,
    ConvergenceError,
    DegenerateSpectrumError,
    InvalidInputError,
    NumericError,
    ResourceError,
)
from .spectral import CosineSeries, barron_norm, basis_weight, inner_product, series_multiply

DEFAULT_MAX_BASIS = 20000
GRID_POINTS_PER_DIM = 10_000
GRID_SEED = 20210601


@dataclass(frozen=True)
class GalerkinConfig:
    cutoff: int
    dim: int
    max_basis: int = DEFAULT_MAX_BASIS

    def __post_init__(self):
        if self.cutoff < 1 or self.dim < 1:
            raise InvalidInputError("cutoff and dim must be >= 1")

    @property
    def basis_size(self) -> int:
        return (self.cutoff + 1) ** self.dim

    def basis(self) -> np.ndarray:
        """Multi-indices in Kronecker order (first axis slowest), shape (N, d)."""
        grids = np.meshgrid(*[np.arange(self.cutoff + 1)] * self.dim, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class GroundTruth:
    lambda0: float
    lambda1: float
    gap: float
    ustar: CosineSeries
    cutoff: int

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "gap": self.gap,
            "ustar": self.ustar.to_dict(),
            "cutoff": self.cutoff,
        }

    @classmethod
    def from_dict(cls, data) -> "GroundTruth":
        keys = {"lambda0", "lambda1", "gap", "ustar", "cutoff"}
        if not isinstance(data, dict) or set(data) != keys:
            extra = set(data) - keys if isinstance(data, dict) else set()
            raise InvalidInputError(f"ground-truth JSON needs exactly {sorted(keys)}; unexpected {sorted(extra)}")
        return cls(
            float(data["lambda0"]),
            float(data["lambda1"]),
            float(data["gap"]),
            CosineSeries.from_dict(data["ustar"]),
            int(data["cutoff"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed JSON: {exc}") from exc


@dataclass(frozen=True)
class Eigenpair:
    lambda0: float
    ustar: CosineSeries
    iterations: int


@lru_cache(maxsize=8)
def validation_grid(dim: int) -> np.ndarray:
    """Fixed low-discrepancy point set (10^4 d Sobol points) plus all corners."""
    sobol = qmc.Sobol(d=dim, scramble=True, seed=GRID_SEED)
    n = GRID_POINTS_PER_DIM * dim
    pts = sobol.random(2 ** math.ceil(math.log2(n)))[:n]
    corners = np.array(list(product((0.0, 1.0), repeat=dim)))
    grid = np.vstack([pts, corners])
    grid.flags.writeable = False
    return grid


def potential_range(V: CosineSeries) -> tuple[float, float]:
    """Sampled ``(min V, max V)`` over the validation grid."""
    vals = V(validation_grid(V.dim))
    return float(vals.min()), float(vals.max())


def validate_potential(V: CosineSeries) -> tuple[float, float]:
    vmin, vmax = potential_range(V)
    if not vmin > 0:
        raise AssumptionViolation(f"potential must be bounded below by a positive constant; sampled min V = {vmin:.6g}")
    return vmin, vmax


def _triple_table(j: int, K: int) -> np.ndarray:
    """T[a, b] = int_0^1 cos(pi a x) cos(pi j x) cos(pi b x) dx for a, b <= K."""
    T = np.zeros((K + 1, K + 1))
    vj = CosineSeries.mode((j,))
    for b in range(K + 1):
        prod = series_multiply(vj, CosineSeries.mode((b,)))
        for (a,), _ in prod.coeffs.items():
            if a <= K:
                T[a, b] = inner_product(CosineSeries.mode((a,)), prod)
    return T


def assemble(V: CosineSeries, cfg: GalerkinConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness-plus-potential matrix and (diagonal) Gram matrix of the trial space."""
    if V.dim != cfg.dim:
        raise InvalidInputError(f"potential dimension {V.dim} does not match config dimension {cfg.dim}")
    if cfg.basis_size > cfg.max_basis:
        raise ResourceError(f"basis size {cfg.basis_size} exceeds cap {cfg.max_basis}")
    validate_potential(V)
    K, d = cfg.cutoff, cfg.dim
    idx = cfg.basis()
    gram = np.array([basis_weight(k) for k in idx])
    H = np.diag(np.pi**2 * (idx**2).sum(axis=1) * gram)
    tables: dict[int, np.ndarray] = {}
    for k, v in V.coeffs.items():
        factors = []
        for j in k:
            if j not in tables:
                tables[j] = _triple_table(j, K)
            factors.append(tables[j])
        block = factors[0]
        for f in factors[1:]:
            block = np.kron(block, f)
        H += v * block
    return H, np.diag(gram)


def _standard_form(H: np.ndarray, G: np.ndarray):
    scale = 1.0 / np.sqrt(np.diag(G))
    return H * scale[:, None] * scale[None, :], scale


def _series_from_coeffs(cfg: GalerkinConfig, c: np.ndarray) -> CosineSeries:
    return CosineSeries.from_arrays(cfg.dim, cfg.basis(), c)


def solve_ground_truth(V: CosineSeries, cfg: GalerkinConfig) -> GroundTruth:
    H, G = assemble(V, cfg)
    Hs, scale = _standard_form(H, G)
    try:
        evals, evecs = scipy.linalg.eigh(Hs, subset_by_index=[0, 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    lam0, lam1 = float(evals[0]), float(evals[1])
    gap = lam1 - lam0
    if gap < 1e-8 * max(1.0, abs(lam0)):
        raise DegenerateSpectrumError(f"spectral gap {gap:.3g} is numerically zero")
    c = evecs[:, 0] * scale
    c /= math.sqrt(float(c @ (np.diag(G) * c)))
    if c[0] < 0:
        c = -c
    # the eigh eigenvalue carries roundoff of order eps*||H||; the Rayleigh
    # quotient of the computed vector is accurate to the square of its error
    lam0 = float(c @ H @ c)
    gap = lam1 - lam0
    ustar = _series_from_coeffs(cfg, c)
    check_positive(ustar)
    return GroundTruth(lam0, lam1, gap, ustar, cfg.cutoff)


def check_positive(u: CosineSeries):
    vals = u(validation_grid(u.dim))
    if not vals.min() > 0:
        raise NumericError(f"ground state is not strictly positive on the validation grid (min {vals.min():.3g})")


def _coeff_vector(f: CosineSeries, cfg: GalerkinConfig) -> np.ndarray:
    if f.dim != cfg.dim:
        raise InvalidInputError(f"dimension mismatch: {f.dim} vs {cfg.dim}")
    if f.max_frequency() > cfg.cutoff:
        raise InvalidInputError(f"right-hand side has frequency {f.max_frequency()} above cutoff {cfg.cutoff}")
    K = cfg.cutoff
    out = np.zeros(cfg.basis_size)
    for k, v in f.coeffs.items():
        out[np.ravel_multi_index(k, (K + 1,) * cfg.dim)] = v
    return out


def apply_inverse(V: CosineSeries, f: CosineSeries, cfg: GalerkinConfig) -> CosineSeries:
    """Galerkin solution ``u`` of ``(-Laplace + V) u = f`` in the truncated space."""
    H, G = assemble(V, cfg)
    rhs = np.diag(G) * _coeff_vector(f, cfg)
    try:
        c = scipy.linalg.solve(H, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise NumericError(f"singular Galerkin system: {exc}") from exc
    return _series_from_coeffs(cfg, c)


def power_iterate(V: CosineSeries, cfg: GalerkinConfig, tol: float = 1e-12, max_iters: int = 500) -> Eigenpair:
    """Inverse power iteration ``v <- normalize(H^{-1} v)`` from ``v = 1``.

    The largest eigenvalue of the solution operator is ``1 / lambda0``, so the
    iterates converge to the ground state at rate ``lambda0 / lambda1``.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    H, G = assemble(V, cfg)
    g = np.diag(G)
    try:
        chol = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Galerkin matrix not positive definite: {exc}") from exc

    def rayleigh(c):
        return float(c @ H @ c) / float(c @ (g * c))

    c = np.zeros(cfg.basis_size)
    c[0] = 1.0
    lam = rayleigh(c)
    for it in range(1, max_iters + 1):
        c = scipy.linalg.cho_solve(chol, g * c)
        c /= math.sqrt(float(c @ (g * c)))
        new = rayleigh(c)
        if abs(new - lam) < tol:
            u = _series_from_coeffs(cfg, c if c[0] > 0 else -c)
            check_positive(u)
            return Eigenpair(new, u, it)
        lam = new
    raise ConvergenceError(f"inverse iteration did not converge in {max_iters} iterations")


def series_energy(u: CosineSeries, V: CosineSeries) -> tuple[float, float, float]:
    """Exact ``(E_V, E_2, E)`` of a cosine series: gradient term by Parseval, potential by products."""
    if u.dim != V.dim:
        raise InvalidInputError("dimension mismatch")
    grad = math.fsum(np.pi**2 * sum(i * i for i in k) * basis_weight(k) * v * v for k, v in u.coeffs.items())
    e_v = grad + inner_product(u, series_multiply(V, u))
    e_2 = inner_product(u, u)
    if e_2 <= 0:
        raise InvalidInputError("zero trial function")
    return e_v, e_2, e_v / e_2


def barron_saturation(V: CosineSeries, s: float, cutoffs) -> list[tuple[int, float]]:
    """``(K, ||u*_K||_{B^{s+2}})`` for each cutoff, to watch the norm settle as K grows."""
    cutoffs = [int(K) for K in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise InvalidInputError("cutoffs must be strictly increasing")
    out = []
    for K in cutoffs:
        truth = solve_ground_truth(V, GalerkinConfig(K, V.dim))
        out.append((K, barron_norm(truth.ustar, s + 2)))
    return out


def _seminorm_sq(u: CosineSeries) -> float:
    return math.fsum(np.pi**2 * sum(i * i for i in k) * basis_weight(k) * v * v for k, v in u.coeffs.items())


def series_error_metrics(u: CosineSeries, truth: GroundTruth, V: CosineSeries):
    """Exact :class:`~barron_ground.estimators.EvalReport` for a cosine-series trial function.

    Everything is an inner product of finite series, so no quadrature enters.
    """
    from .estimators import EvalReport

    e_v, e_2, energy = series_energy(u, V)
    l2 = math.sqrt(e_2)
    un = u.scale(1.0 / l2)
    alpha = inner_product(un, truth.ustar)
    w = un - truth.ustar.scale(alpha)
    perp_l2_sq = max(0.0, 1.0 - alpha * alpha)
    return EvalReport(
        energy=energy,
        e_V=e_v,
        e_2=e_2,
        excess=energy - truth.lambda0,
        l2_norm=l2,
        h1_norm=math.sqrt(e_2 + _seminorm_sq(u)),
        overlap=alpha,
        p_perp_l2=math.sqrt(perp_l2_sq),
        p_perp_h1=math.sqrt(perp_l2_sq + _seminorm_sq(w)),
    )


def random_trial_series(truth: GroundTruth, rng: np.random.Generator, max_freq: int = 4) -> CosineSeries:
    """Random L2-normalized trial function in the reference trial space.

    A perturbation of the ground state with a log-uniform size between 1e-4
    and 10, so both near-optimal and far-off functions get drawn.
    """
    d = truth.ustar.dim
    K = min(max_freq, truth.cutoff)
    grids = np.meshgrid(*[np.arange(K + 1)] * d, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    decay = 1.0 / (1.0 + idx.sum(axis=1)) ** 2
    noise = CosineSeries.from_arrays(d, idx, rng.standard_normal(len(idx)) * decay)
    eps = 10.0 ** rng.uniform(-4.0, 1.0)
    u = truth.ustar + noise.scale(eps / math.sqrt(inner_product(noise, noise)))
    return u.scale(1.0 / math.sqrt(inner_product(u, u)))
