"""Constrained two-layer networks with rescaled Softplus activation.

A network is ``u(x) = c + sum_i gamma_i SP_tau(w_i . x - t_i)`` with
``SP_tau(z) = log(1 + exp(tau z)) / tau`` and the class constraints

    |c| <= 2B,  sum_i |gamma_i| <= 4B,  |w_i|_1 = 1,  |t_i| <= 1.

All evaluation routines are vectorized over the rows of an ``(n, d)`` array.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DegenerateTrialError, InvalidInputError

# tau*z above this uses the z + log1p(exp(-tau z))/tau branch
SOFTPLUS_SWITCH = 30.0
# rows of w with | |w|_1 - 1 | below this count as normalized
W_NORM_TOL = 1e-13


def _softplus_parts(tz: np.ndarray):
    """``log(1 + e^tz)`` and ``sigmoid(tz)`` sharing one ``exp(-|tz|)``.

    For ``tz > 0`` this is the ``tz + log1p(e^{-tz})`` branch, which never
    overflows; for ``tz > SOFTPLUS_SWITCH`` the correction is below one ulp.
    """
    e = np.exp(-np.abs(tz))
    sp = np.maximum(tz, 0.0) + np.log1p(e)
    inv = 1.0 / (1.0 + e)
    sig = np.where(tz >= 0, inv, e * inv)
    return sp, sig


def softplus_tau(z, tau: float):
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}")
    sp, _ = _softplus_parts(tau * np.asarray(z, dtype=float))
    out = sp / tau
    return float(out) if out.ndim == 0 else out


def softplus_tau_derivative(z, tau: float):
    """``d/dz SP_tau(z) = sigmoid(tau z)``."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}")
    out = expit(tau * np.asarray(z, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class TwoLayerNetwork:
    c: float
    gamma: np.ndarray
    w: np.ndarray
    t: np.ndarray
    tau: float
    B: float

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float)
        if w.ndim == 1:
            w = w.reshape(len(gamma), -1)
        if not (len(gamma) == len(t) == w.shape[0]):
            raise InvalidInputError(f"inconsistent widths: gamma {len(gamma)}, w {w.shape}, t {len(t)}")
        if not self.tau > 0 or not self.B > 0:
            raise InvalidInputError("tau and B must be positive")
        for arr in (gamma, w, t):
            arr.flags.writeable = False
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "B", float(self.B))

    @property
    def m(self) -> int:
        return len(self.gamma)

    @property
    def dim(self) -> int:
        return self.w.shape[1]

    def replace(self, **kw) -> "TwoLayerNetwork":
        fields = dict(c=self.c, gamma=self.gamma, w=self.w, t=self.t, tau=self.tau, B=self.B)
        fields.update(kw)
        return TwoLayerNetwork(**fields)

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[1] != self.dim:
            raise InvalidInputError(f"point dimension {pts.shape[1]} does not match network dimension {self.dim}")
        return pts, single

    def features(self, X: np.ndarray) -> "Features":
        sp, sig = _softplus_parts(self.tau * (X @ self.w.T - self.t))
        return Features(X=X, s=sp / self.tau, sig=sig)

    def __call__(self, x):
        pts, single = self._points(x)
        out = self.c + self.features(pts).s @ self.gamma
        return float(out[0]) if single else out

    def gradient(self, x):
        pts, single = self._points(x)
        z = pts @ self.w.T - self.t
        out = (expit(self.tau * z) * self.gamma) @ self.w
        return out[0] if single else out

    # flat parameter vector: [c, gamma, w (row-major), t]
    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.c], self.gamma, self.w.ravel(), self.t])

    def from_vector(self, theta: np.ndarray) -> "TwoLayerNetwork":
        m, d = self.m, self.dim
        theta = np.asarray(theta, dtype=float)
        return self.replace(
            c=theta[0],
            gamma=theta[1 : 1 + m],
            w=theta[1 + m : 1 + m + m * d].reshape(m, d),
            t=theta[1 + m + m * d :],
        )

    def constraint_violation(self) -> float:
        """Largest violation of the class constraints (0 for a member)."""
        B = self.B
        return max(
            abs(self.c) - 2 * B,
            float(np.abs(self.gamma).sum()) - 4 * B,
            float(np.abs(np.abs(self.w).sum(axis=1) - 1.0).max(initial=0.0)) - W_NORM_TOL,
            float(np.abs(self.t).max(initial=0.0)) - 1.0,
            0.0,
        )

    def is_member(self, tol: float = 1e-12) -> bool:
        finite = all(np.all(np.isfinite(a)) for a in (self.gamma, self.w, self.t)) and math.isfinite(self.c)
        return finite and self.constraint_violation() <= tol

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "m": self.m,
            "tau": self.tau,
            "B": self.B,
            "c": self.c,
            "gamma": self.gamma.tolist(),
            "w": self.w.tolist(),
            "t": self.t.tolist(),
        }

    @classmethod
    def from_dict(cls, data) -> "TwoLayerNetwork":
        keys = {"d", "m", "tau", "B", "c", "gamma", "w", "t"}
        if not isinstance(data, dict) or set(data) != keys:
            raise InvalidInputError(f"network checkpoint needs exactly keys {sorted(keys)}")
        net = cls(c=data["c"], gamma=data["gamma"], w=data["w"], t=data["t"], tau=data["tau"], B=data["B"])
        if net.m != data["m"] or net.dim != data["d"]:
            raise InvalidInputError("checkpoint 'm'/'d' disagree with parameter shapes")
        return net

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TwoLayerNetwork":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Features:
    """Cached hidden-layer quantities at a point set."""

    X: np.ndarray
    s: np.ndarray  # SP_tau(z), (n, m)
    sig: np.ndarray  # sigmoid(tau z), (n, m)


@dataclass(frozen=True)
class ParamGradient:
    c: float
    gamma: np.ndarray
    w: np.ndarray
    t: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.c], self.gamma, self.w.ravel(), self.t])


def net_evaluate(net: TwoLayerNetwork, x):
    return net(x)


def net_spatial_gradient(net: TwoLayerNetwork, x):
    return net.gradient(x)


def forward(net: TwoLayerNetwork, X: np.ndarray):
    """Values ``(n,)``, spatial gradients ``(n, d)`` and the feature cache."""
    f = net.features(X)
    u = net.c + f.s @ net.gamma
    g = (f.sig * net.gamma) @ net.w
    return u, g, f


def backprop(net: TwoLayerNetwork, f: Features, a: np.ndarray, b: np.ndarray | None) -> ParamGradient:
    """Parameter gradient of ``sum_j a_j u(x_j) + b_j . grad u(x_j)``.

    ``a`` has shape ``(n,)`` and ``b`` shape ``(n, d)`` (or None for zero).
    """
    tau, gamma = net.tau, net.gamma
    d_gamma = a @ f.s
    q = a[:, None] * f.sig
    extra_w = 0.0
    if b is not None:
        p = b @ net.w.T  # (n, m): b_j . w_i
        dsig = tau * f.sig * (1.0 - f.sig)
        d_gamma = d_gamma + np.einsum("nm,nm->m", f.sig, p)
        q = q + dsig * p
        extra_w = f.sig.T @ b
    d_t = -gamma * q.sum(axis=0)
    d_w = gamma[:, None] * (q.T @ f.X + extra_w)
    return ParamGradient(c=float(a.sum()), gamma=d_gamma, w=d_w, t=d_t)


def _sample_points(samples) -> np.ndarray:
    return np.asarray(getattr(samples, "points", samples), dtype=float)


def _potential_values(V, X) -> np.ndarray:
    return np.asarray(V, dtype=float) if isinstance(V, np.ndarray) else np.asarray(V(X), dtype=float)


def rayleigh_and_gradient(net: TwoLayerNetwork, X: np.ndarray, v: np.ndarray):
    """Empirical Rayleigh quotient ``E_n`` and its parameter gradient (quotient rule)."""
    u, g, f = forward(net, X)
    n = len(X)
    e2 = float(np.dot(u, u)) / n
    if not e2 > 0:
        raise DegenerateTrialError("trial function vanishes on every sample")
    ev = float(np.einsum("nd,nd->", g, g) + np.dot(v * u, u)) / n
    energy = ev / e2
    scale = 2.0 / (n * e2)
    grad = backprop(net, f, scale * (v - energy) * u, scale * g)
    return energy, grad


def param_gradient_rayleigh(net: TwoLayerNetwork, samples, V) -> ParamGradient:
    X = _sample_points(samples)
    return rayleigh_and_gradient(net, X, _potential_values(V, X))[1]


def empirical_rayleigh(net: TwoLayerNetwork, samples, V) -> float:
    X = _sample_points(samples)
    u, g, _ = forward(net, X)
    e2 = float(np.dot(u, u))
    if not e2 > 0:
        raise DegenerateTrialError("trial function vanishes on every sample")
    return float(np.einsum("nd,nd->", g, g) + np.dot(_potential_values(V, X) * u, u)) / e2


def _sphere_l1(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the unit l1 sphere: normalized signed exponentials."""
    w = rng.laplace(size=size)
    return w / np.abs(w).sum(axis=-1, keepdims=True)


def project(net: TwoLayerNetwork, seed: int = 0) -> TwoLayerNetwork:
    """Componentwise projection onto the class; exact since the constraint set is a product."""
    B = net.B
    w = np.array(net.w)
    norms = np.abs(w).sum(axis=1)
    dead = ~(norms > 0)
    if dead.any():
        rng = np.random.default_rng(seed)
        w[dead] = _sphere_l1(rng, (int(dead.sum()), net.dim))
        norms[dead] = np.abs(w[dead]).sum(axis=1)
    # |w|_1 = 1 can only hold to rounding; rows already within W_NORM_TOL stay
    # untouched so that projecting twice changes nothing
    off = np.abs(norms - 1.0) > W_NORM_TOL
    w[off] = w[off] / norms[off, None]
    gamma = np.array(net.gamma)
    total = float(np.abs(gamma).sum())
    if total > 4 * B:
        gamma = gamma * (4 * B / total)
        while float(np.abs(gamma).sum()) > 4 * B:
            gamma = gamma * (1.0 - 2.0**-52)
    return net.replace(
        c=min(max(net.c, -2 * B), 2 * B),
        gamma=gamma,
        w=w,
        t=np.clip(net.t, -1.0, 1.0),
    )


def init(dim: int, m: int, B: float, seed: int) -> TwoLayerNetwork:
    """Seeded random member of the class with ``tau = sqrt(m)``, close to the constant 1."""
    if dim < 1 or m < 1 or not B > 0:
        raise InvalidInputError("need dim >= 1, m >= 1 and B > 0")
    rng = np.random.default_rng(seed)
    w = _sphere_l1(rng, (m, dim))
    t = rng.uniform(-1.0, 1.0, size=m)
    gamma = rng.uniform(-4 * B / m, 4 * B / m, size=m)
    c = min(1.0, 2 * B)
    return project(TwoLayerNetwork(c=c, gamma=gamma, w=w, t=t, tau=math.sqrt(m), B=B), seed=seed)
