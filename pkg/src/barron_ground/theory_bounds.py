"""Explicit constants and bounds of the generalization analysis.

Formula evaluators are pure functions.  Quantities whose hypotheses fail
(``xi_i >= 1`` for the oracle inequality, ``eta > 1/2`` for the
approximation-gap bound) come back as ``None`` rather than as a number.
Covering numbers are handled in log space: their products overflow double
precision already for ``m ~ 10``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .ansatz import TwoLayerNetwork, backprop, forward, init, project
from .errors import InvalidInputError, NumericError
from .estimators import sample, stream_seed
from .spectral import CosineSeries

CLASS_IDS = ("F", "G1", "G2")
STABILITY_RTOL = 1e-8


@dataclass(frozen=True)
class ClassParams:
    B: float
    m: int
    d: int
    V_max: float
    V_min: float

    def __post_init__(self):
        if self.B < 0 or self.m < 1 or self.d < 1:
            raise InvalidInputError("need B >= 0, m >= 1, d >= 1")
        if not 0 < self.V_min <= self.V_max:
            raise InvalidInputError("need 0 < V_min <= V_max")

    @property
    def tau(self) -> float:
        return math.sqrt(self.m)


def envelopes(p: ClassParams) -> tuple[float, float, float]:
    """Sup-norm envelopes ``(M_F, M_1, M_2)`` of the network class and of G1, G2."""
    mf = 16.0 * p.B
    return mf, mf * mf, (1.0 + p.V_max) * mf * mf


def lambda_bounds(p: ClassParams) -> tuple[float, float]:
    B = p.B
    lam1 = 36.0 * B * (5.0 + 8.0 * B)
    lam2 = 64.0 * B * B * math.sqrt(p.m) + 8.0 * B + p.V_max * lam1
    return lam1, lam2


def covering_number_bound(delta: float, lam: float, m: int, d: int, B: float) -> float:
    """``ln M(delta, Lambda, m, d)`` for the covering-number bound of G1/G2."""
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    if not (lam > 0 and B > 0):
        raise InvalidInputError("Lambda and B must be positive")
    ld = math.log(delta)
    return (
        math.log(4 * B * lam) - ld
        + m * (math.log(12 * B * lam) - ld)
        + d * m * (math.log(3 * lam) - ld)
        + m * (math.log(3 * lam) - ld)
    )


def dudley_integral(M: float, lam: float, m: int, d: int, B: float) -> float:
    """``int_0^M sqrt((ln M(eps))_+) d eps``.

    ``ln M(eps) = a - k ln eps`` is affine in ``ln eps``.  With the upper
    limit ``U = min(M, eps_0)`` (``eps_0`` the zero of the log) and the
    substitution ``eps = U e^{-s}`` the singular endpoint moves to infinity
    and the integrand ``U sqrt(a - k ln U + k s) e^{-s}`` is smooth.
    """
    if not (M > 0 and lam > 0 and B > 0):
        raise InvalidInputError("M, Lambda and B must be positive")
    a = covering_number_bound(1.0, lam, m, d, B)
    k = 1.0 + (d + 2) * m
    upper = min(M, math.exp(a / k)) if a / k < 700 else M
    base = a - k * math.log(upper)

    def f(s):
        return math.sqrt(max(base + k * s, 0.0)) * math.exp(-s)

    val, err = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    val *= upper
    if not math.isfinite(val):
        raise NumericError("Dudley integral is not finite")
    return val


def dudley_bound(M: float, lam: float, m: int, d: int, B: float, n: int) -> float:
    """Dudley entropy bound with zero truncation: ``(12 / sqrt(n)) int_0^M sqrt(ln N)``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return 12.0 / math.sqrt(n) * dudley_integral(M, lam, m, d, B)


def z_constant(M: float, lam: float, d: int, B: float) -> float:
    """Closed-form majorant ``Z(M, Lambda, d)`` of the per-neuron entropy integral."""
    pos = lambda x: math.sqrt(max(x, 0.0))
    u = min(M, 1.0)
    # int_0^u sqrt(ln(1/eps)) d eps = Gamma(3/2, ln(1/u))
    tail = special.gamma(1.5) * special.gammaincc(1.5, math.log(1.0 / u))
    return M * (pos(math.log(4 * B * lam)) + pos(math.log(12 * B * lam) + d * math.log(3 * lam) + math.log(3 * lam))) + math.sqrt(d + 3) * tail


def rademacher_bounds(p: ClassParams, n: int) -> tuple[float, float]:
    _, m1, m2 = envelopes(p)
    lam1, lam2 = lambda_bounds(p)
    return (
        dudley_bound(m1, lam1, p.m, p.d, p.B, n),
        dudley_bound(m2, lam2, p.m, p.d, p.B, n),
    )


def eta(B: float, m: int) -> float:
    return B * (6.0 * math.log(m) + 30.0) / math.sqrt(m)


def xi_eta(p: ClassParams, n: int, delta: float, R1: float, R2: float) -> tuple[float, float, float, float]:
    """``(xi1, xi2, xi3, eta)``; the Rademacher values are supplied by the caller."""
    if not 0 < delta < 1 / 3:
        raise InvalidInputError(f"delta must lie in (0, 1/3), got {delta}")
    if n < 1 or R1 < 0 or R2 < 0:
        raise InvalidInputError("need n >= 1 and nonnegative Rademacher values")
    mf, _, m2 = envelopes(p)
    dev = math.sqrt(2.0 * math.log(4.0 / delta) / n)
    xi1 = 2.0 * R1 + 4.0 * mf * mf * dev
    xi2 = 2.0 * R2 + 4.0 * m2 * dev
    xi3 = mf * mf * math.sqrt(math.log(2.0 / delta) / (2.0 * n))
    return xi1, xi2, xi3, eta(p.B, p.m)


def oracle_rhs(xi1: float, xi2: float, xi3: float, M2: float, approx_gap: float) -> float | None:
    """Right-hand side of the oracle inequality, or None when some ``xi >= 1``."""
    if not (xi1 < 1 and xi3 < 1):
        return None
    return (M2 * xi1 + xi2) / (1 - xi1) + (M2 * xi3 + xi2) / (1 - xi3) + approx_gap


def energy_diff_bound(lambda_star: float, V_min: float, V_max: float, eta_value: float) -> float | None:
    """Approximation-gap bound for the width-m approximant; None unless ``eta <= 1/2``."""
    if eta_value > 0.5:
        return None
    const = 2.0 * (1.0 + V_max) * (math.sqrt(lambda_star / min(1.0, V_min)) + 1.0) + 3.0 * lambda_star
    return const * eta_value


@dataclass(frozen=True)
class StabilityReport:
    l2_lhs: float
    l2_rhs: float
    l2_slack: float
    h1_lhs: float
    h1_rhs: float
    h1_slack: float
    l2_violated: bool
    h1_violated: bool

    @property
    def violated(self) -> bool:
        return self.l2_violated or self.h1_violated


def stability_check(excess, p_perp_l2, p_perp_h1, truth, V_min, V_max, l2_norm_of_u: float = 1.0) -> StabilityReport:
    """Signed slacks (RHS - LHS) of the two energy-excess stability inequalities.

    ``p_perp_l2`` and ``p_perp_h1`` refer to the normalized function as in
    :class:`~barron_ground.estimators.EvalReport`; both sides are rescaled by
    ``||u||^2`` so the unnormalized statement is checked.
    """
    gap = truth.gap
    if not gap > 0:
        raise InvalidInputError("stability check needs a positive spectral gap")
    nrm2 = l2_norm_of_u**2
    l2_lhs = p_perp_l2**2 * nrm2
    l2_rhs = excess / gap * nrm2
    h1_lhs = p_perp_h1**2 * nrm2
    h1_rhs = ((V_max - V_min + 1.0) / gap + 1.0) * excess * nrm2
    l2_slack, h1_slack = l2_rhs - l2_lhs, h1_rhs - h1_lhs
    return StabilityReport(
        l2_lhs, l2_rhs, l2_slack, h1_lhs, h1_rhs, h1_slack,
        l2_slack < -STABILITY_RTOL * max(1.0, abs(l2_rhs)),
        h1_slack < -STABILITY_RTOL * max(1.0, abs(h1_rhs)),
    )


# empirical Rademacher complexity


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    per_sign: tuple[float, ...]
    class_id: str
    n: int
    kind: str = "empirical lower estimate"


def _class_objective(class_id, net, X, v, sigma, sign):
    """``sign * (1/n) sum_j sigma_j g(x_j)`` and its parameter gradient."""
    n = len(X)
    u, g, f = forward(net, X)
    w = sign * sigma / n
    if class_id == "F":
        return float(w @ u), backprop(net, f, w, None)
    if class_id == "G1":
        return float(w @ (u * u)), backprop(net, f, 2 * w * u, None)
    val = float(w @ ((g * g).sum(axis=1) + v * u * u))
    return val, backprop(net, f, 2 * w * v * u, 2 * w[:, None] * g)


def _ascend(class_id, net, X, v, sigma, sign, steps, lr, constants_only):
    m1 = np.zeros(net.to_vector().size)
    m2 = np.zeros_like(m1)
    best = -math.inf
    for k in range(1, steps + 1):
        val, grad = _class_objective(class_id, net, X, v, sigma, sign)
        best = max(best, val)
        gvec = grad.to_vector()
        if constants_only:
            gvec[1:] = 0.0
        m1 = 0.9 * m1 + 0.1 * gvec
        m2 = 0.999 * m2 + 0.001 * gvec * gvec
        step = (m1 / (1 - 0.9**k)) / (np.sqrt(m2 / (1 - 0.999**k)) + 1e-12)
        rate = lr * 0.5 * (1 + math.cos(math.pi * (k - 1) / steps)) + 1e-4
        net = project(net.from_vector(net.to_vector() + rate * step))
    val, _ = _class_objective(class_id, net, X, v, sigma, sign)
    return max(best, val)


def rademacher_estimate(
    class_id: str,
    p: ClassParams,
    V: CosineSeries | None,
    n: int,
    n_sigma: int = 8,
    n_restarts: int = 4,
    seed: int = 0,
    steps: int = 200,
    lr: float = 0.05,
    constants_only: bool = False,
) -> RademacherEstimate:
    """Lower estimate of the empirical Rademacher complexity of F, G1 or G2.

    For each sign vector the supremum is approached by projected gradient
    ascent from several random members; the result can only undershoot.
    ``constants_only`` freezes ``gamma = 0`` so only ``c`` moves.
    """
    if class_id not in CLASS_IDS:
        raise InvalidInputError(f"class_id must be one of {CLASS_IDS}")
    if n_sigma < 8 or n_restarts < 4:
        raise InvalidInputError("need n_sigma >= 8 and n_restarts >= 4")
    if not p.B > 0:
        raise InvalidInputError("B must be positive")
    if class_id == "G2" and V is None:
        raise InvalidInputError("class G2 needs the potential")
    X = sample(p.d, n, stream_seed(seed, "rademacher-points")).points
    v = V(X) if V is not None else np.zeros(n)
    rng = np.random.default_rng(stream_seed(seed, "rademacher"))
    per_sign = []
    for i in range(n_sigma):
        sigma = rng.choice([-1.0, 1.0], size=n)
        best = 0.0
        for r in range(n_restarts):
            net = init(p.d, p.m, p.B, stream_seed(seed, f"rademacher-init-{i}-{r}"))
            if constants_only:
                net = net.replace(gamma=np.zeros(p.m))
            sign = 1.0 if r % 2 == 0 else -1.0
            best = max(best, _ascend(class_id, net, X, v, sigma, sign, steps, lr, constants_only))
        per_sign.append(best)
    return RademacherEstimate(float(np.mean(per_sign)), tuple(per_sign), class_id, n)


# reports


@dataclass
class BoundsReport:
    B: float
    m: int
    n: int
    d: int
    delta: float
    V_min: float
    V_max: float
    M_F: float
    M_1: float
    M_2: float
    Lambda1: float
    Lambda2: float
    rademacher_bound_1: float
    rademacher_bound_2: float
    xi1: float
    xi2: float
    xi3: float
    eta: float
    approx_gap_bound: float | None
    oracle_rhs: float | None
    status: str
    rademacher_empirical_1: float | None = None
    rademacher_empirical_2: float | None = None
    rademacher_empirical_kind: str = "empirical lower estimate"
    stability: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def bounds_report(p: ClassParams, n: int, delta: float, lambda_star: float | None = None, approx_gap: float | None = None) -> BoundsReport:
    """All constants for one parameter point, with Dudley bounds as Rademacher values.

    The approximation gap is ``approx_gap`` when given, otherwise the
    ``eta``-based bound (which needs ``lambda_star`` and ``eta <= 1/2``).
    """
    mf, m1, m2 = envelopes(p)
    lam1, lam2 = lambda_bounds(p)
    r1 = dudley_bound(m1, lam1, p.m, p.d, p.B, n)
    r2 = dudley_bound(m2, lam2, p.m, p.d, p.B, n)
    xi1, xi2, xi3, et = xi_eta(p, n, delta, r1, r2)
    gap_bound = None
    if lambda_star is not None:
        gap_bound = energy_diff_bound(lambda_star, p.V_min, p.V_max, et)
    gap = approx_gap if approx_gap is not None else gap_bound
    reasons = []
    if xi1 >= 1 or xi3 >= 1:
        reasons.append(f"xi1={xi1:.3g}, xi3={xi3:.3g} not both < 1")
    if gap is None:
        reasons.append(f"approximation gap unavailable (eta={et:.3g} > 1/2)" if lambda_star is not None else "approximation gap not supplied")
    rhs = oracle_rhs(xi1, xi2, xi3, m2, gap) if gap is not None else None
    status = "feasible" if rhs is not None else "infeasible: " + "; ".join(reasons)
    return BoundsReport(
        B=p.B, m=p.m, n=n, d=p.d, delta=delta, V_min=p.V_min, V_max=p.V_max,
        M_F=mf, M_1=m1, M_2=m2, Lambda1=lam1, Lambda2=lam2,
        rademacher_bound_1=r1, rademacher_bound_2=r2,
        xi1=xi1, xi2=xi2, xi3=xi3, eta=et,
        approx_gap_bound=gap_bound, oracle_rhs=rhs, status=status,
    )


def sweep_bounds(V: CosineSeries, truth, n_list, B: float, delta: float = 0.1) -> dict[int, dict]:
    """Oracle-inequality bookkeeping for each sample size of a sweep (``m = ceil(sqrt(n))``)."""
    from .reference import potential_range

    vmin, vmax = potential_range(V)
    out = {}
    for n in n_list:
        p = ClassParams(B=B, m=math.ceil(math.sqrt(n)), d=V.dim, V_max=vmax, V_min=vmin)
        out[int(n)] = bounds_report(p, int(n), delta, lambda_star=truth.lambda0).to_dict()
    return out
