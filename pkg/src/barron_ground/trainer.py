"""Projected first-order minimization of the empirical Rayleigh quotient.

Default coupling follows the generalization analysis: ``m = ceil(sqrt(n))``,
``tau = sqrt(m)`` and budget ``B = ||u*||_B`` taken from the reference
ground state when one is supplied.

Besides plain projected steps, the trainer can periodically refit the outer
(linear) parameters exactly: for fixed inner weights the quotient is a
generalized Rayleigh quotient in ``(c, gamma)``, minimized by the lowest
eigenvector of a small ``(m+1) x (m+1)`` pencil.  Since the quotient is
scale invariant the minimizer can always be rescaled into the class.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .ansatz import TwoLayerNetwork, backprop, forward, init, project, rayleigh_and_gradient
from .errors import InvalidInputError, NumericError
from .estimators import EvalReport, error_metrics, sample, stream_seed, tensor_gauss
from .reference import validate_potential
from .spectral import CosineSeries, barron_norm

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "pgd")
EXCESS_FLOOR = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    n: int
    m: int | None = None
    B: float | None = None
    steps: int = 20_000
    lr: float = 1e-2
    lr_final: float = 1e-4
    optimizer: str = "adam"
    seed: int = 0
    refit_every: int = 0
    resample: str = "fixed"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if self.m is not None and not 1 <= self.m <= self.n:
            raise InvalidInputError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.B is not None and not self.B > 0:
            raise InvalidInputError("B must be positive")
        if self.steps < 1 or not self.lr > 0 or not self.lr_final > 0:
            raise InvalidInputError("need steps >= 1 and positive learning rates")
        if self.optimizer not in OPTIMIZERS:
            raise InvalidInputError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.refit_every < 0:
            raise InvalidInputError("refit_every must be >= 0")
        if self.resample != "fixed":
            raise InvalidInputError("only the fixed sample-set policy is supported")

    @property
    def width(self) -> int:
        return self.m if self.m is not None else math.ceil(math.sqrt(self.n))

    def resolved(self, B: float) -> "TrainConfig":
        return dataclasses.replace(self, m=self.width, B=B)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise InvalidInputError("train config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InvalidInputError(f"unknown train config key(s): {unknown}")
        if "n" not in data:
            raise InvalidInputError("train config needs 'n'")
        return cls(**data)


@dataclass(eq=False)
class TrainResult:
    net: TwoLayerNetwork
    trace: np.ndarray
    config: TrainConfig
    wall_time: float
    best_loss: float
    report: EvalReport | None = None

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "config": self.config.to_dict() | {"tau": self.net.tau},
            "best_loss": self.best_loss,
            "network": self.net.to_dict(),
            "report": self.report.to_dict() if self.report is not None else None,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def cosine_lr(step: int, steps: int, lr: float, lr_final: float) -> float:
    if steps <= 1:
        return lr
    return lr_final + 0.5 * (lr - lr_final) * (1.0 + math.cos(math.pi * step / (steps - 1)))


class _Adam:
    def __init__(self, size: int, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m1 = np.zeros(size)
        self.m2 = np.zeros(size)
        self.b1, self.b2, self.eps = beta1, beta2, eps
        self.k = 0

    def direction(self, g: np.ndarray) -> np.ndarray:
        self.k += 1
        self.m1 = self.b1 * self.m1 + (1 - self.b1) * g
        self.m2 = self.b2 * self.m2 + (1 - self.b2) * g * g
        mhat = self.m1 / (1 - self.b1**self.k)
        vhat = self.m2 / (1 - self.b2**self.k)
        return mhat / (np.sqrt(vhat) + self.eps)


def _outer_features(net: TwoLayerNetwork, X: np.ndarray):
    """Design matrices of ``u`` and ``grad u`` with respect to ``(c, gamma)``."""
    f = net.features(X)
    n = len(X)
    phi = np.hstack([np.ones((n, 1)), f.s])
    # dphi[:, k, j] = d/dx_k of feature j
    dphi = np.concatenate([np.zeros((n, net.dim, 1)), f.sig[:, None, :] * net.w.T[None, :, :]], axis=2)
    return phi, dphi


def _reduced_basis(gram: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    lam, Q = scipy.linalg.eigh(gram)
    keep = lam > rtol * lam[-1]
    return Q[:, keep] / np.sqrt(lam[keep])


def rescale_outer(net: TwoLayerNetwork, c: float, gamma: np.ndarray, norm: float) -> TwoLayerNetwork:
    """Scale ``(c, gamma)`` toward unit norm as far as the class constraints allow."""
    B = net.B
    alpha = 1.0 / norm
    if abs(c) > 0:
        alpha = min(alpha, 2 * B / abs(c))
    total = float(np.abs(gamma).sum())
    if total > 0:
        alpha = min(alpha, 4 * B / total)
    return project(net.replace(c=alpha * c, gamma=alpha * np.asarray(gamma)))


def refit_outer_rayleigh(net: TwoLayerNetwork, X: np.ndarray, v: np.ndarray) -> TwoLayerNetwork:
    """Exact minimizer of the empirical quotient over ``(c, gamma)`` for fixed inner weights."""
    n = len(X)
    phi, dphi = _outer_features(net, X)
    gram = phi.T @ phi / n
    flat = dphi.reshape(-1, dphi.shape[2])
    stiff = (flat.T @ flat + phi.T @ (v[:, None] * phi)) / n
    P = _reduced_basis(gram)
    _, vecs = scipy.linalg.eigh(P.T @ stiff @ P, subset_by_index=[0, 0])
    a = P @ vecs[:, 0]
    u = phi @ a
    if u.sum() < 0:
        a = -a
    return rescale_outer(net, a[0], a[1:], math.sqrt(float(np.mean(u * u))))


def _normalize(net: TwoLayerNetwork, X: np.ndarray) -> TwoLayerNetwork:
    u = net(X)
    norm = math.sqrt(float(np.mean(u * u)))
    if not norm > 0:
        return net
    return rescale_outer(net, net.c, net.gamma, norm)


def _descend(net, objective, cfg: TrainConfig, step_hook=None, guard=None):
    """Generic projected descent; ``objective(net) -> (loss, ParamGradient)``."""
    opt = _Adam(net.to_vector().size) if cfg.optimizer == "adam" else None
    best_loss, best_net = math.inf, net
    trace = np.empty(cfg.steps)
    high = 0
    for k in range(cfg.steps):
        loss, grad = objective(net)
        if not math.isfinite(loss):
            raise NumericError(f"non-finite loss at step {k}")
        trace[k] = loss
        if loss < best_loss:
            best_loss, best_net = loss, net
        if guard is not None:
            high = high + 1 if loss > guard else 0
            if high >= 100:
                raise NumericError(f"loss above {guard:.3g} for 100 consecutive steps (step {k})")
        g = grad.to_vector()
        direction = opt.direction(g) if opt is not None else g
        lr = cosine_lr(k, cfg.steps, cfg.lr, cfg.lr_final)
        net = project(net.from_vector(net.to_vector() - lr * direction), seed=cfg.seed)
        if step_hook is not None:
            net = step_hook(k, net)
    loss, _ = objective(net)
    if loss < best_loss:
        best_loss, best_net = loss, net
    return best_net, best_loss, trace


def default_budget(truth) -> float:
    return barron_norm(truth.ustar, 2)


def train(V: CosineSeries, cfg: TrainConfig, truth=None) -> TrainResult:
    """Minimize the empirical quotient on one fixed sample set; returns the best iterate."""
    start = time.perf_counter()
    vmin, vmax = validate_potential(V)
    if cfg.B is None and truth is None:
        raise InvalidInputError("budget B must be given when no reference ground state is supplied")
    cfg = cfg.resolved(cfg.B if cfg.B is not None else default_budget(truth))
    d = V.dim
    X = sample(d, cfg.n, stream_seed(cfg.seed, "sampling")).points
    v = V(X)
    net = init(d, cfg.m, cfg.B, stream_seed(cfg.seed, "init"))
    if cfg.refit_every:
        net = refit_outer_rayleigh(net, X, v)
    net = _normalize(net, X)

    def objective(current):
        return rayleigh_and_gradient(current, X, v)

    def hook(k, current):
        if cfg.refit_every and (k + 1) % cfg.refit_every == 0:
            current = refit_outer_rayleigh(current, X, v)
        return _normalize(current, X)

    best, best_loss, trace = _descend(net, objective, cfg, hook, guard=10 * vmax)
    report = error_metrics(best, truth, V) if truth is not None else None
    return TrainResult(best, trace, cfg, time.perf_counter() - start, best_loss, report)


# sweeps


@dataclass
class SweepResult:
    rows: list[dict]
    medians: dict[int, float]
    slope: float | None
    bounds: dict[int, dict] = field(default_factory=dict)

    CSV_FIELDS = ("seed", "n", "m", "energy", "excess", "p_perp_l2", "p_perp_h1")


def loglog_slope(xs, ys, floor: float = EXCESS_FLOOR) -> float | None:
    """Least-squares slope of log y against log x; None when every y is below ``floor``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if np.all(ys < floor):
        return None
    ys = np.maximum(ys, floor)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def sweep(V: CosineSeries, n_list, seeds, template: TrainConfig, truth, threads: int = 1, bounds_delta: float | None = 0.1) -> SweepResult:
    """Train over a grid of sample sizes and seeds with ``m = ceil(sqrt(n))``.

    Reports per-cell metrics, the median excess per ``n``, its log-log slope
    and, when ``bounds_delta`` is set, the oracle-inequality right-hand side
    for each ``n`` (flagged infeasible where its preconditions fail).
    """
    from .theory_bounds import sweep_bounds

    n_list = [int(n) for n in n_list]
    seeds = [int(s) for s in seeds]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidInputError("n_list must be increasing with at least 3 entries")
    if len(seeds) < 5 or len(set(seeds)) != len(seeds):
        raise InvalidInputError("sweep needs at least 5 distinct seeds")
    if truth is None:
        raise InvalidInputError("sweep needs the reference ground state")
    cells = sorted((n, s) for n in n_list for s in seeds)

    def run(cell):
        n, s = cell
        cfg = dataclasses.replace(template, n=n, m=None, seed=s)
        res = train(V, cfg, truth)
        log.info("sweep cell n=%d seed=%d excess=%.3e (%.1fs)", n, s, res.report.excess, res.wall_time)
        return res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    rows = []
    for (n, s), res in zip(cells, results):
        r = res.report
        rows.append(dict(seed=s, n=n, m=res.config.m, energy=r.energy, excess=r.excess, p_perp_l2=r.p_perp_l2, p_perp_h1=r.p_perp_h1))
    medians = {n: float(np.median([r["excess"] for r in rows if r["n"] == n])) for n in n_list}
    slope = loglog_slope(n_list, [medians[n] for n in n_list])
    bounds = {}
    if bounds_delta is not None:
        bounds = sweep_bounds(V, truth, n_list, template.B or default_budget(truth), bounds_delta)
    return SweepResult(rows, medians, slope, bounds)


# approximation check


@dataclass
class ApproxRow:
    m: int
    best_error: float
    median_error: float
    errors: list[float]
    eta: float


def eta_bound(B: float, m: int) -> float:
    """``B (6 ln m + 30) / sqrt(m)``."""
    return B * (6.0 * math.log(m) + 30.0) / math.sqrt(m)


def h1_distance(u, target: CosineSeries, rule) -> float:
    du = u(rule.nodes) - target(rule.nodes)
    dg = u.gradient(rule.nodes) - target.gradient(rule.nodes)
    return math.sqrt(float(rule.weights @ (du * du + (dg * dg).sum(axis=1))))


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x : |x|_1 <= radius}`` (sort-based)."""
    if np.abs(v).sum() <= radius:
        return v
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(u) + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def refit_outer_h1(net: TwoLayerNetwork, target_vals, target_grads, rule, iters: int = 3000) -> TwoLayerNetwork:
    """H1 least-squares fit of ``(c, gamma)`` over the class constraints.

    Accelerated projected gradient on the quadratic; the gamma-block uses the
    exact l1-ball projection, c is clamped.
    """
    phi, dphi = _outer_features(net, rule.nodes)
    q = rule.weights
    flat = dphi.reshape(-1, dphi.shape[2])
    qd = np.repeat(q, net.dim)
    gram = phi.T @ (q[:, None] * phi) + flat.T @ (qd[:, None] * flat)
    rhs = phi.T @ (q * target_vals) + flat.T @ (qd * target_grads.ravel())
    L = float(scipy.linalg.eigvalsh(gram, subset_by_index=[len(gram) - 1, len(gram) - 1])[0])
    B = net.B

    def proj(a):
        return np.concatenate([[min(max(a[0], -2 * B), 2 * B)], project_l1_ball(a[1:], 4 * B)])

    # unconstrained optimum from the weighted design matrix (better conditioned
    # than the normal equations); taken as is when it already lies in the class
    sq, sqd = np.sqrt(q), np.sqrt(qd)
    A = np.vstack([sq[:, None] * phi, sqd[:, None] * flat])
    b = np.concatenate([sq * target_vals, sqd * target_grads.ravel()])
    coef = scipy.linalg.lstsq(A, b, cond=1e-13, lapack_driver="gelsd")[0]
    if abs(coef[0]) <= 2 * B and np.abs(coef[1:]).sum() <= 4 * B:
        return project(net.replace(c=coef[0], gamma=coef[1:]))
    a = proj(np.concatenate([[net.c], net.gamma]))
    y, tk = a.copy(), 1.0
    for _ in range(iters):
        a_new = proj(y - (gram @ y - rhs) / L)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * tk * tk))
        y = a_new + (tk - 1) / t_new * (a_new - a)
        a, tk = a_new, t_new
    return project(net.replace(c=a[0], gamma=a[1:]))


def fit_h1(target: CosineSeries, m: int, B: float, seed: int, steps: int, rule, lr=1e-2, lr_final=1e-4, refit_every: int = 0):
    """Train one network of width ``m`` toward ``target`` in the H1 norm (quadrature least squares)."""
    X = rule.nodes
    q = rule.weights
    fv, fg = target(X), target.gradient(X)
    cfg = TrainConfig(n=max(m, 1), m=m, B=B, steps=steps, lr=lr, lr_final=lr_final, seed=seed, refit_every=refit_every)
    net = init(target.dim, m, B, stream_seed(seed, "init"))
    if refit_every:
        net = refit_outer_h1(net, fv, fg, rule)

    def objective(current):
        u, g, f = forward(current, X)
        e, h = u - fv, g - fg
        loss = float(q @ (e * e + (h * h).sum(axis=1)))
        return loss, backprop(current, f, 2 * q * e, 2 * q[:, None] * h)

    def hook(k, current):
        if refit_every and (k + 1) % refit_every == 0:
            return refit_outer_h1(current, fv, fg, rule)
        return current

    best, _, _ = _descend(net, objective, cfg, hook)
    return best


def approximation_check(target: CosineSeries, m_list, seeds, steps: int = 2000, B: float | None = None, refit_every: int = 100, rule=None, eval_rule=None) -> list[ApproxRow]:
    """Trained H1 errors against the bound ``eta(B, m)`` for each width."""
    B = barron_norm(target, 2) if B is None else B
    if not B > 0:
        raise InvalidInputError("target must have a positive Barron norm")
    rule = rule or tensor_gauss(target.dim, 64 if target.dim == 1 else 24)
    eval_rule = eval_rule or tensor_gauss(target.dim, 128 if target.dim == 1 else 32)
    rows = []
    for m in m_list:
        errs = [h1_distance(fit_h1(target, m, B, s, steps, rule, refit_every=refit_every), target, eval_rule) for s in seeds]
        rows.append(ApproxRow(m, min(errs), float(np.median(errs)), errs, eta_bound(B, m)))
    return rows
