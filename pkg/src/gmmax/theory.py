"""Phase transition, the five-variable nonlinear system, and performance maps.

The separability threshold is delta_star(kappa) = inf_{s, r>0} c_k(s,r)/r^2.
Above it, the asymptotic behavior of the margin maximizer is captured by five
scalars (alpha, sigma, beta, gamma, tau) solving

    corr        = alpha * kappa^2
    gauss_corr  = sqrt(c_k(alpha, sigma) / delta)
    sq_norm     = alpha^2 kappa^2 + sigma^2
    dc/dalpha   = (2 kappa^2 gamma / beta) sqrt(c_k)
    dc/dsigma   = (2 / (beta tau)) sqrt(c_k)

with (corr, gauss_corr, sq_norm) the expected prox statistics from the
potentials module. Specialized solvers use the closed Q/chi statistics; the
general solver runs the same damped Newton on quadrature-backed statistics,
giving an independent cross-check. Generalization error and support-recovery
probabilities are closed-form maps of the solution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import DomainError, RngStream, chi, normal_tail
from .potentials import Potential, Prior, prox_statistics
from .summary import STANDARD_LOGISTIC, LinkFunction, eval_c

__all__ = [
    "ModelSpec",
    "FixedPointVars",
    "TheoryReport",
    "SolverError",
    "InfeasibleRegimeError",
    "delta_star",
    "solve_l2",
    "solve_l1",
    "solve_linf",
    "solve_general",
    "solve_system",
    "system_residuals",
    "generalization_error",
    "support_recovery",
    "theory_report",
]


class SolverError(RuntimeError):
    """Nonlinear solve failed; carries the last residual vector."""

    def __init__(self, message: str, residuals=None, vars=None):
        super().__init__(message)
        self.residuals = residuals
        self.vars = vars


class InfeasibleRegimeError(ValueError):
    """delta <= delta_star(kappa): the margin program has no feasible point."""


@dataclass(frozen=True)
class ModelSpec:
    """Signal strength kappa, overparameterization ratio delta = p/n, link."""

    kappa: float
    delta: float
    link: LinkFunction = STANDARD_LOGISTIC

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class FixedPointVars:
    alpha: float
    sigma: float
    beta: float
    gamma: float
    tau: float

    def __post_init__(self):
        if self.sigma <= 0 or self.beta <= 0 or self.tau <= 0:
            raise ValueError("sigma, beta, tau must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.sigma, self.beta, self.gamma, self.tau])


@dataclass(frozen=True)
class TheoryReport:
    vars: FixedPointVars
    gen_error: float
    correlation: float
    norm: float
    support: Optional[tuple[float, float]] = None


# ---------------------------------------------------------------------------
# Phase transition


def _golden_min(fn: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-9, max_iter: int = 200):
    """Golden-section minimum of a unimodal fn on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return (c, fc) if fc < fd else (d, fd)


def _ratio_objective(kappa: float, link: LinkFunction):
    def fn(s: float, log_r: float) -> float:
        r = math.exp(log_r)
        return eval_c(kappa, s, r, link).value / (r * r)

    return fn


_LOG_R_LO, _LOG_R_HI = -7.0, 18.0


def _coarse_scan(kappa: float, link: LinkFunction, n_s: int = 120, n_r: int = 160):
    """Vectorized c/r^2 over a wide (s, log r) grid; returns grids + values."""
    from .summary import default_grid

    s_grid = np.concatenate([[0.0], np.geomspace(1e-3, 3e3, n_s - 1)])
    log_r = np.linspace(_LOG_R_LO, _LOG_R_HI, n_r)
    r = np.exp(log_r)
    grid = default_grid()
    z, w = grid.nodes, grid.weights
    p_plus = link(kappa * z)
    vals = np.empty((len(s_grid), n_r))
    for i, s in enumerate(s_grid):
        total = np.zeros(n_r)
        for y, p in ((1.0, p_plus), (-1.0, 1.0 - p_plus)):
            a = 1.0 - kappa * s * z * y
            u = -a[:, None] / r[None, :]
            total += (w * p) @ chi(u)
        vals[i] = total  # already c / r^2 because chi(-a/r) = c_inner / r^2
    return s_grid, log_r, vals


_DELTA_STAR_CACHE: dict[tuple[float, str], float] = {}


def delta_star(kappa: float, link: LinkFunction = STANDARD_LOGISTIC) -> float:
    """Separability threshold inf_{s, r>0} c_k(s, r) / r^2, in (0, 0.5].

    Coarse 2-D scan of the quasiconvex ratio, then coordinate-descent
    refinement with golden sections from the best multistart points. The
    r -> inf boundary value 1/2 is always a candidate.
    """
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    key = (float(kappa), link.tag)
    if key in _DELTA_STAR_CACHE:
        return _DELTA_STAR_CACHE[key]

    fn = _ratio_objective(kappa, link)
    s_grid, log_r, vals = _coarse_scan(kappa, link)

    flat_order = np.argsort(vals, axis=None)
    starts = []
    for idx in flat_order:
        i, j = np.unravel_index(idx, vals.shape)
        if all(abs(math.log(s_grid[i] + 1e-6) - math.log(s + 1e-6)) > 0.5
               or abs(log_r[j] - lr) > 0.5 for s, lr, _ in starts):
            starts.append((s_grid[i], log_r[j], vals[i, j]))
        if len(starts) >= 5:
            break

    best = 0.5  # r -> inf limit of c/r^2 for any s
    ds = math.log(s_grid[-1] / s_grid[1]) / (len(s_grid) - 2)
    dr = (log_r[-1] - log_r[0]) / (len(log_r) - 1)
    for s0, lr0, _ in starts:
        s, lr = s0, lr0
        for _ in range(4):
            s_lo = max(0.0, s - 3.0 * ds * max(s, 1e-3))
            s_hi = s + 3.0 * ds * max(s, 1e-3)
            s, _ = _golden_min(lambda x: fn(x, lr), s_lo, s_hi)
            lr, val = _golden_min(lambda x: fn(s, x),
                                  max(_LOG_R_LO, lr - 3.0 * dr),
                                  min(_LOG_R_HI, lr + 3.0 * dr))
        best = min(best, val)

    best = min(best, 0.5)
    _DELTA_STAR_CACHE[key] = best
    return best


# ---------------------------------------------------------------------------
# Nonlinear system


def system_residuals(
    vars: FixedPointVars,
    prior: Prior,
    potential: Potential,
    spec: ModelSpec,
    stats_method: str = "closed",
    binary_rule: str = "near-tail",
    quad_order: int = 40,
) -> np.ndarray:
    """Scaled residual vector of the five equations at ``vars``.

    Each residual is divided by max(1, |rhs|) so a uniform tolerance applies.
    """
    alpha, sigma, beta, gamma, tau = vars.as_array()
    kappa, delta = spec.kappa, spec.delta
    stats = prox_statistics(
        prior, potential, alpha, sigma, beta, gamma, tau, delta,
        method=stats_method, quad_order=quad_order, binary_rule=binary_rule,
    )
    ce = eval_c(kappa, alpha, sigma, spec.link)
    sqrt_c = math.sqrt(max(ce.value, 0.0))
    rhs = np.array([
        alpha * kappa**2,
        sqrt_c / math.sqrt(delta),
        alpha**2 * kappa**2 + sigma**2,
        2.0 * kappa**2 * gamma * sqrt_c / beta,
        2.0 * sqrt_c / (beta * tau),
    ])
    lhs = np.array([stats.corr, stats.gauss_corr, stats.sq_norm, ce.d_s, ce.d_r])
    return (lhs - rhs) / np.maximum(1.0, np.abs(rhs))


def _damped_newton(residual_fn, x0: np.ndarray, tol: float, max_iter: int = 120,
                   fd_step: float = 1e-6):
    """Damped Newton with central-difference Jacobian and backtracking.

    The step scale backtracks by halving down to a 0.05 floor whenever the
    residual norm would grow; two consecutive rejections at the floor end
    the attempt. Domain errors at wild trial points count as rejections.
    """

    raw_residual = residual_fn

    def safe_residual(x: np.ndarray) -> np.ndarray:
        try:
            out = raw_residual(x)
        except (ValueError, OverflowError, FloatingPointError, RuntimeError):
            return np.full(len(x), 1e12)
        return np.where(np.isfinite(out), out, 1e12)

    residual_fn = safe_residual
    x = np.asarray(x0, dtype=float).copy()
    f = residual_fn(x)
    floor_hits = 0
    for _ in range(max_iter):
        err = np.max(np.abs(f))
        if err <= tol:
            return x, f, True
        n = len(x)
        jac = np.empty((n, n))
        for j in range(n):
            h = fd_step * (1.0 + abs(x[j]))
            xp = x.copy(); xp[j] += h
            xm = x.copy(); xm[j] -= h
            jac[:, j] = (residual_fn(xp) - residual_fn(xm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, f, rcond=None)[0]
        norm = np.linalg.norm(step)
        if not np.isfinite(norm):
            return x, f, False
        if norm > 20.0:
            step *= 20.0 / norm
        scale = 1.0
        fnorm = np.linalg.norm(f)
        improved = False
        while scale >= 0.05:
            x_new = x - scale * step
            f_new = residual_fn(x_new)
            if np.all(np.isfinite(f_new)) and np.linalg.norm(f_new) < fnorm:
                x, f = x_new, f_new
                improved = True
                break
            scale *= 0.5
        if not improved:
            floor_hits += 1
            if floor_hits >= 2:
                return x, f, False
            x = x - 0.05 * step
            f_try = residual_fn(x)
            if not np.all(np.isfinite(f_try)):
                return x, f, False
            f = f_try
        else:
            floor_hits = 0
    return x, f, np.max(np.abs(f)) <= tol


def _pack5(alpha, sigma, beta, gamma, tau):
    return np.array([alpha, math.log(sigma), math.log(beta), gamma, math.log(tau)])


def _unpack5(x) -> FixedPointVars:
    return FixedPointVars(
        alpha=float(x[0]), sigma=float(math.exp(x[1])), beta=float(math.exp(x[2])),
        gamma=float(x[3]), tau=float(math.exp(x[4])),
    )


def _check_feasible(spec: ModelSpec):
    ds = delta_star(spec.kappa, spec.link)
    if spec.delta <= ds:
        raise InfeasibleRegimeError(
            f"delta={spec.delta} is at or below delta_star={ds:.6f}; "
            "the separability condition fails"
        )
    if spec.delta < 1.05 * ds:
        warnings.warn(
            f"delta={spec.delta} is within 5% of delta_star={ds:.6f}; "
            "fixed-point variables grow and conditioning degrades near the boundary",
            RuntimeWarning,
        )


def solve_system(
    prior: Prior,
    potential: Potential,
    spec: ModelSpec,
    stats_method: str = "closed",
    binary_rule: str = "near-tail",
    tol: float = 1e-8,
    restarts: int = 8,
    x0: Optional[FixedPointVars] = None,
    quad_order: int = 40,
) -> FixedPointVars:
    """Solve the five-equation system by damped Newton with restarts."""
    _check_feasible(spec)

    def residual(x: np.ndarray) -> np.ndarray:
        return system_residuals(_unpack5(x), prior, potential, spec,
                                stats_method, binary_rule, quad_order)

    if x0 is not None:
        start = _pack5(*x0.as_array())
    else:
        start = _pack5(1.0, 1.0, 1.0, -1.0, 1.0)
    x, f, ok = _damped_newton(residual, start, tol)
    attempt = 0
    rng = RngStream(20240917, 0).generator()
    while not ok and attempt < restarts:
        attempt += 1
        jitter = rng.normal(scale=0.25 * attempt, size=5)
        x_try = _pack5(1.0, 1.0, 1.0, -1.0, 1.0) + jitter
        x, f, ok = _damped_newton(residual, x_try, tol)
    if not ok:
        raise SolverError(
            f"fixed-point solve failed after {restarts} restarts "
            f"(max residual {np.max(np.abs(f)):.3e})",
            residuals=f, vars=_unpack5(x),
        )
    return _unpack5(x)


def solve_l2(spec: ModelSpec, tol: float = 1e-8,
             x0: Optional[FixedPointVars] = None) -> FixedPointVars:
    """Squared-norm potential: three equations in (alpha, sigma, tau).

    beta = (1 + sigma*tau) / (tau*sqrt(delta)) and gamma = -alpha recover the
    remaining variables; the full five-equation residuals are re-checked.
    """
    _check_feasible(spec)
    kappa, delta = spec.kappa, spec.delta

    def residual(x: np.ndarray) -> np.ndarray:
        alpha = x[0]
        sigma = math.exp(x[1])
        tau = math.exp(x[2])
        ce = eval_c(kappa, alpha, sigma, spec.link)
        sqrt_c = math.sqrt(max(ce.value, 0.0))
        st = sigma * tau
        rhs = np.array([
            sigma * math.sqrt(delta),
            -2.0 * kappa**2 * alpha * tau * sigma * delta / (1.0 + st),
            2.0 * sigma * delta / (1.0 + st),
        ])
        lhs = np.array([sqrt_c, ce.d_s, ce.d_r])
        return (lhs - rhs) / np.maximum(1.0, np.abs(rhs))

    if x0 is not None:
        start = np.array([x0.alpha, math.log(x0.sigma), math.log(x0.tau)])
    else:
        start = np.array([1.0, 0.0, 0.0])
    x, f, ok = _damped_newton(residual, start, tol)
    attempt = 0
    rng = RngStream(20240917, 1).generator()
    while not ok and attempt < 8:
        attempt += 1
        x, f, ok = _damped_newton(residual, start + rng.normal(scale=0.25 * attempt, size=3), tol)
    if not ok:
        raise SolverError("squared-norm system failed to converge", residuals=f)
    alpha = float(x[0])
    sigma = float(math.exp(x[1]))
    tau = float(math.exp(x[2]))
    beta = (1.0 + sigma * tau) / (tau * math.sqrt(delta))
    vars = FixedPointVars(alpha=alpha, sigma=sigma, beta=beta, gamma=-alpha, tau=tau)
    full = system_residuals(vars, Prior.gaussian(max(kappa, 1e-12)), Potential.L2_SQUARED, spec)
    if np.max(np.abs(full)) > 10.0 * tol:
        raise SolverError("recovered variables violate the five-equation system",
                          residuals=full, vars=vars)
    return vars


def solve_l1(spec: ModelSpec, s: float, tol: float = 1e-8,
             x0: Optional[FixedPointVars] = None) -> FixedPointVars:
    """l1 potential under the s-sparse Gaussian prior (s=1 is iid Gaussian)."""
    if not (0.0 < s <= 1.0):
        raise ValueError(f"sparsity must be in (0, 1], got {s}")
    prior = Prior.gaussian(spec.kappa) if s == 1.0 else Prior.sparse_gaussian(s, spec.kappa)
    return solve_system(prior, Potential.L1, spec, tol=tol, x0=x0)


def solve_linf(spec: ModelSpec, prior: Prior, tol: float = 1e-8,
               binary_rule: str = "near-tail",
               x0: Optional[FixedPointVars] = None) -> FixedPointVars:
    """Dimension-scaled sup-norm potential; lambda root nested per residual."""
    return solve_system(prior, Potential.LINF_SCALED, spec, tol=tol,
                        binary_rule=binary_rule, x0=x0)


def solve_general(prior: Prior, potential: Potential, spec: ModelSpec,
                  tol: float = 1e-8, x0: Optional[FixedPointVars] = None) -> FixedPointVars:
    """Generic solver on quadrature-backed prox statistics (independent path)."""
    return solve_system(prior, potential, spec, stats_method="quadrature",
                        tol=tol, x0=x0)


# ---------------------------------------------------------------------------
# Performance maps


def generalization_error(alpha: float, sigma: float, kappa: float) -> float:
    """Asymptotic misclassification rate acos(k a / sqrt(k^2 a^2 + s^2)) / pi."""
    if kappa <= 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    norm = math.hypot(kappa * alpha, sigma)
    if norm == 0.0:
        raise DomainError("alpha and sigma cannot both be zero")
    ratio = min(1.0, max(-1.0, kappa * alpha / norm))
    return math.acos(ratio) / math.pi


def support_recovery(vars: FixedPointVars, spec: ModelSpec, s: float) -> tuple[float, float]:
    """Asymptotic miss and false-alarm probabilities of the thresholded
    sparse estimate: P1 = 1 - 2Q(t1), P2 = 2Q(t2)."""
    if not (0.0 < s <= 1.0):
        raise ValueError(f"sparsity must be in (0, 1], got {s}")
    alpha, sigma, beta, gamma, tau = vars.as_array()
    st = sigma * tau
    a = alpha - st * gamma
    t1 = st / math.sqrt((spec.kappa**2 / s) * a * a + beta**2 * st**2 * spec.delta)
    t2 = 1.0 / (beta * math.sqrt(spec.delta))
    p1 = 1.0 - 2.0 * float(normal_tail(t1))
    p2 = 2.0 * float(normal_tail(t2))
    return min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)


def theory_report(vars: FixedPointVars, spec: ModelSpec,
                  s: Optional[float] = None) -> TheoryReport:
    """Bundle the derived performance quantities for a solved system."""
    corr = spec.kappa**2 * vars.alpha
    norm = math.hypot(spec.kappa * vars.alpha, vars.sigma)
    ge = generalization_error(vars.alpha, vars.sigma, spec.kappa)
    support = support_recovery(vars, spec, s) if s is not None else None
    return TheoryReport(vars=vars, gen_error=ge, correlation=corr, norm=norm,
                        support=support)
