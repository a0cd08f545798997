"""Finite-size synthetic instances and constrained margin solvers.

Datasets follow the logistic-link Gaussian design: x_i ~ N(0, I_p/p), the
ground truth is drawn from a Prior and rescaled to ||w*|| = kappa*sqrt(p)
exactly, and y_i = +1 with probability rho(x_i^T w*). Two solvers find the
margin maximizer min psi(w) s.t. y_i x_i^T w >= 1: a first-order primal-dual
splitting (any potential) and mirror descent on the logistic loss (strongly
convex potentials; the squared-norm map ships), whose normalized iterates
converge in direction to the same classifier on separable data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .numerics import DomainError, RngStream
from .potentials import Potential, Prior, prox, prox_sup_norm, psi_value
from .summary import LinkFunction
from .theory import ModelSpec

__all__ = [
    "Dataset",
    "SolveResult",
    "EmpiricalReport",
    "generate_dataset",
    "separability_test",
    "solve_primal_dual",
    "solve_mirror_descent",
    "spectral_norm",
    "evaluate",
]


@dataclass(frozen=True)
class Dataset:
    """Synthetic instance; features holds the x_i as columns (p x n)."""

    features: np.ndarray
    labels: np.ndarray
    ground_truth: np.ndarray
    spec: ModelSpec
    prior: Prior
    seed: RngStream

    @property
    def p(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def margin_matrix(self) -> np.ndarray:
        """Rows y_i x_i^T of the constraint system (n x p)."""
        return (self.features * self.labels).T


@dataclass
class SolveResult:
    estimate: np.ndarray
    iterations: int
    primal_residual: float
    duality_gap: Optional[float]
    converged: bool
    objective: float = math.nan
    angles: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EmpiricalReport:
    gen_error: float
    correlation: float
    norm: float
    support_miss: Optional[float] = None
    support_false_alarm: Optional[float] = None


def generate_dataset(p: int, n: int, prior: Prior, link: LinkFunction,
                     rng: RngStream) -> Dataset:
    """Draw features, ground truth (rescaled to ||w*|| = kappa*sqrt(p)), labels."""
    if p < 1 or n < 1:
        raise ValueError("p and n must be >= 1")
    gen = rng.generator()
    features = gen.standard_normal((p, n)) / math.sqrt(p)
    w = prior.sample(gen, p)
    for _ in range(100):
        if np.linalg.norm(w) > 0:
            break
        w = prior.sample(gen, p)
    else:
        raise RuntimeError("prior produced the zero vector repeatedly")
    w = w * (prior.kappa * math.sqrt(p) / np.linalg.norm(w))
    margins = features.T @ w
    labels = np.where(gen.random(n) < link(margins), 1.0, -1.0)
    spec = ModelSpec(kappa=prior.kappa, delta=p / n, link=link)
    return Dataset(features=features, labels=labels, ground_truth=w,
                   spec=spec, prior=prior, seed=rng)


def spectral_norm(matrix: np.ndarray, tol: float = 1e-10, max_iter: int = 500) -> float:
    """Largest singular value by power iteration on the Gram matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0 or not np.any(m):
        return 0.0
    gram = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(0x5EED)))
    v = gen.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(max_iter):
        w = gram @ v
        new_value = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new_value - value) <= tol * max(1.0, abs(new_value)):
            value = new_value
            break
        value = new_value
    return math.sqrt(max(value, 0.0))


def separability_test(data: Dataset, budget: Optional[int] = None):
    """Gradient descent on the logistic loss with a positive-margin stop.

    Declares separable as soon as an iterate w has min_i y_i x_i^T w > 0 and
    returns that normalized witness; otherwise (budget exhausted) declares
    non-separable. One-sided: barely separable instances can be missed.
    """
    if budget is None:
        budget = 20 * data.p
    if budget < 1:
        raise ValueError("budget must be >= 1")
    a = data.margin_matrix()
    n = data.n
    smax = spectral_norm(data.features)
    step = 4.0 * n / max(smax**2, 1e-12)
    w = np.zeros(data.p)
    margins = np.zeros(n)
    loss = math.log(2.0)
    for _ in range(budget):
        grad = -(a.T @ expit(-margins)) / n
        w_new = w - step * grad
        margins_new = a @ w_new
        if margins_new.min() > 0:
            w_new /= np.linalg.norm(w_new)
            return True, w_new
        loss_new = float(np.mean(np.logaddexp(0.0, -margins_new)))
        if loss_new <= loss:
            w, margins, loss = w_new, margins_new, loss_new
            step *= 1.1
        else:
            step *= 0.5
            if step < 1e-16:
                break
    return False, None


def _dual_value(potential: Potential, lam: np.ndarray, a: np.ndarray,
                scale: float) -> float:
    """Best dual objective lam^T 1 - psi*(A^T lam) after feasibility rescaling."""
    v = a.T @ lam
    total = float(lam.sum())
    if potential is Potential.L2_SQUARED:
        return total - float(v @ v) / (2.0 * scale)
    if potential is Potential.L1:
        denom = np.max(np.abs(v))
    else:
        denom = float(np.abs(v).sum())
    if denom <= scale:
        return total
    return total * scale / denom


def _apply_prox(potential: Potential, v: np.ndarray, t: float) -> np.ndarray:
    # plain sup norm here: the constraint-form program is invariant to the
    # dimension scaling the asymptotic formulas need
    if potential is Potential.LINF_SCALED:
        return prox_sup_norm(v, t)
    return prox(potential, v, t)


def _objective(potential: Potential, w: np.ndarray, scale: float) -> float:
    if potential is Potential.LINF_SCALED:
        return scale * float(np.max(np.abs(w))) if len(w) else 0.0
    return scale * psi_value(potential, w)


def solve_primal_dual(
    data: Dataset,
    potential: Potential,
    max_iters: int = 100_000,
    tol: float = 1e-6,
    gap_tol: float = 1e-3,
    potential_scale: float = 1.0,
    check_every: int = 25,
) -> SolveResult:
    """First-order primal-dual splitting for min psi(w) s.t. y_i x_i^T w >= 1.

    Writing the constraints as A w >= 1 with rows y_i x_i^T, the dual ascent
    step is u <- min(u + sigma_d (A wbar - 1), 0) and the primal step applies
    the prox of psi. Step sizes tau_p = sigma_d = 0.95/||A|| satisfy the
    product condition. Converged means feasible within tol with a certified
    relative duality gap within gap_tol; a stalled raw objective ends the
    loop early, and an infeasible terminal iterate is never reported as
    converged.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    a = data.margin_matrix()
    opnorm = spectral_norm(a)
    step = 0.95 / max(opnorm, 1e-12)
    p = data.p
    w = np.zeros(p)
    wbar = np.zeros(p)
    u = np.zeros(data.n)
    recent: list[float] = []
    window = max(2, 100 // check_every + 1)
    iterations = 0
    for k in range(1, max_iters + 1):
        u = np.minimum(u + step * (a @ wbar - 1.0), 0.0)
        w_new = _apply_prox(potential, w - step * (a.T @ u), step * potential_scale)
        wbar = 2.0 * w_new - w
        w = w_new
        iterations = k
        if k % check_every:
            continue
        margins = a @ w
        min_margin = float(margins.min())
        primal_residual = max(0.0, 1.0 - min_margin)
        if min_margin > 0:
            obj = _objective(potential, w / min_margin, potential_scale)
        else:
            obj = math.inf
        dual = _dual_value(potential, -u, a, potential_scale)
        gap = obj - dual if math.isfinite(obj) else math.inf
        if (
            primal_residual <= tol
            and math.isfinite(gap)
            and gap <= gap_tol * max(1.0, abs(obj))
        ):
            break
        # raw-objective stall: bail out once feasible and no longer moving
        raw = _objective(potential, w, potential_scale)
        recent.append(raw)
        if len(recent) > window:
            recent.pop(0)
        stalled = (
            len(recent) == window
            and abs(recent[-1] - recent[0]) <= 1e-9 * max(1.0, abs(recent[-1]))
        )
        if stalled and primal_residual <= tol:
            break
    margins = a @ w
    min_margin = float(margins.min())
    primal_residual = max(0.0, 1.0 - min_margin)
    dual = _dual_value(potential, -u, a, potential_scale)
    obj = (
        _objective(potential, w / min_margin, potential_scale)
        if min_margin > 0
        else math.inf
    )
    gap = obj - dual if math.isfinite(obj) else math.inf
    converged = (
        primal_residual <= tol
        and math.isfinite(gap)
        and gap <= gap_tol * max(1.0, abs(obj))
    )
    return SolveResult(
        estimate=w,
        iterations=iterations,
        primal_residual=primal_residual,
        duality_gap=gap,
        converged=converged,
        objective=_objective(potential, w, potential_scale),
    )


def solve_mirror_descent(
    data: Dataset,
    eta: Optional[float] = None,
    max_iters: int = 200_000,
    potential: Potential = Potential.L2_SQUARED,
    reference: Optional[np.ndarray] = None,
    record_every: Optional[int] = None,
) -> SolveResult:
    """Mirror descent on the logistic loss; direction converges to the
    margin maximizer for strongly convex potentials on separable data.

    Requires eta < 2 * m / sigma_max(X)^2 with m the strong-convexity
    constant (m = 1 for the squared-norm map, the only one shipped).
    """
    if potential is not Potential.L2_SQUARED:
        raise ValueError(
            "mirror descent needs a strongly convex, gradient-invertible "
            "potential; only the squared-norm map ships"
        )
    smax = spectral_norm(data.features)
    bound = 2.0 / max(smax**2, 1e-12)
    if eta is None:
        eta = 0.95 * bound
    if eta >= bound:
        raise ValueError(f"eta={eta} violates the step bound {bound}")
    if record_every is None:
        record_every = max(1, max_iters // 200)
    ref = None
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        ref = ref / np.linalg.norm(ref)
    a = data.margin_matrix()
    w = np.zeros(data.p)
    margins = np.zeros(data.n)
    angles = []
    for k in range(1, max_iters + 1):
        grad = -(a.T @ expit(-margins))
        w = w - eta * grad
        margins = a @ w
        if ref is not None and (k % record_every == 0 or k == max_iters):
            cosine = float(w @ ref) / max(np.linalg.norm(w), 1e-300)
            angles.append(math.acos(min(1.0, max(-1.0, cosine))))
    min_margin = float(margins.min())
    separated = min_margin > 0
    return SolveResult(
        estimate=w,
        iterations=max_iters,
        primal_residual=0.0 if separated else max(0.0, 1.0 - min_margin),
        duality_gap=None,
        converged=separated,
        objective=psi_value(potential, w),
        angles=np.array(angles) if angles else None,
    )


def evaluate(data: Dataset, estimate: np.ndarray,
             support_threshold: Optional[float] = None) -> EmpiricalReport:
    """Angle-based generalization error plus optional support-error rates."""
    est = np.asarray(estimate, dtype=float)
    nrm = float(np.linalg.norm(est))
    if nrm == 0.0:
        raise DomainError("estimate must be nonzero")
    w = data.ground_truth
    cosine = float(est @ w) / (nrm * float(np.linalg.norm(w)))
    cosine = min(1.0, max(-1.0, cosine))
    ge = math.acos(cosine) / math.pi
    correlation = float(est @ w) / data.p
    norm = nrm / math.sqrt(data.p)
    miss = false_alarm = None
    if support_threshold is not None:
        on = np.abs(w) > 0
        if on.any():
            miss = float(np.mean(np.abs(est[on]) <= support_threshold))
        if (~on).any():
            false_alarm = float(np.mean(np.abs(est[~on]) > support_threshold))
    return EmpiricalReport(gen_error=ge, correlation=correlation, norm=norm,
                           support_miss=miss, support_false_alarm=false_alarm)
