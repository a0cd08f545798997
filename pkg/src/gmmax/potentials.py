"""Structure-encouraging potentials and their proximal machinery.

Three potentials are supported: the squared euclidean norm (0.5*||.||^2),
the l1 norm, and the dimension-scaled sup norm d*||.||_inf. Each supplies a
vector prox, a Moreau envelope, and scalar prox statistics under a prior on
the ground-truth entries. The statistics

    corr       = (1/p) E[w*^T P]
    gauss_corr = (1/p) E[h^T P]
    sq_norm    = (1/p) E||P||^2,   P = Prox_{sigma*tau*psi}((alpha - sigma*tau*gamma) w* + beta*sigma*tau*sqrt(delta) h)

feed the nonlinear fixed-point system. They are computed three ways: exact
Q/chi closed forms, piecewise Gauss-Legendre quadrature (independent route),
and raw Monte Carlo (oracle for tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .numerics import (
    RngStream,
    chi,
    gauss_legendre_segments,
    normal_pdf,
    normal_tail,
    xi,
)

__all__ = [
    "Potential",
    "Prior",
    "ProxStatistics",
    "prox",
    "psi_value",
    "project_l1_ball",
    "prox_sup_norm",
    "moreau",
    "lambda_star_general",
    "lambda_star_sparse",
    "lambda_star_binary",
    "prox_statistics",
]

SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)


class Potential(Enum):
    L2_SQUARED = "l2"
    L1 = "l1"
    LINF_SCALED = "linf"

    @staticmethod
    def from_tag(tag: str) -> "Potential":
        try:
            return Potential(tag)
        except ValueError:
            raise ValueError(f"unknown potential tag {tag!r}; expected l1|l2|linf")


def psi_value(potential: Potential, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    if potential is Potential.L2_SQUARED:
        return 0.5 * float(v @ v)
    if potential is Potential.L1:
        return float(np.abs(v).sum())
    return float(len(v) * np.max(np.abs(v))) if len(v) else 0.0


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_1 <= radius} (sort-then-threshold)."""
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, len(u) + 1)
    rho = np.nonzero(u > (css - radius) / j)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def prox_sup_norm(v: np.ndarray, radius: float) -> np.ndarray:
    """Prox of radius*||.||_inf at unit step, via Moreau decomposition."""
    return np.asarray(v, dtype=float) - project_l1_ball(v, radius)


def prox(potential: Potential, v: np.ndarray, t: float) -> np.ndarray:
    """argmin_x psi(x) + ||x - v||^2 / (2t).

    LINF_SCALED uses psi = d*||.||_inf on a length-d vector, so the
    effective l1-ball radius is t*d.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("v must be finite")
    if potential is Potential.L2_SQUARED:
        return v / (1.0 + t)
    if potential is Potential.L1:
        return soft_threshold(v, t)
    return prox_sup_norm(v, t * len(v))


def moreau(potential: Potential, v: np.ndarray, t: float):
    """Moreau envelope value with its closed-form derivatives.

    Returns (value, gradient_v, deriv_t) with gradient_v = (v - prox)/t and
    deriv_t = -||v - prox||^2 / (2 t^2).
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    v = np.asarray(v, dtype=float)
    p = prox(potential, v, t)
    diff = v - p
    sq = float(diff @ diff)
    value = psi_value(potential, p) + sq / (2.0 * t)
    return value, diff / t, -sq / (2.0 * t * t)


# ---------------------------------------------------------------------------
# Priors


@dataclass(frozen=True)
class Prior:
    """Entry distribution of the ground-truth parameter; E[W^2] = kappa^2.

    gaussian: N(0, kappa^2). sparse: zero w.p. 1-s, else N(0, kappa^2/s).
    binary: +/-kappa equiprobable.
    """

    kind: str
    kappa: float
    sparsity: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "sparse", "binary"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not (0.0 < self.sparsity <= 1.0):
            raise ValueError(f"sparsity must be in (0, 1], got {self.sparsity}")

    @staticmethod
    def gaussian(kappa: float) -> "Prior":
        return Prior("gaussian", kappa)

    @staticmethod
    def sparse_gaussian(sparsity: float, kappa: float) -> "Prior":
        return Prior("sparse", kappa, sparsity)

    @staticmethod
    def binary(kappa: float) -> "Prior":
        return Prior("binary", kappa)

    @property
    def second_moment(self) -> float:
        return self.kappa**2

    @property
    def abs_mean(self) -> float:
        if self.kind == "gaussian":
            return self.kappa * math.sqrt(2.0 / math.pi)
        if self.kind == "sparse":
            return math.sqrt(self.sparsity) * self.kappa * math.sqrt(2.0 / math.pi)
        return self.kappa

    def components(self):
        """Mixture decomposition as (kind, weight, param) triples.

        kind "normal" carries the sd, kind "point" the location.
        """
        if self.kind == "gaussian":
            return [("normal", 1.0, self.kappa)]
        if self.kind == "sparse":
            s = self.sparsity
            comps = [("normal", s, self.kappa / math.sqrt(s))]
            if s < 1.0:
                comps.insert(0, ("point", 1.0 - s, 0.0))
            return comps
        return [("point", 0.5, self.kappa), ("point", 0.5, -self.kappa)]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.kappa * rng.standard_normal(size)
        if self.kind == "sparse":
            vals = (self.kappa / math.sqrt(self.sparsity)) * rng.standard_normal(size)
            mask = rng.random(size) < self.sparsity
            return vals * mask
        signs = np.where(rng.random(size) < 0.5, 1.0, -1.0)
        return self.kappa * signs


# ---------------------------------------------------------------------------
# lambda root equations for the sup-norm prox


def _bisect_decreasing(fn, lo: float, hi: float, target: float, width: float = 1e-12):
    """Root of decreasing fn(x) = target on [lo, hi]; bisection to relative
    width ``width`` then one Newton-like secant polish."""
    flo = fn(lo) - target
    fhi = fn(hi) - target
    if flo < 0:
        return lo
    if fhi > 0:
        raise RuntimeError("bisection bracket does not contain the root")
    for _ in range(200):
        if hi - lo <= width * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if fn(mid) - target > 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    f0 = fn(mid) - target
    h = max(1e-7, 1e-7 * abs(mid))
    slope = (fn(mid + h) - fn(mid - h)) / (2.0 * h)
    if slope != 0.0:
        polished = mid - f0 / slope
        if lo - width <= polished <= hi + width:
            return polished
    return mid


def _expand_bracket(fn, target: float, hi0: float) -> float:
    hi = hi0
    for _ in range(200):
        if fn(hi) < target:
            return hi
        hi *= 2.0
    raise RuntimeError("failed to bracket lambda root")


def lambda_star_general(prior: Prior, t: float) -> float:
    """Unique lam >= 0 with E[(|W| - lam)_+] = t, or 0 when t >= E|W|."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if t >= prior.abs_mean:
        return 0.0

    def expect(lam: float) -> float:
        total = 0.0
        for kind, weight, param in prior.components():
            if kind == "normal":
                total += weight * 2.0 * param * float(xi(lam / param))
            else:
                total += weight * max(abs(param) - lam, 0.0)
        return total

    hi = _expand_bracket(expect, t, prior.abs_mean + t)
    return _bisect_decreasing(expect, 0.0, hi, t)


def lambda_star_sparse(t1: float, t2: float, s: float) -> float:
    """Normalized lambda for the sup-norm prox under a (sparse-)Gaussian prior.

    Solves (2s/t1) xi(lam*t1) + (2(1-s)/t2) xi(lam*t2) = 1 when
    s/t1 + (1-s)/t2 > sqrt(pi/2); returns 0 otherwise.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be > 0")
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s must be in (0, 1], got {s}")
    if s / t1 + (1.0 - s) / t2 <= SQRT_PI_OVER_2:
        return 0.0

    def lhs(lam: float) -> float:
        val = (2.0 * s / t1) * float(xi(lam * t1))
        if s < 1.0:
            val += (2.0 * (1.0 - s) / t2) * float(xi(lam * t2))
        return val

    hi = _expand_bracket(lhs, 1.0, 1.0 / min(t1, t2) + 1.0)
    return _bisect_decreasing(lhs, 0.0, hi, 1.0)


def lambda_star_binary(t3: float, beta: float, delta: float) -> float:
    """Normalized lambda for the sup-norm prox under the binary prior.

    With scale = beta*sqrt(delta), solves
    scale*phi((lam-t3)/scale) + (t3-lam)*Q((lam-t3)/scale) = 1/2
    when its lam=0 value exceeds 1/2; returns 0 otherwise.
    """
    if beta <= 0 or delta <= 0:
        raise ValueError("beta and delta must be > 0")
    scale = beta * math.sqrt(delta)

    def lhs(lam: float) -> float:
        u = (lam - t3) / scale
        return scale * float(normal_pdf(u)) + (t3 - lam) * float(normal_tail(u))

    if lhs(0.0) <= 0.5:
        return 0.0
    hi = _expand_bracket(lhs, 0.5, max(t3, 0.0) + 10.0 * scale)
    return _bisect_decreasing(lhs, 0.0, hi, 0.5)


# ---------------------------------------------------------------------------
# Prox statistics


@dataclass(frozen=True)
class ProxStatistics:
    corr: float
    gauss_corr: float
    sq_norm: float
    stderr: Optional[tuple[float, float, float]] = None


def _effective_threshold(prior: Prior, a: float, b: float, T: float,
                         binary_rule: str = "near-tail") -> float:
    """Soft-threshold level lam*T for the sup-norm prox.

    Gaussian/sparse priors use the exact two-population root. For the binary
    prior, rule "near-tail" keeps only the near tail of the shrinkage
    expectation, while rule "exact" solves the symmetric
    mixture equation E[(|V| - theta)_+] = T.
    """
    if prior.kind in ("gaussian", "sparse"):
        s = prior.sparsity if prior.kind == "sparse" else 1.0
        nu1 = math.sqrt((prior.kappa**2 / s) * a * a + b * b)
        t1 = T / nu1
        t2 = T / b
        lam = lambda_star_sparse(t1, t2, s)
        return lam * T
    if binary_rule == "near-tail":
        t3 = a * prior.kappa / T
        beta_eff = b / T  # equals beta*sqrt(delta); lambda_star_binary takes the pair
        lam = lambda_star_binary(t3, beta_eff, 1.0)
        return lam * T
    if binary_rule != "exact":
        raise ValueError(f"unknown binary_rule {binary_rule!r}")
    mu = a * prior.kappa

    def shrink(theta: float) -> float:
        return b * (float(xi((theta - mu) / b)) + float(xi((theta + mu) / b)))

    if shrink(0.0) <= T:
        return 0.0
    hi = _expand_bracket(shrink, T, abs(mu) + 10.0 * b)
    return _bisect_decreasing(shrink, 0.0, hi, T)


def _closed_stats(prior: Prior, potential: Potential, a: float, b: float, T: float,
                  binary_rule: str = "near-tail") -> ProxStatistics:
    kappa2 = prior.second_moment
    if potential is Potential.L2_SQUARED:
        corr = kappa2 * a / (1.0 + T)
        gauss = b / (1.0 + T)
        sq = (kappa2 * a * a + b * b) / (1.0 + T) ** 2
        return ProxStatistics(corr, gauss, sq)

    theta = T if potential is Potential.L1 else _effective_threshold(prior, a, b, T, binary_rule)
    corr = gauss = sq = shrink = 0.0
    for kind, weight, param in prior.components():
        if kind == "normal":
            nu = math.sqrt(a * a * param * param + b * b)
            u = theta / nu
            q2 = 2.0 * float(normal_tail(u))
            corr += weight * a * param * param * q2
            gauss += weight * b * q2
            sq += weight * 2.0 * nu * nu * float(chi(u))
            shrink += weight * 2.0 * nu * float(xi(u))
        else:
            mu = a * param
            up = (theta - mu) / b
            um = (theta + mu) / b
            e_eta = b * (float(xi(up)) - float(xi(um)))
            corr += weight * param * e_eta
            gauss += weight * b * (float(normal_tail(up)) + float(normal_tail(um)))
            sq += weight * b * b * (float(chi(up)) + float(chi(um)))
            shrink += weight * b * (float(xi(up)) + float(xi(um)))
    if potential is Potential.L1:
        return ProxStatistics(corr, gauss, sq)
    # sup-norm prox is the residual v - soft_threshold(v, theta)
    corr_inf = a * kappa2 - corr
    gauss_inf = b - gauss
    sq_inf = (a * a * kappa2 + b * b) - sq - 2.0 * theta * shrink
    return ProxStatistics(corr_inf, gauss_inf, sq_inf)


def _quad_component_moments(mu, nu, scalar_prox, breakpoints, order=40, span=10.0):
    """(E[pr(V)], E[V pr(V)], E[pr(V)^2]) for V ~ N(mu, nu^2) by piecewise GL."""
    lo_edge, hi_edge = mu - span * nu, mu + span * nu
    pts = {lo_edge, hi_edge}
    for bp in breakpoints:
        if lo_edge + 1e-12 * nu < bp < hi_edge - 1e-12 * nu:
            pts.add(bp)
    pts = np.array(sorted(pts))
    # keep segments below ~2 sd wide so fixed-order GL stays at machine precision
    segs = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        nsub = max(1, int(np.ceil((hi - lo) / (2.0 * nu))))
        segs.extend(np.linspace(lo, hi, nsub + 1)[1:])
    nodes, weights = gauss_legendre_segments(np.array(segs), order=order)
    dens = normal_pdf((nodes - mu) / nu) / nu
    pv = scalar_prox(nodes)
    w = weights * dens
    return float(w @ pv), float(w @ (nodes * pv)), float(w @ (pv * pv))


def _quad_stats(prior: Prior, potential: Potential, a: float, b: float, T: float,
                order: int = 40) -> ProxStatistics:
    """Statistics via numerical integration over the scalar prox argument.

    Independent of the Q/chi closed forms: only the scalar prox definition,
    the normal density, and Gaussian conditioning identities are used. For
    the sup-norm the threshold solves the exact mixture equation
    E[(|V| - theta)_+] = T.
    """
    if potential is Potential.L2_SQUARED:
        scalar_prox = lambda v: v / (1.0 + T)
        breakpoints = []
    elif potential is Potential.L1:
        scalar_prox = lambda v: np.sign(v) * np.maximum(np.abs(v) - T, 0.0)
        breakpoints = [-T, T]
    else:
        def shrinkage(theta: float) -> float:
            total = 0.0
            for kind, weight, param in prior.components():
                mu = a * param if kind == "point" else 0.0
                nu = b if kind == "point" else math.sqrt(a * a * param * param + b * b)
                e, _, _ = _quad_component_moments(
                    mu, nu, lambda v: np.maximum(np.abs(v) - theta, 0.0), [-theta, theta], order
                )
                total += weight * e
            return total

        if shrinkage(0.0) <= T:
            theta = 0.0
        else:
            hi = _expand_bracket(shrinkage, T, abs(a) * prior.kappa + 10.0 * b)
            theta = _bisect_decreasing(shrinkage, 0.0, hi, T)
        scalar_prox = lambda v: np.clip(v, -theta, theta)
        breakpoints = [-theta, theta]

    corr = gauss = sq = 0.0
    for kind, weight, param in prior.components():
        if kind == "normal":
            nu2 = a * a * param * param + b * b
            _, e_vp, e_pp = _quad_component_moments(0.0, math.sqrt(nu2), scalar_prox, breakpoints, order)
            corr += weight * (a * param * param / nu2) * e_vp
            gauss += weight * (b / nu2) * e_vp
        else:
            mu = a * param
            e_p, e_vp, e_pp = _quad_component_moments(mu, b, scalar_prox, breakpoints, order)
            corr += weight * param * e_p
            gauss += weight * (e_vp - mu * e_p) / b
        sq += weight * e_pp
    return ProxStatistics(corr, gauss, sq)


def _mc_stats(prior: Prior, potential: Potential, a: float, b: float, T: float,
              rng: RngStream, samples: int, binary_rule: str = "near-tail") -> ProxStatistics:
    gen = rng.generator()
    w = prior.sample(gen, samples)
    h = gen.standard_normal(samples)
    v = a * w + b * h
    if potential is Potential.L2_SQUARED:
        p = v / (1.0 + T)
    elif potential is Potential.L1:
        p = soft_threshold(v, T)
    else:
        theta = _effective_threshold(prior, a, b, T, binary_rule)
        p = np.clip(v, -theta, theta)
    triples = np.stack([w * p, h * p, p * p])
    means = triples.mean(axis=1)
    stderrs = triples.std(axis=1, ddof=1) / math.sqrt(samples)
    return ProxStatistics(*means, stderr=tuple(stderrs))


def prox_statistics(
    prior: Prior,
    potential: Potential,
    alpha: float,
    sigma: float,
    beta: float,
    gamma: float,
    tau: float,
    delta: float,
    method: str = "closed",
    rng: Optional[RngStream] = None,
    samples: int = 10**6,
    quad_order: int = 40,
    binary_rule: str = "near-tail",
) -> ProxStatistics:
    """Expected prox statistics (corr, gauss_corr, sq_norm) of P.

    method: "closed" (Q/chi forms), "quadrature" (piecewise Gauss-Legendre,
    independent route), or "mc" (Monte Carlo oracle; needs rng).
    """
    if sigma <= 0 or tau <= 0 or beta <= 0 or delta <= 0:
        raise ValueError("sigma, tau, beta, delta must all be > 0")
    T = sigma * tau
    a = alpha - T * gamma
    b = beta * T * math.sqrt(delta)
    if method == "closed":
        return _closed_stats(prior, potential, a, b, T, binary_rule)
    if method == "quadrature":
        return _quad_stats(prior, potential, a, b, T, order=quad_order)
    if method == "mc":
        if rng is None:
            raise ValueError("mc method requires an RngStream")
        return _mc_stats(prior, potential, a, b, T, rng, samples, binary_rule)
    raise ValueError(f"unknown method {method!r}")
