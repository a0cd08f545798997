"""Gaussian special functions, quadrature, and seeded random streams.

Everything downstream (summary functional, nonlinear systems, Monte Carlo)
is built on the standard-normal density phi, the upper tail Q, the truncated
second moment chi(t) = E[(Z - t)_+^2], and Gauss-Hermite quadrature against
the N(0,1) weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import special

SQRT_2PI = np.sqrt(2.0 * np.pi)

__all__ = [
    "SQRT_2PI",
    "QuadratureGrid",
    "RngStream",
    "std_normal",
    "normal_pdf",
    "normal_tail",
    "chi",
    "chi_prime",
    "xi",
    "gauss_hermite",
    "gauss_legendre_segments",
]


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


def _require_finite(t, name: str) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {t!r}")
    return arr


def normal_pdf(t):
    """Standard normal density phi(t)."""
    t = _require_finite(t, "t")
    return np.exp(-0.5 * t * t) / SQRT_2PI


def normal_tail(t):
    """Upper tail Q(t) = P(Z > t), computed via erfc to avoid cancellation."""
    t = _require_finite(t, "t")
    return 0.5 * special.erfc(t / np.sqrt(2.0))


def std_normal(t):
    """Return (phi(t), Q(t)) for scalar or array t."""
    t = _require_finite(t, "t")
    return normal_pdf(t), normal_tail(t)


def chi(t):
    """chi(t) = E[(Z - t)_+^2] = Q(t)(1 + t^2) - t phi(t); nonnegative, decreasing."""
    t = _require_finite(t, "t")
    return normal_tail(t) * (1.0 + t * t) - t * normal_pdf(t)


def chi_prime(t):
    """Derivative of chi: chi'(t) = 2 (t Q(t) - phi(t))."""
    t = _require_finite(t, "t")
    return 2.0 * (t * normal_tail(t) - normal_pdf(t))


def xi(t):
    """xi(t) = E[(Z - t)_+] = phi(t) - t Q(t)."""
    t = _require_finite(t, "t")
    return normal_pdf(t) - t * normal_tail(t)


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights integrating against the standard normal density.

    Weights sum to one, so ``sum(w * f(x))`` approximates E[f(Z)] with
    Z ~ N(0,1), exactly for polynomials of degree <= 2*order - 1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if len(nodes) != self.order or len(weights) != self.order:
            raise ValueError("nodes/weights length must equal order")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def expect(self, fn) -> float:
        """E[fn(Z)] by quadrature; fn must accept a vector of nodes."""
        return float(np.dot(self.weights, fn(self.nodes)))


DEFAULT_QUAD_ORDER = 200


def gauss_hermite(order: int = DEFAULT_QUAD_ORDER) -> QuadratureGrid:
    """Gauss-Hermite grid in probabilist normalization (weights sum to 1)."""
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    nodes, weights = hermegauss(order)
    weights = weights / weights.sum()
    return QuadratureGrid(nodes=nodes, weights=weights, order=order)


def gauss_legendre_segments(breakpoints, order: int = 40):
    """Composite Gauss-Legendre nodes/weights over consecutive segments.

    ``breakpoints`` is an increasing sequence; each [b_i, b_{i+1}] segment
    gets an ``order``-point rule. Used for piecewise-smooth integrands whose
    kink locations are known (proximal statistics).
    """
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or len(bp) < 2 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must be strictly increasing, length >= 2")
    x, w = np.polynomial.legendre.leggauss(order)
    lo = bp[:-1][:, None]
    hi = bp[1:][:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class RngStream:
    """Value-like handle for a reproducible, independent random stream.

    Equal (base_seed, stream_id) pairs reproduce the same sequence; distinct
    stream_id values give statistically independent streams (SeedSequence
    spawn keys). Streams derived per trial index need no shared state.
    """

    base_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "RngStream":
        """Substream for trial ``index``; stable under concurrency."""
        return RngStream(self.base_seed, self.stream_id * 1_048_576 + index)
