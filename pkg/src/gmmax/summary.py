"""The summary functional c_k(s, r) and its partial derivatives.

c_k(s, r) = E[(1 - k*s*Z1*Y - r*Z2)_+^2] with Z1, Z2 iid N(0,1) and
Y = +1 with probability rho(k*Z1), else -1. The label-side expectation over
Z2 has the closed form E[(a - r*Z2)_+^2] = r^2 * chi(-a/r), which leaves a
single smooth outer integral over Z1 that Gauss-Hermite handles; the raw
two-dimensional Monte Carlo estimator is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import (
    DomainError,
    QuadratureGrid,
    RngStream,
    chi,
    chi_prime,
    gauss_hermite,
)

__all__ = ["LinkFunction", "SummaryEval", "default_grid", "eval_c", "mc_oracle_c"]


@dataclass(frozen=True)
class LinkFunction:
    """Non-decreasing map from margin value to label-flip probability.

    ``std`` is the logistic 1/(1+e^-t); ``fig1`` the variant 1/(1+e^-2t)
    (logistic in 2t) used by the phase-transition figure.
    """

    tag: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def __hash__(self):
        return hash((self.tag, id(self.fn)))

    @staticmethod
    def from_tag(tag: str) -> "LinkFunction":
        try:
            return _LINKS[tag]
        except KeyError:
            raise ValueError(f"unknown link tag {tag!r}; expected one of {sorted(_LINKS)}")


def _logistic(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


_LINKS = {
    "std": LinkFunction("std", _logistic),
    "fig1": LinkFunction("fig1", lambda t: _logistic(2.0 * t)),
}

STANDARD_LOGISTIC = _LINKS["std"]
SCALED_LOGISTIC = _LINKS["fig1"]


@dataclass(frozen=True)
class SummaryEval:
    """Value and partials of c_k at one (s, r) point.

    ``d_s`` and ``d_r`` are None when r == 0 (the inner reduction that makes
    them well-defined needs r > 0).
    """

    value: float
    d_s: Optional[float]
    d_r: Optional[float]


def _label_weights(kappa: float, z1: np.ndarray, link: LinkFunction):
    p_plus = link(kappa * z1)
    return p_plus, 1.0 - p_plus


def eval_c(
    kappa: float,
    s: float,
    r: float,
    link: LinkFunction = STANDARD_LOGISTIC,
    grid: QuadratureGrid | None = None,
) -> SummaryEval:
    """Evaluate c_k(s, r) together with dc/ds and dc/dr.

    For r > 0 the inner expectation reduces to r^2 * chi(u) with
    u = (k*s*z1*y - 1)/r, and
        dc/ds = k * E[r * z1 * y * chi'(u)],
        dc/dr = E[2 r chi(u) - r u chi'(u)].
    """
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")
    if grid is None:
        grid = default_grid()
    z1, w = grid.nodes, grid.weights
    p_plus, p_minus = _label_weights(kappa, z1, link)

    if r == 0.0:
        value = 0.0
        for y, p in ((1.0, p_plus), (-1.0, p_minus)):
            a = 1.0 - kappa * s * z1 * y
            value += float(np.dot(w * p, np.maximum(a, 0.0) ** 2))
        return SummaryEval(value=value, d_s=None, d_r=None)

    value = 0.0
    d_s = 0.0
    d_r = 0.0
    for y, p in ((1.0, p_plus), (-1.0, p_minus)):
        a = 1.0 - kappa * s * z1 * y
        u = -a / r
        cu = chi(u)
        cpu = chi_prime(u)
        wp = w * p
        value += float(np.dot(wp, r * r * cu))
        d_s += float(np.dot(wp, kappa * r * z1 * y * cpu))
        d_r += float(np.dot(wp, 2.0 * r * cu - r * u * cpu))
    return SummaryEval(value=value, d_s=d_s, d_r=d_r)


_GRID_CACHE: dict[int, QuadratureGrid] = {}


def default_grid() -> QuadratureGrid:
    """Shared order-200 Gauss-Hermite grid (cached)."""
    grid = _GRID_CACHE.get(200)
    if grid is None:
        grid = gauss_hermite(200)
        _GRID_CACHE[200] = grid
    return grid


def mc_oracle_c(
    kappa: float,
    s: float,
    r: float,
    link: LinkFunction = STANDARD_LOGISTIC,
    samples: int = 10**6,
    rng: RngStream = RngStream(0),
) -> tuple[float, float]:
    """Raw 2-D Monte Carlo estimate of c_k(s, r) with its standard error.

    Uses no closed-form reduction; serves as the independent oracle for
    eval_c.
    """
    if samples < 10**4:
        raise ValueError(f"samples must be >= 1e4, got {samples}")
    if kappa < 0 or r < 0:
        raise DomainError("kappa and r must be >= 0")
    gen = rng.generator()
    z1 = gen.standard_normal(samples)
    z2 = gen.standard_normal(samples)
    u = gen.random(samples)
    y = np.where(u < link(kappa * z1), 1.0, -1.0)
    vals = np.maximum(1.0 - kappa * s * z1 * y - r * z2, 0.0) ** 2
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return est, stderr
