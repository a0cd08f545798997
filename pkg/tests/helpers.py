"""Independent oracles shared by the test modules."""

from __future__ import annotations

import numpy as np

from gmmax.numerics import chi
from gmmax.summary import LinkFunction


def grid_oracle_delta_star(kappa: float, link: LinkFunction, n_s: int = 400,
                           n_r: int = 400) -> float:
    """Brute-force min of c_k(s, r)/r^2 over a 400x400 log grid.

    Independent of the production optimizer: direct evaluation of the ratio
    at every grid point (the inner reduction chi(-a/r) = c_inner/r^2 is the
    definition, not the search).
    """
    from gmmax.summary import default_grid

    grid = default_grid()
    z, w = grid.nodes, grid.weights
    p_plus = link(kappa * z)
    s_grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, n_s - 1)])
    r_grid = np.geomspace(1e-3, 1e4, n_r)
    best = np.inf
    for s in s_grid:
        total = np.zeros(n_r)
        for y, p in ((1.0, p_plus), (-1.0, 1.0 - p_plus)):
            a = 1.0 - kappa * s * z * y
            total += (w * p) @ chi(-a[:, None] / r_grid[None, :])
        best = min(best, float(total.min()))
    return best


def brute_force_prox(psi, v: np.ndarray, t: float, span: float = 6.0,
                     points: int = 2001) -> np.ndarray:
    """Dense grid minimization of psi(x) + ||x-v||^2/(2t) in up to 2 dims."""
    if len(v) == 1:
        xs = np.linspace(v[0] - span, v[0] + span, points)
        vals = [psi(np.array([x])) + (x - v[0]) ** 2 / (2 * t) for x in xs]
        return np.array([xs[int(np.argmin(vals))]])
    if len(v) == 2:
        xs = np.linspace(v[0] - span, v[0] + span, points)
        ys = np.linspace(v[1] - span, v[1] + span, points)
        xg, yg = np.meshgrid(xs, ys, indexing="ij")
        vals = np.empty_like(xg)
        for i in range(points):
            pts = np.stack([xg[i], yg[i]], axis=-1)
            vals[i] = [psi(pt) for pt in pts] + ((pts - v) ** 2).sum(axis=-1) / (2 * t)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        return np.array([xs[i], ys[j]])
    raise ValueError("brute force oracle supports dims 1-2")


def finite_diff(fn, x: float, h: float = 1e-5) -> float:
    return (fn(x + h) - fn(x - h)) / (2.0 * h)
