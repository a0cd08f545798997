"""Randomized property suites runnable from the CLI / service.

Each suite returns (total, failures) where failures is a list of short
descriptions. Cases are seeded, so reruns are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import RngStream, gauss_hermite, normal_tail, xi
from .potentials import (
    Potential,
    Prior,
    lambda_star_binary,
    lambda_star_general,
    lambda_star_sparse,
    moreau,
    project_l1_ball,
    prox,
    psi_value,
)
from .summary import eval_c, mc_oracle_c

__all__ = ["check_prox", "check_moreau", "check_c_functional", "SUITES", "run_suite"]


def _record(failures: list[str], condition: bool, message: str):
    if not condition:
        failures.append(message)


def check_prox(seed: int = 2024) -> tuple[int, list[str]]:
    """Prox optimality, non-expansiveness, l1-ball contract, lambda residuals."""
    gen = RngStream(seed).generator()
    failures: list[str] = []
    total = 0

    for case in range(100):
        potential = list(Potential)[case % 3]
        d = int(gen.integers(2, 30))
        v = gen.normal(scale=3.0, size=d)
        t = float(gen.uniform(0.05, 3.0))
        p = prox(potential, v, t)
        base = psi_value(potential, p) * t + 0.5 * float((p - v) @ (p - v))
        total += 1
        ok = True
        for _ in range(50):
            x = p + gen.normal(scale=0.5, size=d)
            other = psi_value(potential, x) * t + 0.5 * float((x - v) @ (x - v))
            if other - base < -1e-9:
                ok = False
                break
        _record(failures, ok, f"prox optimality violated ({potential.value}, case {case})")

        v2 = v + gen.normal(scale=1.0, size=d)
        p2 = prox(potential, v2, t)
        total += 1
        _record(
            failures,
            np.linalg.norm(p - p2) <= np.linalg.norm(v - v2) + 1e-12,
            f"prox expansion ({potential.value}, case {case})",
        )

    for case in range(50):
        d = int(gen.integers(2, 40))
        v = gen.normal(scale=2.0, size=d)
        radius = float(gen.uniform(0.1, 3.0))
        proj = project_l1_ball(v, radius)
        total += 1
        if np.abs(v).sum() <= radius:
            _record(failures, np.allclose(proj, v), f"l1 projection moved interior point ({case})")
        else:
            _record(failures, abs(np.abs(proj).sum() - radius) <= 1e-10,
                    f"l1 projection off the sphere ({case})")

        t = float(gen.uniform(0.05, 2.0))
        p_inf = prox(Potential.LINF_SCALED, v, t)
        total += 1
        _record(failures,
                np.max(np.abs(p_inf + project_l1_ball(v, t * d) - v)) <= 1e-12,
                f"sup-norm Moreau decomposition broke ({case})")

    for case in range(30):
        t = float(gen.uniform(0.05, 1.5))
        prior = [Prior.gaussian(2.0), Prior.sparse_gaussian(0.3, 1.5), Prior.binary(1.0)][case % 3]
        lam = lambda_star_general(prior, t)
        total += 1
        if lam > 0.0:
            resid = sum(
                w * 2.0 * par * float(xi(lam / par)) if kind == "normal"
                else w * max(abs(par) - lam, 0.0)
                for kind, w, par in prior.components()
            ) - t
            _record(failures, abs(resid) <= 1e-10, f"lambda_general residual {resid:.2e}")
        else:
            _record(failures, t >= prior.abs_mean - 1e-12, f"lambda_general inactive too early ({case})")

        t1, t2 = float(gen.uniform(0.05, 2.0)), float(gen.uniform(0.05, 2.0))
        s = float(gen.uniform(0.05, 1.0))
        lam = lambda_star_sparse(t1, t2, s)
        total += 1
        if lam > 0.0:
            resid = (2 * s / t1) * float(xi(lam * t1)) + (2 * (1 - s) / t2) * float(xi(lam * t2)) - 1.0
            _record(failures, abs(resid) <= 1e-10, f"lambda_sparse residual {resid:.2e}")

        t3 = float(gen.uniform(-1.0, 4.0))
        beta, delta = float(gen.uniform(0.2, 2.0)), float(gen.uniform(0.3, 3.0))
        lam = lambda_star_binary(t3, beta, delta)
        total += 1
        if lam > 0.0:
            scale = beta * math.sqrt(delta)
            u = (lam - t3) / scale
            resid = scale * math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi) \
                + (t3 - lam) * float(normal_tail(u)) - 0.5
            _record(failures, abs(resid) <= 1e-10, f"lambda_binary residual {resid:.2e}")
    return total, failures


def check_moreau(seed: int = 2024) -> tuple[int, list[str]]:
    """Envelope gradient and t-derivative vs central finite differences."""
    gen = RngStream(seed, 1).generator()
    failures: list[str] = []
    total = 0
    for case in range(100):
        potential = list(Potential)[case % 3]
        d = int(gen.integers(1, 20))
        v = gen.normal(scale=2.0, size=d)
        t = float(gen.uniform(0.1, 2.0))
        value, grad, dt = moreau(potential, v, t)
        h = 1e-5
        fd_grad = np.empty(d)
        for j in range(d):
            vp = v.copy(); vp[j] += h
            vm = v.copy(); vm[j] -= h
            fd_grad[j] = (moreau(potential, vp, t)[0] - moreau(potential, vm, t)[0]) / (2 * h)
        fd_dt = (moreau(potential, v, t + h)[0] - moreau(potential, v, t - h)[0]) / (2 * h)
        total += 2
        _record(failures, np.max(np.abs(grad - fd_grad)) <= 1e-5,
                f"moreau gradient mismatch ({potential.value}, case {case})")
        _record(failures, abs(dt - fd_dt) <= 1e-5,
                f"moreau t-derivative mismatch ({potential.value}, case {case})")
    return total, failures


def check_c_functional(seed: int = 2024) -> tuple[int, list[str]]:
    """eval_c vs Monte Carlo, partials vs finite differences, convexity."""
    gen = RngStream(seed, 2).generator()
    failures: list[str] = []
    total = 0
    grid = gauss_hermite(200)

    for i, kappa in enumerate([0.5, 2.0]):
        for j, s in enumerate(np.linspace(-0.5, 1.5, 5)):
            for k, r in enumerate(np.geomspace(0.2, 3.0, 5)):
                est, se = mc_oracle_c(kappa, float(s), float(r), samples=200_000,
                                      rng=RngStream(seed, 100 + i * 100 + j * 10 + k))
                val = eval_c(kappa, float(s), float(r), grid=grid).value
                total += 1
                _record(failures, abs(est - val) <= max(3.0 * se, 1e-9),
                        f"eval_c vs MC at ({kappa},{s:.2f},{r:.2f}): {val:.5f} vs {est:.5f}")

    for case in range(40):
        kappa = float(gen.uniform(0.1, 3.0))
        s = float(gen.uniform(-1.0, 2.0))
        r = float(gen.uniform(0.2, 3.0))
        ev = eval_c(kappa, s, r, grid=grid)
        h = 1e-5
        fd_s = (eval_c(kappa, s + h, r, grid=grid).value - eval_c(kappa, s - h, r, grid=grid).value) / (2 * h)
        fd_r = (eval_c(kappa, s, r + h, grid=grid).value - eval_c(kappa, s, r - h, grid=grid).value) / (2 * h)
        total += 2
        _record(failures, abs(ev.d_s - fd_s) <= 1e-6, f"d_s mismatch case {case}")
        _record(failures, abs(ev.d_r - fd_r) <= 1e-6, f"d_r mismatch case {case}")

    for case in range(200):
        kappa = float(gen.uniform(0.0, 3.0))
        s1, s2 = gen.uniform(-1.0, 2.0, size=2)
        r1, r2 = gen.uniform(0.05, 3.0, size=2)
        f1 = math.sqrt(eval_c(kappa, float(s1), float(r1), grid=grid).value)
        f2 = math.sqrt(eval_c(kappa, float(s2), float(r2), grid=grid).value)
        fm = math.sqrt(eval_c(kappa, float(0.5 * (s1 + s2)), float(0.5 * (r1 + r2)), grid=grid).value)
        total += 1
        _record(failures, fm <= 0.5 * (f1 + f2) + 1e-9, f"sqrt(c) midpoint convexity case {case}")
    return total, failures


SUITES = {
    "prox": check_prox,
    "moreau": check_moreau,
    "c-functional": check_c_functional,
}


def run_suite(name: str, seed: int = 2024) -> dict:
    if name not in SUITES:
        raise ValueError(f"unknown check suite {name!r}; expected one of {sorted(SUITES)}")
    total, failures = SUITES[name](seed)
    return {
        "suite": name,
        "total": total,
        "passed": total - len(failures),
        "failed": len(failures),
        "failures": failures[:20],
    }
