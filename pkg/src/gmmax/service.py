"""FastAPI service wrapping the theory solvers and experiment runner.

The CLI is a thin client of this app (in-process by default, remote with
--server). All computation happens behind these endpoints; responses carry
plain floats so clients can serialize results deterministically.
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .checks import SUITES, run_suite
from .experiments import ExperimentConfig, ResultRow, run_experiment
from .potentials import Potential, Prior
from .summary import LinkFunction
from .theory import (
    InfeasibleRegimeError,
    ModelSpec,
    SolverError,
    delta_star,
    solve_l2,
    solve_system,
    system_residuals,
    theory_report,
)

__all__ = ["create_app"]


class DeltaStarRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kappa: float = Field(ge=0.0)
    link: Literal["std", "fig1"] = "std"


class DeltaStarResponse(BaseModel):
    kappa: float
    link: str
    delta_star: float


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    potential: Literal["l1", "l2", "linf"]
    kappa: float = Field(gt=0.0)
    delta: float = Field(gt=0.0)
    prior: Literal["gaussian", "sparse", "binary"] = "gaussian"
    sparsity: float = Field(default=1.0, gt=0.0, le=1.0)
    link: Literal["std", "fig1"] = "std"


class VarsModel(BaseModel):
    alpha: float
    sigma: float
    beta: float
    gamma: float
    tau: float


class SolveResponse(BaseModel):
    vars: VarsModel
    gen_error: float
    correlation: float
    norm: float
    support_p1: Optional[float] = None
    support_p2: Optional[float] = None
    max_residual: float


class ResultRowModel(BaseModel):
    experiment: str
    metric: str
    kappa: float
    delta: float
    potential: str
    prior: str
    theory: Optional[float]
    empirical_mean: Optional[float]
    empirical_stderr: Optional[float]
    trials: int
    failures: int

    @staticmethod
    def from_row(row: ResultRow) -> "ResultRowModel":
        return ResultRowModel(**row.__dict__)


class ExperimentResponse(BaseModel):
    rows: list[ResultRowModel]
    meta: dict


class CheckResponse(BaseModel):
    suite: str
    total: int
    passed: int
    failed: int
    failures: list[str]


def _solve(req: SolveRequest):
    spec = ModelSpec(kappa=req.kappa, delta=req.delta,
                     link=LinkFunction.from_tag(req.link))
    if req.prior == "gaussian":
        prior = Prior.gaussian(req.kappa)
    elif req.prior == "sparse":
        prior = Prior.sparse_gaussian(req.sparsity, req.kappa)
    else:
        prior = Prior.binary(req.kappa)
    potential = Potential.from_tag(req.potential)
    if potential is Potential.L2_SQUARED:
        vars = solve_l2(spec)
    else:
        vars = solve_system(prior, potential, spec)
    resid = float(np.max(np.abs(system_residuals(vars, prior, potential, spec))))
    s = req.sparsity if (req.prior == "sparse" and req.potential == "l1") else None
    report = theory_report(vars, spec, s=s)
    support_p1 = report.support[0] if report.support else None
    support_p2 = report.support[1] if report.support else None
    return SolveResponse(
        vars=VarsModel(alpha=vars.alpha, sigma=vars.sigma, beta=vars.beta,
                       gamma=vars.gamma, tau=vars.tau),
        gen_error=report.gen_error, correlation=report.correlation,
        norm=report.norm, support_p1=support_p1, support_p2=support_p2,
        max_residual=resid,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="gmmax", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/theory/delta-star", response_model=DeltaStarResponse)
    def theory_delta_star(req: DeltaStarRequest):
        value = delta_star(req.kappa, LinkFunction.from_tag(req.link))
        return DeltaStarResponse(kappa=req.kappa, link=req.link, delta_star=value)

    @app.post("/theory/solve", response_model=SolveResponse)
    def theory_solve(req: SolveRequest):
        try:
            return _solve(req)
        except InfeasibleRegimeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except SolverError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/experiment/run", response_model=ExperimentResponse)
    def experiment_run(config: ExperimentConfig):
        rows, meta = run_experiment(config)
        return ExperimentResponse(
            rows=[ResultRowModel.from_row(r) for r in rows], meta=meta
        )

    @app.post("/check/{suite}", response_model=CheckResponse)
    def check(suite: str):
        if suite not in SUITES:
            raise HTTPException(status_code=400,
                                detail=f"unknown suite {suite!r}; expected {sorted(SUITES)}")
        return CheckResponse(**run_suite(suite))

    return app


app = create_app()
