"""FastAPI application exposing the library's operations.

The CLI talks to this app in-process by default, so handlers must stay
deterministic: no timestamps, no randomness beyond the seeds in the request.
Errors map to a stable envelope: config problems (including model-building
failures) return 422 with code "config", blown enumeration/search budgets
return 400 with code "budget".
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..evaluation import evaluate
from ..lp import brute_force_optimal, build_p2, export_lp
from ..mobility import sojourn_ccdf
from ..model import BudgetExceededError, CachingPolicy
from ..policies import gamma_policy, greedy_policy, most_popular_policy
from ..scenario import (
    ConfigError,
    Scenario,
    build_ensemble,
    build_library,
    build_mobility,
    build_network,
    format_sweep_csv,
    run_scenario,
    seed_deadline,
)
from .schemas import (
    ErrorBody,
    EvaluateRequest,
    EvaluateResponse,
    ExportLpRequest,
    ExportLpResponse,
    OracleRequest,
    OracleResponse,
    PathsRequest,
    PathsResponse,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
)

SOLVE_POLICIES = ("gamma", "gamma_at_tmin", "greedy", "popular")


def _components(scenario: Scenario, seed: int | None):
    library = build_library(scenario)
    network = build_network(scenario)
    model = build_mobility(scenario)
    ensemble = build_ensemble(scenario, model, scenario.deadline.slots,
                              seed=seed)
    return library, network, model, ensemble


def _solve(scenario: Scenario, policy_name: str, seed: int | None):
    library, network, model, ensemble = _components(scenario, seed)
    if policy_name == "popular":
        policy = most_popular_policy(library, network)
    elif policy_name == "gamma":
        policy = gamma_policy(library, network, sojourn_ccdf(ensemble))
    else:
        t_seed = seed_deadline(library, network)
        seed_ensemble = ensemble if t_seed == ensemble.slots else \
            build_ensemble(scenario, model, t_seed, seed=seed)
        seed_policy = gamma_policy(library, network,
                                   sojourn_ccdf(seed_ensemble))
        if policy_name == "gamma_at_tmin":
            policy = seed_policy
        else:
            policy = greedy_policy(seed_policy, ensemble, library, network)
    report = evaluate(policy, ensemble, library, network)
    return policy, report.d_av / library.file_size


def create_app() -> FastAPI:
    app = FastAPI(title="mobicache", version="1.0.0",
                  description="Coded cache placement service for mobile "
                              "users under delivery deadlines.")

    @app.exception_handler(BudgetExceededError)
    async def _budget_error(request: Request, exc: BudgetExceededError):
        body = ErrorBody(code="budget", message=str(exc))
        return JSONResponse(status_code=400,
                            content={"error": body.model_dump()})

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        body = ErrorBody(code="config", message=str(exc),
                         fields=list(exc.fields))
        return JSONResponse(status_code=422,
                            content={"error": body.model_dump()})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        # Domain constructors signal semantic input problems via ValueError
        # subclasses; surface them as config errors rather than 500s.
        body = ErrorBody(code="config", message=str(exc))
        return JSONResponse(status_code=422,
                            content={"error": body.model_dump()})

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.post("/paths", response_model=PathsResponse)
    async def paths(req: PathsRequest) -> PathsResponse:
        scenario = req.scenario
        model = build_mobility(scenario)
        ensemble = build_ensemble(scenario, model, scenario.deadline.slots,
                                  seed=req.seed)
        return PathsResponse(csv=ensemble.to_csv(),
                             path_count=ensemble.path_count,
                             kind=ensemble.kind)

    @app.post("/solve", response_model=SolveResponse)
    async def solve(req: SolveRequest) -> SolveResponse:
        if req.policy not in SOLVE_POLICIES:
            raise ConfigError(
                f"unknown policy {req.policy!r}; choose from "
                f"{', '.join(SOLVE_POLICIES)}", fields=("policy",))
        policy, d_norm = _solve(req.scenario, req.policy, req.seed)
        return SolveResponse(policy=req.policy, csv=policy.to_csv(),
                             d_av_norm=d_norm)

    @app.post("/evaluate", response_model=EvaluateResponse)
    async def evaluate_endpoint(req: EvaluateRequest) -> EvaluateResponse:
        library, network, model, ensemble = _components(req.scenario, req.seed)
        policy = CachingPolicy.from_csv(req.policy_csv)
        report = evaluate(policy, ensemble, library, network)
        return EvaluateResponse(scenario_id=req.scenario_id,
                                policy_name=req.policy_name,
                                d_av_norm=report.d_av / library.file_size)

    @app.post("/sweep", response_model=SweepResponse)
    async def sweep(req: SweepRequest) -> SweepResponse:
        rows = run_scenario(req.scenario, seed=req.seed, timings=req.timings)
        return SweepResponse(csv=format_sweep_csv(rows), row_count=len(rows))

    @app.post("/export-lp", response_model=ExportLpResponse)
    async def export_lp_endpoint(req: ExportLpRequest) -> ExportLpResponse:
        library, network, model, ensemble = _components(req.scenario, None)
        program = build_p2(library, network, ensemble)
        return ExportLpResponse(lp=export_lp(program),
                                row_count=program.row_count,
                                variable_count=len(program.variables))

    @app.post("/oracle", response_model=OracleResponse)
    async def oracle(req: OracleRequest) -> OracleResponse:
        library, network, model, ensemble = _components(req.scenario, None)
        policy, d_av = brute_force_optimal(library, network, ensemble,
                                           chunk=req.chunk,
                                           decompose=req.decompose)
        return OracleResponse(csv=policy.to_csv(),
                              d_av_norm=d_av / library.file_size)

    return app


app = create_app()
