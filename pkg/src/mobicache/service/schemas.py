"""Request / response bodies of the HTTP service.

Every request embeds a full Scenario document, so a service call carries the
same information as a config file; responses return text artifacts (CSV, LP)
plus small metadata fields.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..scenario import Scenario


class PathsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    seed: int | None = None            # overrides mobility.seed when sampling


class PathsResponse(BaseModel):
    csv: str
    path_count: int
    kind: str


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    policy: str = Field(description="gamma | gamma_at_tmin | greedy | popular")
    seed: int | None = None


class SolveResponse(BaseModel):
    policy: str
    csv: str                           # policy matrix
    d_av_norm: float


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    policy_csv: str
    policy_name: str = "policy"
    scenario_id: str = "inline"
    seed: int | None = None


class EvaluateResponse(BaseModel):
    scenario_id: str
    policy_name: str
    d_av_norm: float


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    seed: int | None = None
    timings: bool | None = None


class SweepResponse(BaseModel):
    csv: str
    row_count: int


class ExportLpRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario


class ExportLpResponse(BaseModel):
    lp: str
    row_count: int
    variable_count: int


class OracleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    chunk: float | None = None
    decompose: bool | None = None


class OracleResponse(BaseModel):
    csv: str                           # optimal policy matrix
    d_av_norm: float


class ErrorBody(BaseModel):
    code: str                          # config | budget | internal
    message: str
    fields: list[str] = Field(default_factory=list)
