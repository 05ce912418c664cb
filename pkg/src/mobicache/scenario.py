"""Scenario configs (validated key-value files) and the sweep runner.

A scenario fully describes one experiment: the file library, the cell grid,
the mobility chain, the deadline, an optional sweep axis, and output options.
Configs are YAML documents with sections library / network / mobility /
deadline / sweep / output and a mandatory schema_version. The same model
doubles as the request payload of the HTTP service.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .evaluation import evaluate
from .mobility import (
    MobilityModel,
    PathEnsemble,
    build_grid_mobility,
    enumerate_paths,
    sample_paths,
    sojourn_ccdf,
)
from .model import CellNetwork, VideoLibrary, t_min
from .policies import gamma_policy, greedy_policy, most_popular_policy

SCHEMA_VERSION = 1
POLICY_NAMES = ("gamma", "gamma_at_tmin", "greedy", "most_popular")
SWEEP_AXES = ("cache_fraction", "deadline", "rate")
CSV_HEADER = "sweep_axis,sweep_value,policy,T,T_min,d_av_norm,wall_ms"


class ConfigError(ValueError):
    """Invalid scenario input; carries the offending field paths."""

    def __init__(self, message: str, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class LibrarySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    file_count: int = Field(ge=1)
    file_size: float = Field(default=1.0, gt=0)
    zipf_exponent: float | None = None
    popularity: list[float] | None = None

    @model_validator(mode="after")
    def _one_popularity_source(self):
        if (self.zipf_exponent is None) == (self.popularity is None):
            raise ValueError(
                "exactly one of zipf_exponent / popularity is required")
        if self.popularity is not None and len(self.popularity) != self.file_count:
            raise ValueError("popularity length must equal file_count")
        return self


class NetworkSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: tuple[int, int]                      # width, height
    rate: float | list[float]
    capacity: float | list[float] | None = None
    cache_fraction: float | None = None        # of file_count * file_size

    @model_validator(mode="after")
    def _check(self):
        w, h = self.grid
        if w < 1 or h < 1:
            raise ValueError("grid dimensions must be positive")
        n = w * h
        if isinstance(self.rate, list) and len(self.rate) != n:
            raise ValueError("rate list length must equal the cell count")
        rates = self.rate if isinstance(self.rate, list) else [self.rate]
        if any(r <= 0 for r in rates):
            raise ValueError("rates must be positive")
        if (self.capacity is None) == (self.cache_fraction is None):
            raise ValueError(
                "exactly one of capacity / cache_fraction is required")
        if isinstance(self.capacity, list) and len(self.capacity) != n:
            raise ValueError("capacity list length must equal the cell count")
        if self.cache_fraction is not None and self.cache_fraction < 0:
            raise ValueError("cache_fraction must be nonnegative")
        return self

    @property
    def cell_count(self) -> int:
        return self.grid[0] * self.grid[1]


class MobilitySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stay_prob: float | list[float]
    stay_prob_overrides: dict[int, float] = Field(default_factory=dict)  # 1-based
    initial: Literal["uniform", "stationary"] | int = "uniform"
    ensemble: Literal["exact", "sampled"] = "exact"
    sample_count: int = Field(default=100_000, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        probs = (self.stay_prob if isinstance(self.stay_prob, list)
                 else [self.stay_prob])
        if any(not 0 <= f <= 1 for f in probs):
            raise ValueError("stay probabilities must lie in [0, 1]")
        if any(not 0 <= f <= 1 for f in self.stay_prob_overrides.values()):
            raise ValueError("stay probability overrides must lie in [0, 1]")
        return self


class DeadlineSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    slots: int = Field(ge=1)


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: Literal["cache_fraction", "deadline", "rate"]
    values: list[float]
    policies: list[Literal["gamma", "gamma_at_tmin", "greedy", "most_popular"]] = \
        Field(default_factory=lambda: list(POLICY_NAMES))

    @model_validator(mode="after")
    def _check(self):
        if not self.values:
            raise ValueError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.axis == "deadline":
            if any(v != int(v) or v < 1 for v in self.values):
                raise ValueError("deadline sweep values must be integers >= 1")
        elif any(v <= 0 for v in self.values):
            raise ValueError("sweep values must be positive")
        if not self.policies:
            raise ValueError("policy list must be non-empty")
        if len(set(self.policies)) != len(self.policies):
            raise ValueError("policy list must not repeat entries")
        return self


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str | None = None
    timings: bool = False


class Scenario(BaseModel):
    """One validated experiment description (also the service payload)."""

    model_config = ConfigDict(extra="forbid")

    schema_version: int
    library: LibrarySpec
    network: NetworkSpec
    mobility: MobilitySpec
    deadline: DeadlineSpec
    sweep: SweepSpec | None = None
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"schema_version must be {SCHEMA_VERSION}")
        n = self.network.cell_count
        if isinstance(self.mobility.stay_prob, list) \
                and len(self.mobility.stay_prob) != n:
            raise ValueError("stay_prob list length must equal the cell count")
        for cell in self.mobility.stay_prob_overrides:
            if not 1 <= cell <= n:
                raise ValueError(
                    f"stay_prob_overrides cell {cell} outside 1..{n}")
        if isinstance(self.mobility.initial, int) \
                and not 1 <= self.mobility.initial <= n:
            raise ValueError(f"initial cell must lie in 1..{n}")
        return self


def _format_validation_error(err: ValidationError) -> ConfigError:
    fields = []
    parts = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "<root>"
        fields.append(loc)
        parts.append(f"{loc}: {item['msg']}")
    return ConfigError("invalid scenario config: " + "; ".join(parts), fields)


def scenario_from_mapping(data) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario config must be a mapping")
    try:
        return Scenario.model_validate(data)
    except ValidationError as err:
        raise _format_validation_error(err) from err


def scenario_from_yaml(path) -> Scenario:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from err
    return scenario_from_mapping(data)


# ---------------------------------------------------------------------------
# Builders: turn validated specs into domain objects.

def build_library(scenario: Scenario) -> VideoLibrary:
    lib = scenario.library
    if lib.popularity is not None:
        return VideoLibrary(file_size=lib.file_size, popularity=lib.popularity)
    return VideoLibrary.zipf(lib.zipf_exponent, lib.file_count, lib.file_size)


def resolve_capacity(scenario: Scenario, cache_fraction: float | None = None):
    """Per-config capacity in bits; a sweep may override the fraction."""
    net = scenario.network
    lib = scenario.library
    if cache_fraction is not None:
        return cache_fraction * lib.file_count * lib.file_size
    if net.cache_fraction is not None:
        return net.cache_fraction * lib.file_count * lib.file_size
    return net.capacity


def build_network(scenario: Scenario, cache_fraction: float | None = None,
                  rate: float | None = None) -> CellNetwork:
    net = scenario.network
    width, height = net.grid
    return CellNetwork.grid(
        width, height,
        rate=net.rate if rate is None else rate,
        capacity=resolve_capacity(scenario, cache_fraction))


def build_mobility(scenario: Scenario) -> MobilityModel:
    mob = scenario.mobility
    net = scenario.network
    n = net.cell_count
    stay = list(mob.stay_prob) if isinstance(mob.stay_prob, list) \
        else [mob.stay_prob] * n
    for cell, f in mob.stay_prob_overrides.items():
        stay[cell - 1] = f
    initial = mob.initial
    if isinstance(initial, int):
        initial = initial - 1          # config is 1-based
    return build_grid_mobility(net.grid[0], net.grid[1], stay, initial=initial)


def build_ensemble(scenario: Scenario, model: MobilityModel, slots: int,
                   seed: int | None = None) -> PathEnsemble:
    mob = scenario.mobility
    if mob.ensemble == "exact":
        return enumerate_paths(model, slots)
    return sample_paths(model, slots, mob.sample_count,
                        seed=mob.seed if seed is None else seed)


def seed_deadline(library: VideoLibrary, network: CellNetwork) -> int:
    """Deadline used to build the reallocation seed: floor of B / R_max."""
    return max(1, int(math.floor(t_min(library, network) + 1e-9)))


# ---------------------------------------------------------------------------
# Sweep runner.

def _point_rows(scenario: Scenario, library: VideoLibrary, value: float,
                seed: int | None, timings: bool) -> list[tuple]:
    axis = scenario.sweep.axis
    if axis == "cache_fraction":
        network = build_network(scenario, cache_fraction=value)
        slots = scenario.deadline.slots
    elif axis == "deadline":
        network = build_network(scenario)
        slots = int(value)
    else:
        network = build_network(scenario, rate=value)
        slots = scenario.deadline.slots
    model = build_mobility(scenario)
    ensemble = build_ensemble(scenario, model, slots, seed=seed)
    threshold = t_min(library, network)
    t_seed = seed_deadline(library, network)

    names = scenario.sweep.policies
    need_seed_policy = "gamma_at_tmin" in names or "greedy" in names
    seed_policy = None
    if need_seed_policy:
        seed_ensemble = ensemble if t_seed == slots else \
            build_ensemble(scenario, model, t_seed, seed=seed)
        seed_policy = gamma_policy(library, network, sojourn_ccdf(seed_ensemble))

    b = library.file_size
    rows = []
    scores = {}
    for name in names:
        started = time.perf_counter()
        if name == "gamma":
            policy = gamma_policy(library, network, sojourn_ccdf(ensemble))
        elif name == "gamma_at_tmin":
            policy = seed_policy
        elif name == "greedy":
            policy = greedy_policy(seed_policy, ensemble, library, network)
        else:
            policy = most_popular_policy(library, network)
        d_norm = evaluate(policy, ensemble, library, network).d_av / b
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if not -1e-9 <= d_norm <= 1 + 1e-9:
            raise RuntimeError(
                f"normalized objective {d_norm} outside [0, 1] for {name}")
        scores[name] = d_norm
        rows.append((axis, value, name, slots, threshold, d_norm,
                     str(int(elapsed_ms)) if timings else ""))
    if "greedy" in scores and "gamma_at_tmin" in scores:
        if scores["greedy"] > scores["gamma_at_tmin"] + 1e-9:
            raise RuntimeError(
                "greedy policy scored worse than its seed at "
                f"{axis}={value}: {scores['greedy']} > {scores['gamma_at_tmin']}")
    return rows


def run_scenario(scenario: Scenario, seed: int | None = None,
                 timings: bool | None = None) -> list[tuple]:
    """All sweep rows, in (sweep point, policy list) order.

    Row layout matches CSV_HEADER. Points are evaluated concurrently but
    collected in deterministic sweep order.
    """
    if scenario.sweep is None:
        raise ConfigError("scenario has no sweep section", fields=("sweep",))
    if timings is None:
        timings = scenario.output.timings
    library = build_library(scenario)
    values = scenario.sweep.values
    with ThreadPoolExecutor(max_workers=min(4, len(values))) as pool:
        futures = [pool.submit(_point_rows, scenario, library, v, seed, timings)
                   for v in values]
        rows = []
        for fut in futures:
            rows.extend(fut.result())
    return rows


def format_sweep_csv(rows) -> str:
    """Render runner rows as the canonical CSV (byte-stable float formatting)."""
    lines = [CSV_HEADER]
    for axis, value, name, slots, threshold, d_norm, wall_ms in rows:
        lines.append(",".join([
            axis, repr(float(value)), name, str(int(slots)),
            repr(float(threshold)), repr(float(d_norm)), wall_ms]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Presets.

FULL_STAY_OVERRIDES = {4: 0.4, 13: 0.4, 7: 0.5, 9: 0.5}   # 1-based cells


def preset_scenario(scale: str, axis: str) -> Scenario:
    """Named experiment presets.

    scale "small" is the desk-size variant (2x2 grid, 100 files) meant for
    quick runs and CI; "full" is the 16-cell, 1000-file benchmark. Axes:
    cache_fraction (10%..50% of the library), deadline (2..6 slots at 30%
    cache), rate (1/6..1/2 file per slot at 30% cache, 5-slot deadline).
    """
    if scale not in ("small", "full"):
        raise ConfigError(f"unknown scale {scale!r}", fields=("scale",))
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}", fields=("sweep.axis",))
    if scale == "small":
        grid = (2, 2)
        file_count = 100
        overrides = {}
    else:
        grid = (4, 4)
        file_count = 1000
        overrides = dict(FULL_STAY_OVERRIDES)
    if axis == "cache_fraction":
        sweep_values = [0.1, 0.2, 0.3, 0.4, 0.5]
        base = {"cache_fraction": 0.3}
    elif axis == "deadline":
        sweep_values = [2.0, 3.0, 4.0, 5.0, 6.0]
        base = {"cache_fraction": 0.3}
    else:
        sweep_values = [1 / 6, 1 / 5, 1 / 4, 1 / 3, 1 / 2]
        base = {"cache_fraction": 0.3}
    return Scenario(
        schema_version=SCHEMA_VERSION,
        library=LibrarySpec(file_count=file_count, file_size=1.0,
                            zipf_exponent=0.56),
        network=NetworkSpec(grid=grid, rate=0.5, **base),
        mobility=MobilitySpec(stay_prob=0.3, stay_prob_overrides=overrides,
                              initial="uniform", ensemble="exact"),
        deadline=DeadlineSpec(slots=5),
        sweep=SweepSpec(axis=axis, values=sweep_values),
        output=OutputSpec(),
    )
