"""Shared fixtures, generators, and independent oracles.

The oracles here are deliberately naive re-implementations (plain loops,
no shared code with the package) so that agreement is meaningful:

* dp_sojourn_ccdf: forward dynamic programming over (current cell, visit
  count) states, never enumerating paths.
* naive_objective: the expected macro-cell download computed directly from
  its definition, one path / file / cell at a time.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import mobicache as mc

settings.register_profile(
    "suite",
    max_examples=150,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much,
                           HealthCheck.data_too_large],
)
settings.load_profile("suite")


def dp_sojourn_ccdf(model: mc.MobilityModel, slots: int) -> np.ndarray:
    """P(sojourn in cell n >= t) via DP over (cell, visits-to-n) states."""
    n_cells = model.cell_count
    out = np.zeros((n_cells, slots))
    for n in range(n_cells):
        dist = np.zeros((n_cells, slots + 1))
        for c in range(n_cells):
            dist[c, 1 if c == n else 0] += model.initial[c]
        for _ in range(slots - 1):
            nxt = np.zeros_like(dist)
            for c in range(n_cells):
                for v in range(slots + 1):
                    mass = dist[c, v]
                    if mass == 0.0:
                        continue
                    for c2 in range(n_cells):
                        step = model.transition[c, c2]
                        if step == 0.0:
                            continue
                        nxt[c2, min(v + (1 if c2 == n else 0), slots)] += \
                            mass * step
            dist = nxt
        visit_dist = dist.sum(axis=0)
        for t in range(1, slots + 1):
            out[n, t - 1] = visit_dist[t:].sum()
    return out


def naive_objective(x, popularity, file_size, rates, paths, probs) -> float:
    """Definition-level objective: loop over paths, files, and cells."""
    total = 0.0
    for path, q in zip(paths, probs):
        counts = {}
        for cell in path:
            counts[cell] = counts.get(cell, 0) + 1
        for k, p_k in enumerate(popularity):
            covered = 0.0
            for cell, s in counts.items():
                covered += min(x[cell][k], rates[cell] * s)
            total += q * p_k * max(file_size - covered, 0.0)
    return total


def random_chain(rng: np.random.Generator, n_cells: int,
                 sparse: bool = False) -> mc.MobilityModel:
    """Random row-stochastic chain; optionally with zeroed-out transitions."""
    trans = rng.random((n_cells, n_cells)) + 0.05
    if sparse and n_cells > 1:
        mask = rng.random((n_cells, n_cells)) < 0.3
        np.fill_diagonal(mask, False)    # keep every row renormalizable
        trans[mask] = 0.0
    trans /= trans.sum(axis=1, keepdims=True)
    initial = rng.random(n_cells) + 0.05
    initial /= initial.sum()
    return mc.MobilityModel(transition=trans, initial=initial)


def random_popularity(rng: np.random.Generator, k_count: int) -> np.ndarray:
    p = np.sort(rng.random(k_count) + 0.01)[::-1]
    return p / p.sum()


def random_instance(rng: np.random.Generator, *, max_cells=3, max_files=4,
                    max_slots=3, grid_capacity=True, beyond_threshold=False):
    """Small random instance on a common chunk grid, deadline <= B / R_max.

    Rates are integer multiples of the chunk and capacities multiples of the
    chunk, so the brute-force grid contains every breakpoint of the
    per-cell objective and the slope-based policy's optimum. With
    ``beyond_threshold`` the deadline may exceed the single-cell download
    threshold (for exercising the regime where the slope policy is merely a
    heuristic).
    """
    n_cells = int(rng.integers(1, max_cells + 1))
    k_count = int(rng.integers(1, max_files + 1))
    chunk = float(rng.choice([0.2, 0.25, 0.5]))
    slot_cap = int(1.0 / chunk + 1e-9)
    if beyond_threshold:
        slots = int(rng.integers(1, max_slots + 1))
    else:
        slots = int(rng.integers(1, min(max_slots, slot_cap) + 1))
    # R_n = m_n * chunk with T * R_n <= B, so the deadline stays below the
    # single-cell download threshold.
    max_mult = max(int(1.0 / (slots * chunk) + 1e-9), 1)
    mults = rng.integers(1, max_mult + 1, size=n_cells)
    rates = mults * chunk
    if grid_capacity:
        caps = chunk * rng.integers(0, int(1.0 / chunk) * k_count + 1,
                                    size=n_cells)
    else:
        caps = rng.random(n_cells) * k_count
    library = mc.VideoLibrary(file_size=1.0,
                              popularity=random_popularity(rng, k_count))
    network = mc.CellNetwork(rate=rates, capacity=caps,
                             adjacency=np.zeros((n_cells, n_cells), bool))
    model = random_chain(rng, n_cells)
    ensemble = mc.enumerate_paths(model, slots)
    return library, network, model, ensemble, chunk


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


@pytest.fixture
def two_cell_chain():
    """The hand-enumerable 2-cell chain: stay probability one half, uniform."""
    return mc.build_grid_mobility(2, 1, 0.5)


@pytest.fixture
def single_cell_library():
    return mc.VideoLibrary(file_size=1.0, popularity=[0.7, 0.3])
