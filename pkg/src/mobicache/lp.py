"""Linear-program materialization of the placement problem, plus a brute-force
chunk-grid oracle.

The min terms in the coverage constraint

    d[k, m] >= B - sum_n min(x[n, k], R_n * S[m, n])

are expanded into one linear row per subset of the path's visited cells: the
cells in the subset contribute their delivery budget R_n * S[m, n] as a
constant (folded into the right-hand side), the rest keep their x variable on
the left. Unvisited cells contribute nothing either way because x >= 0 and
their budget is zero. No LP solver is embedded; programs are exported in the
standard LP text format for external tools, and in-repo certification uses
brute_force_optimal instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .evaluation import evaluate
from .model import (
    BudgetExceededError,
    CachingPolicy,
    CellNetwork,
    ShapeError,
    VideoLibrary,
    t_min,
)
from .mobility import PathEnsemble

#: Maximum LP rows / brute-force candidates before refusing.
ROW_BUDGET = 10_000_000
CANDIDATE_BUDGET = 10_000_000


@dataclass(frozen=True)
class Constraint:
    """One sparse row: sum(coef * var) <sense> rhs, sense in {">=", "<="}."""

    name: str
    terms: tuple          # ((coefficient, variable name), ...)
    sense: str
    rhs: float

    def satisfied_by(self, values: dict, tol: float = 0.0) -> bool:
        lhs = math.fsum(c * values[v] for c, v in self.terms)
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return lhs <= self.rhs + tol


@dataclass(frozen=True)
class LinearProgram:
    """Minimization LP: objective terms, rows, and nonnegative variables."""

    variables: tuple      # names, in declaration order
    objective: tuple      # ((coefficient, variable name), ...)
    constraints: tuple    # Constraint rows

    @property
    def row_count(self) -> int:
        return len(self.constraints)


def x_var(cell: int, file: int) -> str:
    """Name of the cached-bits variable for (cell, file), 0-based inputs."""
    return f"x_{cell + 1}_{file + 1}"


def d_var(file: int, path: int) -> str:
    """Name of the deficit variable for (file, path), 0-based inputs."""
    return f"d_{file + 1}_{path + 1}"


def linearize_pair(sojourn_row, file: int, path: int, network: CellNetwork,
                   file_size: float) -> list:
    """Coverage rows for one (file, path) pair: one per visited-cell subset.

    Rows whose folded right-hand side is nonpositive and whose left side has
    no x terms (the all-cells subset) are vacuous given d >= 0 and dropped.
    """
    s = np.asarray(sojourn_row, dtype=float)
    if s.shape != (network.cell_count,):
        raise ShapeError("sojourn_row must have one count per cell")
    visited = [int(n) for n in np.where(s > 0)[0]]
    budget = {n: float(network.rate[n] * s[n]) for n in visited}
    dname = d_var(file, path)
    rows = []
    for mask in range(2 ** len(visited)):
        folded = 0.0
        terms = []
        for i, n in enumerate(visited):
            if mask >> i & 1:
                folded += budget[n]
            else:
                terms.append((1.0, x_var(n, file)))
        rhs = file_size - folded
        if not terms and rhs <= 0.0:
            continue
        terms.append((1.0, dname))
        rows.append(Constraint(name=f"cov_{file + 1}_{path + 1}_{mask}",
                               terms=tuple(terms), sense=">=", rhs=rhs))
    return rows


def build_p2(library: VideoLibrary, network: CellNetwork,
             ensemble: PathEnsemble) -> LinearProgram:
    """Full LP: capacity rows, coverage rows for every (file, path) pair.

    Requires an exact ensemble (sampled ensembles would duplicate paths and
    inflate the program without changing the optimum). Refuses to build more
    than ROW_BUDGET rows.
    """
    if ensemble.kind != "exact":
        raise ValueError("build_p2 requires an exact (enumerated) ensemble")
    if ensemble.cell_count != network.cell_count:
        raise ShapeError("ensemble / network cell counts differ")
    n_cells = network.cell_count
    k_count = library.file_count
    m_count = ensemble.path_count

    visited_counts = (ensemble.sojourn > 0).sum(axis=1)
    upper = n_cells + k_count * int((2.0 ** visited_counts).sum())
    if upper > ROW_BUDGET:
        raise BudgetExceededError(
            f"LP would have up to {upper} rows (> {ROW_BUDGET})")

    variables = [x_var(n, k) for n in range(n_cells) for k in range(k_count)]
    variables += [d_var(k, m) for k in range(k_count) for m in range(m_count)]

    objective = tuple(
        (float(ensemble.prob[m] * library.popularity[k]), d_var(k, m))
        for k in range(k_count) for m in range(m_count))

    rows = []
    for n in range(n_cells):
        rows.append(Constraint(
            name=f"cap_{n + 1}",
            terms=tuple((1.0, x_var(n, k)) for k in range(k_count)),
            sense="<=", rhs=float(network.capacity[n])))
    for k in range(k_count):
        for m in range(m_count):
            rows.extend(linearize_pair(ensemble.sojourn[m], k, m, network,
                                       library.file_size))
    return LinearProgram(variables=tuple(variables), objective=objective,
                         constraints=tuple(rows))


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _join_terms(terms) -> str:
    parts = []
    for i, (coef, var) in enumerate(terms):
        if coef < 0:
            lead = "- " if i else "-"
        else:
            lead = "+ " if i else ""
        mag = abs(coef)
        if mag == 1.0:
            parts.append(f"{lead}{var}")
        else:
            parts.append(f"{lead}{_num(mag)} {var}")
    return " ".join(parts)


def export_lp(lp: LinearProgram, destination=None) -> str:
    """Serialize to LP text format; optionally write to a path or stream.

    Output is byte-stable for identical programs: fixed section order, fixed
    row order, repr-based number formatting.
    """
    lines = ["Minimize", " obj: " + (_join_terms(lp.objective) or "0"),
             "Subject To"]
    for row in lp.constraints:
        lines.append(f" {row.name}: {_join_terms(row.terms)} {row.sense} "
                     f"{_num(row.rhs)}")
    lines.append("Bounds")
    for var in lp.variables:
        lines.append(f" {var} >= 0")
    lines.append("End")
    text = "\n".join(lines) + "\n"
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            with open(destination, "w") as fh:
                fh.write(text)
    return text


def _count_tuples(k_count: int, level_cap: int, budget: int) -> int:
    """Number of k-tuples with entries in [0, level_cap] summing to <= budget."""
    budget = min(budget, k_count * level_cap)
    if budget < 0:
        return 0
    counts = [0] * (budget + 1)
    counts[0] = 1
    for _ in range(k_count):
        prefix = list(itertools.accumulate(counts))
        nxt = [0] * (budget + 1)
        for u in range(budget + 1):
            lo = u - level_cap
            nxt[u] = prefix[u] - (prefix[lo - 1] if lo >= 1 else 0)
        counts = nxt
    return sum(counts)


def _cell_grid(network: CellNetwork, library: VideoLibrary, slots: int,
               cell: int, chunk: float):
    """(level_cap, budget_chunks) for one cell's chunk grid."""
    cap_bits = min(float(network.capacity[cell]),
                   slots * float(network.rate[cell]), library.file_size)
    level_cap = int(cap_bits / chunk + 1e-9)
    budget = int(float(network.capacity[cell]) / chunk + 1e-9)
    return level_cap, min(budget, library.file_count * level_cap)


def _cell_tuples(k_count: int, level_cap: int, budget: int):
    """All feasible per-cell chunk vectors, lexicographically ascending."""
    out = []
    cur = [0] * k_count

    def rec(i: int, used: int):
        if i == k_count:
            out.append(tuple(cur))
            return
        for v in range(min(level_cap, budget - used) + 1):
            cur[i] = v
            rec(i + 1, used + v)
        cur[i] = 0

    rec(0, 0)
    return out


def brute_force_optimal(library: VideoLibrary, network: CellNetwork,
                        ensemble: PathEnsemble, chunk: float | None = None,
                        decompose: bool | None = None):
    """Exhaustive chunk-grid minimizer; returns (CachingPolicy, d_av).

    Allocations range over multiples of ``chunk`` (default: the smallest cell
    rate) up to min(capacity, T * rate, file size) per entry, subject to the
    cell capacity. When the deadline is at most B / R_max the objective
    separates per cell and each cell is searched independently; ``decompose``
    forces the joint product search (False) or the per-cell search (True)
    regardless. Ties go to the lexicographically smallest policy matrix.
    Refuses searches beyond CANDIDATE_BUDGET candidates.
    """
    if chunk is None:
        chunk = float(network.rate.min())
    if not chunk > 0:
        raise ValueError("chunk must be positive")
    slots = ensemble.slots
    n_cells = network.cell_count
    k_count = library.file_count
    b = library.file_size
    if decompose is None:
        decompose = slots <= t_min(library, network) + 1e-12

    grids = [_cell_grid(network, library, slots, n, chunk)
             for n in range(n_cells)]
    per_cell_counts = [_count_tuples(k_count, lc, bu) for lc, bu in grids]
    total = sum(per_cell_counts) if decompose else math.prod(per_cell_counts)
    if total > CANDIDATE_BUDGET:
        raise BudgetExceededError(
            f"brute force would evaluate {total} candidates "
            f"(> {CANDIDATE_BUDGET})")

    rs = network.rate[None, :] * ensemble.sojourn
    q = ensemble.prob
    p = library.popularity

    if decompose:
        x = np.zeros((n_cells, k_count))
        for n in range(n_cells):
            level_cap, budget = grids[n]
            # Coverage value of one file at each grid level, for this cell.
            level_value = np.array(
                [float(q @ np.minimum(l * chunk, rs[:, n]))
                 for l in range(level_cap + 1)])
            best_val = -1.0
            best = None
            for tup in _cell_tuples(k_count, level_cap, budget):
                val = float(p @ level_value[list(tup)])
                if val > best_val:
                    best_val = val
                    best = tup
            x[n] = np.asarray(best, dtype=float) * chunk
        policy = CachingPolicy(x)
        return policy, evaluate(policy, ensemble, library, network).d_av

    best_dav = math.inf
    best_x = None
    cell_options = [_cell_tuples(k_count, lc, bu) for lc, bu in grids]
    for combo in itertools.product(*cell_options):
        x = np.asarray(combo, dtype=float) * chunk
        per_file = 0.0
        for k in range(k_count):
            covered = np.minimum(rs, x[None, :, k]).sum(axis=1)
            per_file += p[k] * float(q @ np.maximum(b - covered, 0.0))
        if per_file < best_dav:
            best_dav = per_file
            best_x = x
    policy = CachingPolicy(best_x)
    return policy, evaluate(policy, ensemble, library, network).d_av
