"""Cache placement policies.

Three constructors are provided:

* gamma_policy: per-cell marginal-value allocation. Each (file, chunk) pair
  has slope popularity * P(sojourn >= chunk index); cells grant rate-sized
  chunks in slope order until capacity runs out. Minimizes the expected
  macro-cell download when the deadline does not exceed the single-cell
  download time B / R_max.
* greedy_policy: pairwise storage reallocation on top of a seed placement,
  for deadlines beyond that threshold. Repeatedly moves one rate-sized chunk
  from the least damaging file to the most helped file within a cell, while
  that strictly lowers the objective.
* most_popular_policy: baseline that fills each cell with the top-ranked
  files outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    CachingPolicy,
    CellNetwork,
    InvalidModelError,
    ShapeError,
    VideoLibrary,
    validate_policy,
)
from .mobility import PathEnsemble, SojournCCDF


@dataclass(frozen=True)
class GammaTable:
    """Marginal-value slopes, indexed [cell, file, chunk-1].

    gamma[n, k, t-1] = popularity[k] * P(sojourn in cell n >= t). Tables are
    non-increasing along both the file axis (popularity rank order) and the
    chunk axis (CCDF tail order).
    """

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 3:
            raise ShapeError("gamma table must be cells x files x chunks")
        if np.any(g[:, :, 1:] > g[:, :, :-1] + 1e-12):
            raise InvalidModelError("gamma must be non-increasing along chunks")
        if np.any(g[:, 1:, :] > g[:, :-1, :] + 1e-12):
            raise InvalidModelError("gamma must be non-increasing along files")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def cell_count(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def file_count(self) -> int:
        return int(self.gamma.shape[1])

    @property
    def slots(self) -> int:
        return int(self.gamma.shape[2])


def gamma_table(library: VideoLibrary, ccdf: SojournCCDF) -> GammaTable:
    """Outer product of popularity and the sojourn tail probabilities."""
    if library.file_count < 1:
        raise ShapeError("library is empty")
    values = library.popularity[None, :, None] * ccdf.table[:, None, :]
    return GammaTable(gamma=values)


def allocate_by_gamma(table: GammaTable, network: CellNetwork,
                      file_size: float) -> CachingPolicy:
    """Greedy chunk allocation from a slope table (the core of gamma_policy).

    Per cell, (file, chunk) entries are visited in slope order, ties broken
    toward the more popular file and then the earlier chunk. Each visit
    grants one rate-sized chunk (clipped to remaining capacity and to the
    file-size ceiling); zero-slope entries are skipped, so capacity is never
    parked on bits no path can use.
    """
    if table.cell_count != network.cell_count:
        raise ShapeError("gamma table / network cell counts differ")
    n_cells = table.cell_count
    k_count = table.file_count
    slots = table.slots
    b = file_size
    x = np.zeros((n_cells, k_count))
    file_idx, chunk_idx = np.divmod(np.arange(k_count * slots), slots)
    for n in range(n_cells):
        rate = float(network.rate[n])
        remaining = float(network.capacity[n])
        if remaining <= 0.0:
            continue
        flat = table.gamma[n].reshape(-1)
        order = np.lexsort((chunk_idx, file_idx, -flat))
        for pos in order:
            g = flat[pos]
            if g <= 0.0:
                break               # sorted: everything after has no value
            k = int(file_idx[pos])
            useful = min(rate, b - x[n, k])
            if useful <= 0.0:
                continue            # file already at the ceiling
            grant = min(useful, remaining)
            x[n, k] += grant
            remaining -= grant
            if remaining <= 1e-9 * b:
                break
    return CachingPolicy(x)


def gamma_policy(library: VideoLibrary, network: CellNetwork,
                 ccdf: SojournCCDF) -> CachingPolicy:
    """Per-cell slope-ordered chunk allocation; see allocate_by_gamma."""
    if ccdf.cell_count != network.cell_count:
        raise ShapeError("ccdf / network cell counts differ")
    return allocate_by_gamma(gamma_table(library, ccdf), network,
                             library.file_size)


@dataclass
class SwapCandidates:
    """Per-cell working state of the reallocation scan.

    v_plus / v_minus hold candidate file indices for receiving / giving up a
    chunk; delta arrays memoize the objective change of each single move
    (NaN where not yet computed). Deltas follow the gain convention:
    delta_plus[k] = d_av(x) - d_av(x + step) >= 0 and
    delta_minus[k] = d_av(x) - d_av(x - step) <= 0.
    """

    v_plus: set = field(default_factory=set)
    v_minus: set = field(default_factory=set)
    delta_plus: np.ndarray = None
    delta_minus: np.ndarray = None

    @classmethod
    def empty(cls, file_count: int) -> "SwapCandidates":
        return cls(v_plus=set(), v_minus=set(),
                   delta_plus=np.full(file_count, np.nan),
                   delta_minus=np.full(file_count, np.nan))

    def reset_sets(self) -> None:
        self.v_plus.clear()
        self.v_minus.clear()

    def invalidate(self, *files: int) -> None:
        for k in files:
            self.delta_plus[k] = np.nan
            self.delta_minus[k] = np.nan

    def best_pair(self):
        """Highest-net (receiver, giver) pair with distinct files, or None.

        The receiver argmax and giver argmax normally differ; when they
        coincide the runner-up pairings are compared instead (a same-file
        swap would be a no-op).
        """
        if not self.v_plus or not self.v_minus:
            return None
        plus = sorted(self.v_plus, key=lambda k: (-self.delta_plus[k], k))
        minus = sorted(self.v_minus, key=lambda k: (-self.delta_minus[k], k))
        if plus[0] != minus[0]:
            return plus[0], minus[0]
        options = []
        if len(plus) > 1:
            options.append((plus[1], minus[0]))
        if len(minus) > 1:
            options.append((plus[0], minus[1]))
        if not options:
            return None
        return max(options,
                   key=lambda ab: self.delta_plus[ab[0]] + self.delta_minus[ab[1]])


def _column_deficit(b, other_cov, own_cap, own_bits):
    return np.maximum(b - (other_cov + np.minimum(own_cap, own_bits)), 0.0)


def greedy_policy(seed_policy: CachingPolicy, ensemble_T: PathEnsemble,
                  library: VideoLibrary, network: CellNetwork,
                  step: float | None = None) -> CachingPolicy:
    """Improve a feasible seed by capacity-neutral chunk swaps within cells.

    Intended use: seed with the slope-based placement built for the
    threshold deadline, then reallocate against the true (longer) deadline's
    path ensemble. Each cell is scanned top allocation level downward in
    steps of its rate; at every level the least popular file holding that
    many bits may give a chunk up and its successor may receive one. The
    best give/receive pair is swapped whenever the net objective drop
    strictly exceeds 1e-9 * B, which bounds the number of swaps.

    ``step`` overrides the per-cell chunk size (default: the cell's rate).
    The objective never increases relative to the seed.
    """
    verdict = validate_policy(seed_policy, network, file_size=library.file_size)
    if not verdict.ok:
        raise ValueError(f"seed policy is infeasible: {verdict}")
    if seed_policy.file_count != library.file_count:
        raise ShapeError("seed / library file counts differ")
    if ensemble_T.cell_count != network.cell_count:
        raise ShapeError("ensemble / network cell counts differ")

    b = library.file_size
    eps = 1e-9 * b
    p = library.popularity
    t_slots = ensemble_T.slots
    k_count = library.file_count
    x = seed_policy.x.copy()
    rs_all = network.rate[None, :] * ensemble_T.sojourn

    for n in range(network.cell_count):
        rows = np.where(ensemble_T.sojourn[:, n] > 0)[0]
        if rows.size == 0:
            continue
        step_n = float(network.rate[n]) if step is None else float(step)
        if step_n <= 0:
            raise ValueError("step must be positive")
        ceiling = min(b, t_slots * float(network.rate[n]))
        q_n = ensemble_T.prob[rows]
        own_cap = rs_all[rows][:, n]
        other_cols = np.ones(network.cell_count, dtype=bool)
        other_cols[n] = False
        rs_other = rs_all[rows][:, other_cols]
        other_cov_cache: dict[int, np.ndarray] = {}

        def other_coverage(k: int) -> np.ndarray:
            cov = other_cov_cache.get(k)
            if cov is None:
                cov = np.minimum(rs_other, x[other_cols, k][None, :]).sum(axis=1)
                other_cov_cache[k] = cov
            return cov

        def move_gain(k: int, delta: float) -> float:
            # d_av(x) - d_av(x with the move applied), for this file alone.
            cov = other_coverage(k)
            d_old = _column_deficit(b, cov, own_cap, x[n, k])
            d_new = _column_deficit(b, cov, own_cap, x[n, k] + delta)
            return -float(p[k] * (q_n @ (d_new - d_old)))

        cand = SwapCandidates.empty(k_count)
        while True:
            x_max = float(x[n].max())
            if x_max <= eps:
                break
            cand.reset_sets()
            level = x_max
            while level > eps:
                holders = np.where(x[n] >= level - eps)[0]
                k_red = int(holders.max())
                if x[n, k_red] - step_n >= -eps and k_red not in cand.v_minus:
                    cand.v_minus.add(k_red)
                    if np.isnan(cand.delta_minus[k_red]):
                        cand.delta_minus[k_red] = move_gain(k_red, -step_n)
                k_inc = k_red + 1
                if (k_inc < k_count and k_inc not in cand.v_plus
                        and x[n, k_inc] + step_n <= ceiling + eps):
                    cand.v_plus.add(k_inc)
                    if np.isnan(cand.delta_plus[k_inc]):
                        cand.delta_plus[k_inc] = move_gain(k_inc, step_n)
                level -= step_n
            pair = cand.best_pair()
            if pair is None:
                break
            receiver, giver = pair
            net = float(cand.delta_plus[receiver] + cand.delta_minus[giver])
            if net <= eps:
                break
            x[n, receiver] += step_n
            x[n, giver] = max(x[n, giver] - step_n, 0.0)
            cand.invalidate(receiver, giver)

    return CachingPolicy(x)


def most_popular_policy(library: VideoLibrary,
                        network: CellNetwork) -> CachingPolicy:
    """Fill each cell with whole top-ranked files, remainder to the next one."""
    b = library.file_size
    k_count = library.file_count
    x = np.zeros((network.cell_count, k_count))
    for n in range(network.cell_count):
        cap = float(network.capacity[n])
        full = min(int(cap / b + 1e-12), k_count)
        x[n, :full] = b
        if full < k_count:
            x[n, full] = min(max(cap - full * b, 0.0), b)
    return CachingPolicy(x)
