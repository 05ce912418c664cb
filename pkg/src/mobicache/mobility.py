"""User mobility over cells: Markov chain, path ensembles, sojourn statistics.

A mobility model is a time-homogeneous Markov chain on the cell set. Path
ensembles come in two flavors, exact (full enumeration with exact path
probabilities) and sampled (Monte Carlo with empirical weights 1/count); the
rest of the package is agnostic to which kind it receives.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import (
    BudgetExceededError,
    InvalidModelError,
    ShapeError,
    as_slots,
    grid_adjacency,
)

#: Path-slot budget for exact enumeration (paths x deadline).
ENUMERATION_BUDGET = 5_000_000


@dataclass(frozen=True)
class MobilityModel:
    """Markov chain: N x N row-stochastic transition matrix + initial law."""

    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        p0 = np.asarray(self.initial, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ShapeError("transition matrix must be square")
        n = t.shape[0]
        if p0.shape != (n,):
            raise ShapeError("initial distribution must match transition size")
        if np.any(t < 0) or np.any(p0 < 0):
            raise InvalidModelError("probabilities must be nonnegative")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidModelError("transition rows must sum to 1 (within 1e-9)")
        if abs(float(p0.sum()) - 1.0) > 1e-9:
            raise InvalidModelError("initial distribution must sum to 1 (within 1e-9)")
        t = t.copy()
        p0 = p0.copy()
        t.setflags(write=False)
        p0.setflags(write=False)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "initial", p0)

    @property
    def cell_count(self) -> int:
        return int(self.transition.shape[0])

    def stationary(self) -> np.ndarray:
        """Stationary distribution (left eigenvector for eigenvalue 1)."""
        vals, vecs = np.linalg.eig(self.transition.T)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        v = np.real(vecs[:, idx])
        v = np.abs(v)
        return v / v.sum()


def build_grid_mobility(width: int, height: int, stay_prob,
                        initial="uniform") -> MobilityModel:
    """Grid random walk: stay with prob f_n, else uniform over 4-neighbors.

    ``stay_prob`` is a scalar or a per-cell vector. ``initial`` selects the
    starting law: "uniform", "stationary", or a 0-based cell index for a
    point mass.
    """
    n = width * height
    adj = grid_adjacency(width, height)
    f = np.broadcast_to(np.asarray(stay_prob, dtype=float), (n,)).copy()
    if np.any(f < 0) or np.any(f > 1):
        raise InvalidModelError("stay probabilities must lie in [0, 1]")
    trans = np.zeros((n, n))
    for i in range(n):
        nbrs = np.where(adj[i])[0]
        if nbrs.size == 0 and f[i] < 1.0:
            raise InvalidModelError(
                f"cell {i} has no neighbors; stay probability must be 1")
        trans[i, i] = f[i]
        if nbrs.size:
            trans[i, nbrs] = (1.0 - f[i]) / nbrs.size
    model_tmp = MobilityModel(transition=trans, initial=np.full(n, 1.0 / n))
    if isinstance(initial, str):
        if initial == "uniform":
            p0 = np.full(n, 1.0 / n)
        elif initial == "stationary":
            p0 = model_tmp.stationary()
        else:
            raise ValueError(f"unknown initial distribution {initial!r}")
    else:
        idx = int(initial)
        if not 0 <= idx < n:
            raise ValueError("initial cell index out of range")
        p0 = np.zeros(n)
        p0[idx] = 1.0
    return MobilityModel(transition=trans, initial=p0)


@dataclass(frozen=True)
class PathEnsemble:
    """A weighted set of length-T cell paths with per-path sojourn counts.

    paths    : M x T int32, entries are 0-based cell indices
    prob     : length-M weights summing to 1
    sojourn  : M x N slot counts, rows sum to T
    kind     : "exact" or "sampled"
    """

    paths: np.ndarray
    prob: np.ndarray
    sojourn: np.ndarray
    cell_count: int
    kind: str
    sample_count: int | None = None
    seed: int | None = None

    def __post_init__(self):
        p = np.asarray(self.paths, dtype=np.int32)
        q = np.asarray(self.prob, dtype=float)
        s = np.asarray(self.sojourn, dtype=float)
        if p.ndim != 2:
            raise ShapeError("paths must be M x T")
        m, t = p.shape
        if q.shape != (m,):
            raise ShapeError("prob must have one weight per path")
        if s.shape != (m, self.cell_count):
            raise ShapeError("sojourn must be M x N")
        if abs(float(q.sum()) - 1.0) > 1e-9:
            raise InvalidModelError("path weights must sum to 1 (within 1e-9)")
        for arr in (p, q, s):
            arr.setflags(write=False)
        object.__setattr__(self, "paths", p)
        object.__setattr__(self, "prob", q)
        object.__setattr__(self, "sojourn", s)

    @property
    def path_count(self) -> int:
        return int(self.paths.shape[0])

    @property
    def slots(self) -> int:
        return int(self.paths.shape[1])

    def to_csv(self) -> str:
        """CSV rows `path,q,s_1..s_N`; paths as 1-based dash strings."""
        buf = io.StringIO()
        n = self.cell_count
        buf.write("path,q," + ",".join(f"s_{i + 1}" for i in range(n)) + "\n")
        for row, q, soj in zip(self.paths, self.prob, self.sojourn):
            path_str = "-".join(str(int(c) + 1) for c in row)
            counts = ",".join(repr(float(v)) for v in soj)
            buf.write(f"{path_str},{float(q)!r},{counts}\n")
        return buf.getvalue()


def _sojourn_counts(paths: np.ndarray, cell_count: int) -> np.ndarray:
    m = paths.shape[0]
    out = np.zeros((m, cell_count))
    for c in range(cell_count):
        out[:, c] = (paths == c).sum(axis=1)
    return out


def enumerate_paths(model: MobilityModel, deadline,
                    budget: int = ENUMERATION_BUDGET) -> PathEnsemble:
    """All positive-probability length-T paths, lexicographic order.

    Raises BudgetExceededError when paths x T would exceed ``budget``
    (use sample_paths instead for such instances). Path probability is the
    initial weight times the product of transition steps.
    """
    t = as_slots(deadline)
    n = model.cell_count
    # Count reachable paths first so the budget check is exact and cheap:
    # counts[i] = number of positive-probability paths currently ending at cell i.
    support = model.transition > 0
    counts = (model.initial > 0).astype(np.int64)
    total = int(counts.sum())
    for _ in range(t - 1):
        counts = support.T @ counts
        total = int(counts.sum())
        if total * t > budget:
            raise BudgetExceededError(
                f"exact enumeration needs {total} paths of length {t} "
                f"(> {budget} path-slots); use sampled paths instead")
    if total * t > budget:
        raise BudgetExceededError(
            f"exact enumeration needs {total} paths of length {t} "
            f"(> {budget} path-slots); use sampled paths instead")

    paths = []
    probs = []
    path = np.empty(t, dtype=np.int32)

    def walk(step: int, prev: int, q: float):
        if step == t:
            paths.append(path.copy())
            probs.append(q)
            return
        row = model.initial if step == 0 else model.transition[prev]
        for cell in range(n):
            w = float(row[cell])
            if w > 0.0:
                path[step] = cell
                walk(step + 1, cell, q * w)

    walk(0, -1, 1.0)
    pmat = np.array(paths, dtype=np.int32).reshape(len(paths), t)
    qvec = np.array(probs)
    return PathEnsemble(paths=pmat, prob=qvec, sojourn=_sojourn_counts(pmat, n),
                        cell_count=n, kind="exact")


def sample_paths(model: MobilityModel, deadline, count: int,
                 seed: int | None = None) -> PathEnsemble:
    """Monte Carlo ensemble: ``count`` i.i.d. paths, each weighted 1/count."""
    t = as_slots(deadline)
    if count < 1:
        raise ValueError("count must be positive")
    n = model.cell_count
    rng = np.random.default_rng(seed)
    # Vectorized over the sample batch: one uniform draw per (path, slot),
    # inverse-CDF against the appropriate transition row.
    cum_init = np.cumsum(model.initial)
    cum_trans = np.cumsum(model.transition, axis=1)
    cum_init[-1] = 1.0           # guard against round-off at the top bin
    cum_trans[:, -1] = 1.0
    u = rng.random((count, t))
    paths = np.empty((count, t), dtype=np.int32)
    paths[:, 0] = np.searchsorted(cum_init, u[:, 0], side="right")
    for step in range(1, t):
        rows = cum_trans[paths[:, step - 1]]
        paths[:, step] = (u[:, step, None] < rows).argmax(axis=1)
    qvec = np.full(count, 1.0 / count)
    return PathEnsemble(paths=paths, prob=qvec,
                        sojourn=_sojourn_counts(paths, n), cell_count=n,
                        kind="sampled", sample_count=count, seed=seed)


@dataclass(frozen=True)
class SojournCCDF:
    """table[n, t-1] = P(user spends at least t slots in cell n)."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2:
            raise ShapeError("ccdf table must be N x T")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def cell_count(self) -> int:
        return int(self.table.shape[0])

    @property
    def slots(self) -> int:
        return int(self.table.shape[1])


def sojourn_ccdf(ensemble: PathEnsemble, deadline=None) -> SojournCCDF:
    """Weighted tail probabilities of per-cell sojourn time, t = 1..T.

    ``deadline`` defaults to the ensemble's own path length; passing a larger
    value pads with zeros (a sojourn can never exceed the path length).
    """
    if ensemble.path_count == 0:
        raise ShapeError("ensemble must contain at least one path")
    t = ensemble.slots if deadline is None else as_slots(deadline)
    n = ensemble.cell_count
    table = np.zeros((n, t))
    for thresh in range(1, min(t, ensemble.slots) + 1):
        table[:, thresh - 1] = ensemble.prob @ (ensemble.sojourn >= thresh)
    return SojournCCDF(table=table)
