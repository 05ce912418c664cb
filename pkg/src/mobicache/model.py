"""Core domain types: video library, cell network, caching policy, deadline.

Conventions used across the package: all sizes are bits as real numbers,
rates are bits per slot, and feasibility / equality checks use an absolute
tolerance of ``REL_TOL * file_size``. Every type is immutable after
construction (arrays are frozen), so instances can be shared freely across
workers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

#: Relative tolerance for feasibility and equality checks, in units of file size.
REL_TOL = 1e-9


class ShapeError(ValueError):
    """Structural mismatch (wrong dimensions), distinct from infeasibility."""


class InvalidModelError(ValueError):
    """Parameters that cannot form a valid model (e.g. a stranded cell)."""


class BudgetExceededError(RuntimeError):
    """An enumeration or search budget was exceeded."""


def feasibility_tol(file_size: float) -> float:
    return REL_TOL * file_size


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def zipf_popularity(exponent: float, file_count: int) -> np.ndarray:
    """Zipf request probabilities p_k = k^-s / sum_j j^-s for k = 1..K."""
    if file_count < 1:
        raise ValueError("file_count must be positive")
    ranks = np.arange(1, file_count + 1, dtype=float)
    weights = ranks ** (-exponent)
    return weights / weights.sum()


@dataclass(frozen=True)
class VideoLibrary:
    """K equally sized files ordered by decreasing request probability."""

    file_size: float
    popularity: np.ndarray

    def __post_init__(self):
        if not (self.file_size > 0):
            raise ValueError("file_size must be positive")
        p = np.asarray(self.popularity, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ShapeError("popularity must be a non-empty 1-D vector")
        if np.any(p < 0):
            raise ValueError("popularity entries must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError("popularity must sum to 1 (within 1e-9)")
        if np.any(np.diff(p) > 1e-12):
            raise ValueError("popularity must be non-increasing (files are rank-ordered)")
        object.__setattr__(self, "popularity", _frozen(p))

    @property
    def file_count(self) -> int:
        return int(self.popularity.size)

    @classmethod
    def zipf(cls, exponent: float, file_count: int, file_size: float = 1.0) -> "VideoLibrary":
        return cls(file_size=file_size, popularity=zipf_popularity(exponent, file_count))


@dataclass(frozen=True)
class CellNetwork:
    """N small cells with per-cell rate (bits/slot), capacity (bits), adjacency."""

    rate: np.ndarray
    capacity: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rate, dtype=float)
        c = np.asarray(self.capacity, dtype=float)
        a = np.asarray(self.adjacency, dtype=bool)
        if r.ndim != 1 or r.size < 1:
            raise ShapeError("rate must be a non-empty 1-D vector")
        n = r.size
        if c.shape != (n,):
            raise ShapeError("capacity must match rate length")
        if a.shape != (n, n):
            raise ShapeError("adjacency must be N x N")
        if np.any(r <= 0):
            raise ValueError("rates must be positive")
        if np.any(c < 0):
            raise ValueError("capacities must be nonnegative")
        if np.any(a != a.T):
            raise InvalidModelError("adjacency must be symmetric")
        if np.any(np.diag(a)):
            raise InvalidModelError("adjacency must have a false diagonal")
        object.__setattr__(self, "rate", _frozen(r))
        object.__setattr__(self, "capacity", _frozen(c))
        object.__setattr__(self, "adjacency", _frozen(a, dtype=bool))

    @property
    def cell_count(self) -> int:
        return int(self.rate.size)

    @classmethod
    def grid(cls, width: int, height: int, rate, capacity) -> "CellNetwork":
        """A width x height grid, 4-neighborhood, row-major cell indexing.

        ``rate`` and ``capacity`` may be scalars (shared by all cells) or
        per-cell vectors.
        """
        n = width * height
        if n < 1:
            raise ValueError("grid must contain at least one cell")
        adj = grid_adjacency(width, height)
        r = np.broadcast_to(np.asarray(rate, dtype=float), (n,))
        c = np.broadcast_to(np.asarray(capacity, dtype=float), (n,))
        return cls(rate=r.copy(), capacity=c.copy(), adjacency=adj)


def grid_adjacency(width: int, height: int) -> np.ndarray:
    """4-connected adjacency of a width x height grid, row-major indexing."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be positive")
    n = width * height
    adj = np.zeros((n, n), dtype=bool)
    for row in range(height):
        for col in range(width):
            i = row * width + col
            if col + 1 < width:
                adj[i, i + 1] = adj[i + 1, i] = True
            if row + 1 < height:
                adj[i, i + width] = adj[i + width, i] = True
    return adj


@dataclass(frozen=True)
class Deadline:
    """Download deadline in whole slots."""

    slots: int

    def __post_init__(self):
        if int(self.slots) != self.slots or self.slots < 1:
            raise ValueError("deadline must be a positive integer number of slots")
        object.__setattr__(self, "slots", int(self.slots))


def as_slots(deadline) -> int:
    """Coerce an int or Deadline to a validated slot count."""
    if isinstance(deadline, Deadline):
        return deadline.slots
    return Deadline(deadline).slots


@dataclass(frozen=True)
class CachingPolicy:
    """N x K matrix of parity bits stored per cell per file."""

    x: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.x, dtype=float)
        if m.ndim != 2:
            raise ShapeError("policy matrix must be 2-D (cells x files)")
        if not np.all(np.isfinite(m)):
            raise ValueError("policy entries must be finite")
        object.__setattr__(self, "x", _frozen(m))

    @property
    def cell_count(self) -> int:
        return int(self.x.shape[0])

    @property
    def file_count(self) -> int:
        return int(self.x.shape[1])

    @classmethod
    def zeros(cls, cell_count: int, file_count: int) -> "CachingPolicy":
        return cls(np.zeros((cell_count, file_count)))

    def with_entry(self, cell: int, file: int, value: float) -> "CachingPolicy":
        m = self.x.copy()
        m[cell, file] = value
        return CachingPolicy(m)

    def to_csv(self) -> str:
        """CSV matrix: header row of file indices, one row per cell."""
        buf = io.StringIO()
        k = self.file_count
        buf.write(",".join(f"file_{j + 1}" for j in range(k)))
        buf.write("\n")
        for row in self.x:
            buf.write(",".join(repr(float(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CachingPolicy":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise ShapeError("policy CSV needs a header row and at least one cell row")
        header = lines[0].split(",")
        k = len(header)
        rows = []
        for ln in lines[1:]:
            vals = ln.split(",")
            if len(vals) != k:
                raise ShapeError("policy CSV row width does not match header")
            rows.append([float(v) for v in vals])
        return cls(np.array(rows))


@dataclass(frozen=True)
class PolicyVerdict:
    """Outcome of a feasibility check: ok, or the list of violations."""

    ok: bool
    capacity_violations: tuple = ()   # (cell index, overshoot bits)
    negative_entries: tuple = ()      # (cell index, file index, value)

    def __bool__(self) -> bool:
        return self.ok


def validate_policy(policy: CachingPolicy, network: CellNetwork,
                    file_size: float = 1.0) -> PolicyVerdict:
    """Check nonnegativity and per-cell capacity within tolerance.

    Raises ShapeError on a cell-count mismatch; infeasibility is reported in
    the verdict, never raised. Tolerance is ``REL_TOL * file_size``.
    """
    if policy.cell_count != network.cell_count:
        raise ShapeError(
            f"policy has {policy.cell_count} cells, network has {network.cell_count}")
    tol = feasibility_tol(file_size)
    neg = []
    for n, k in zip(*np.where(policy.x < -tol)):
        neg.append((int(n), int(k), float(policy.x[n, k])))
    loads = policy.x.sum(axis=1)
    over = []
    for n in np.where(loads > network.capacity + tol)[0]:
        over.append((int(n), float(loads[n] - network.capacity[n])))
    return PolicyVerdict(ok=not neg and not over,
                         capacity_violations=tuple(over),
                         negative_entries=tuple(neg))


def t_min(library: VideoLibrary, network: CellNetwork) -> float:
    """Deadline threshold B / max_n R_n, in slots (not rounded)."""
    return library.file_size / float(network.rate.max())
