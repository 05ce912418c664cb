"""Expected macro-cell download under a deadline, for a given caching policy.

For each path and file, the bits still missing at the deadline are

    deficit = max(B - sum_n min(x[n, k], R_n * S[path, n]), 0)

i.e. each visited cell contributes its cached parity bits for the file,
capped by how many bits the user could actually pull from it during the
path's sojourn there. The average weights deficits by path probability and
file popularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CachingPolicy, CellNetwork, ShapeError, VideoLibrary
from .mobility import PathEnsemble


@dataclass(frozen=True)
class EvalReport:
    """Evaluation output: the average plus optional per-file / per-path detail.

    d_av      : expected bits fetched from the macro cell
    per_file  : length-K vector, popularity-weighted contribution of each file
    deficits  : optional M x K matrix of raw per-path per-file deficits
    """

    d_av: float
    per_file: np.ndarray
    deficits: np.ndarray | None = None

    def __post_init__(self):
        pf = np.asarray(self.per_file, dtype=float)
        pf.setflags(write=False)
        object.__setattr__(self, "per_file", pf)
        if self.deficits is not None:
            d = np.asarray(self.deficits, dtype=float)
            d.setflags(write=False)
            object.__setattr__(self, "deficits", d)


def _check_dims(policy: CachingPolicy, library: VideoLibrary,
                network: CellNetwork, ensemble: PathEnsemble) -> None:
    if policy.cell_count != network.cell_count:
        raise ShapeError("policy / network cell counts differ")
    if policy.file_count != library.file_count:
        raise ShapeError("policy / library file counts differ")
    if ensemble.cell_count != network.cell_count:
        raise ShapeError("ensemble / network cell counts differ")


def deficit(policy: CachingPolicy, library: VideoLibrary, network: CellNetwork,
            sojourn_row: np.ndarray, file: int) -> float:
    """Missing bits for one file on one path, given its per-cell slot counts."""
    s = np.asarray(sojourn_row, dtype=float)
    if s.shape != (network.cell_count,):
        raise ShapeError("sojourn_row must have one count per cell")
    covered = np.minimum(network.rate * s, policy.x[:, file].clip(min=0.0)).sum()
    return float(max(library.file_size - covered, 0.0))


def evaluate(policy: CachingPolicy, ensemble: PathEnsemble,
             library: VideoLibrary, network: CellNetwork,
             keep_deficits: bool = False) -> EvalReport:
    """Expected macro-cell bits over the ensemble, exact in float64.

    Deterministic for a fixed ensemble: paths are reduced in storage order
    with a fixed dot-product kernel, and the per-file terms are combined
    with compensated summation. Negative policy entries are clipped to zero
    for coverage purposes, so an infeasible input cannot make the objective
    look better.
    """
    _check_dims(policy, library, network, ensemble)
    b = library.file_size
    p = library.popularity
    rs = network.rate[None, :] * ensemble.sojourn   # M x N deliverable bits
    k_count = library.file_count
    per_file = np.empty(k_count)
    kept = np.empty((ensemble.path_count, k_count)) if keep_deficits else None
    x = policy.x.clip(min=0.0)
    for k in range(k_count):
        covered = np.minimum(rs, x[None, :, k]).sum(axis=1)
        dk = np.maximum(b - covered, 0.0)
        if kept is not None:
            kept[:, k] = dk
        per_file[k] = p[k] * float(ensemble.prob @ dk)
    d_av = math.fsum(per_file.tolist())
    return EvalReport(d_av=d_av, per_file=per_file, deficits=kept)


def evaluate_delta(policy: CachingPolicy, ensemble: PathEnsemble,
                   library: VideoLibrary, network: CellNetwork,
                   cell: int, file: int, delta_bits: float) -> float:
    """Change in the average when x[cell, file] moves by ``delta_bits``.

    Equal (up to float noise) to evaluating the modified policy and
    subtracting, but touches only the paths that visit ``cell`` and only the
    one file. Raises ValueError if the move would make the entry negative.
    """
    _check_dims(policy, library, network, ensemble)
    b = library.file_size
    old = float(policy.x[cell, file])
    new = old + delta_bits
    if new < -1e-9 * b:
        raise ValueError(f"x[{cell}, {file}] + {delta_bits} is negative")
    rows = np.where(ensemble.sojourn[:, cell] > 0)[0]
    if rows.size == 0:
        return 0.0
    rs = network.rate[None, :] * ensemble.sojourn[rows]
    x = policy.x.clip(min=0.0)
    full = np.minimum(rs, x[None, :, file]).sum(axis=1)
    own = np.minimum(rs[:, cell], x[cell, file])
    other = full - own
    d_old = np.maximum(b - (other + np.minimum(rs[:, cell], max(old, 0.0))), 0.0)
    d_new = np.maximum(b - (other + np.minimum(rs[:, cell], max(new, 0.0))), 0.0)
    q = ensemble.prob[rows]
    return float(library.popularity[file] * (q @ (d_new - d_old)))
