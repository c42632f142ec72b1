"""Shared container for replicate-by-grid evaluation matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PathEnsemble:
    """Replicate values of a process over a fixed evaluation grid.

    t_grid holds the grid coordinates (time points for FLT runs, depth
    labels for LIL runs); values is the (n_rep, len(t_grid)) matrix;
    normalization documents what scaling the values already carry; meta
    records seeds, cutoffs, tolerances and wall time.
    """

    t_grid: np.ndarray
    values: np.ndarray
    normalization: str = "raw"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.t_grid.size:
            raise ValueError("values must be (n_rep, len(t_grid))")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("ensemble values must be finite")

    @property
    def n_rep(self) -> int:
        return self.values.shape[0]
