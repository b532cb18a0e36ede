"""Flux solutions on evaluation grids, CSV exchange, and error reports.

The headline error metric is the relative L2 distance between the
scalar-flux columns of two solutions on a shared grid,

    xi_rel = sqrt( sum_g (phi0_sol - phi0_ref)^2 / sum_g phi0_ref^2 ).

The per-point-normalized sum (each squared difference divided by the
local squared reference) is also computed and reported alongside, with
grid points where the reference vanishes excluded from that form only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FluxSolution:
    """Per-moment flux values on an evaluation grid.

    ``moments`` has shape (G, M); column 0 is the scalar flux phi0.
    ``metadata`` records provenance (solver kind, scaling mode, seed,
    statistical errors for sampled references, ...).
    """

    grid: np.ndarray
    moments: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.moments = np.atleast_2d(np.asarray(self.moments, dtype=float))
        if self.moments.shape[0] != self.grid.shape[0]:
            if self.moments.shape[1] == self.grid.shape[0]:
                self.moments = self.moments.T
            else:
                raise ValueError("grid and moment array sizes disagree")

    @property
    def phi0(self):
        return self.moments[:, 0]

    @property
    def n_moments(self):
        return self.moments.shape[1]

    def phi0_at(self, x):
        """Piecewise-linear scalar-flux values interpolated at positions x."""
        order = np.argsort(self.grid)
        return np.interp(np.asarray(x, dtype=float), self.grid[order],
                         self.phi0[order])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x"] + [f"phi_{n}" for n in range(self.n_moments)])
            for xg, row in zip(self.grid, self.moments):
                writer.writerow([repr(float(xg))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, metadata=None):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError(f"{path}: empty flux CSV")
        header, data = rows[0], rows[1:]
        if not header or header[0] != "x":
            raise ValueError(f"{path}: expected flux CSV with an 'x' column")
        arr = np.array([[float(v) for v in row] for row in data])
        return cls(arr[:, 0], arr[:, 1:], metadata or {})


@dataclass
class ErrorReport:
    """Relative error between a solver flux and a reference flux."""

    xi_rel: float
    xi_rel_pointwise: float
    per_point_sq_rel: np.ndarray
    grid_size: int
    solver_id: str = ""
    reference_id: str = ""

    def to_dict(self):
        return {
            "xi_rel": self.xi_rel,
            "xi_rel_percent": round(100.0 * self.xi_rel, 1),
            "xi_rel_pointwise": self.xi_rel_pointwise,
            "grid_size": self.grid_size,
            "solver": self.solver_id,
            "reference": self.reference_id,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def compute_error(solution, reference, grid=None):
    """Error report for the scalar flux of ``solution`` against ``reference``.

    Both solutions must live on a common grid; if ``grid`` is given, or
    the stored grids differ, both phi0 columns are interpolated onto it
    (onto the solution grid when ``grid`` is None).

    Raises
    ------
    ValueError
        If the reference scalar flux is identically zero.
    """
    grid = solution.grid if grid is None else np.asarray(grid, dtype=float)
    sol = solution.phi0_at(grid)
    ref = reference.phi0_at(grid)

    denom = float(np.sum(ref * ref))
    if denom == 0.0:
        raise ValueError("reference flux is identically zero; error undefined")
    xi_rel = float(np.sqrt(np.sum((sol - ref) ** 2) / denom))

    per_point = np.full(grid.shape, np.nan)
    nz = ref != 0.0
    per_point[nz] = (sol[nz] - ref[nz]) ** 2 / ref[nz] ** 2
    xi_pointwise = float(np.nansum(per_point))

    return ErrorReport(
        xi_rel=xi_rel,
        xi_rel_pointwise=xi_pointwise,
        per_point_sq_rel=per_point,
        grid_size=int(grid.size),
        solver_id=str(solution.metadata.get("solver", "")),
        reference_id=str(reference.metadata.get("solver", "")),
    )
