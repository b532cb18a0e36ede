"""Shared estimator plumbing and input validation helpers.

Solvers follow the scikit-learn estimator protocol: hyperparameters are
constructor arguments stored verbatim, all work happens in ``fit``, and
fitted state lives in trailing-underscore attributes.  ``fit`` takes a
:class:`~slabpn.problems.SlabProblem` instead of a data matrix;
``predict`` maps positions to moment values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .problems import SlabProblem
from .solution import FluxSolution


def check_problem(problem):
    if not isinstance(problem, SlabProblem):
        raise TypeError(f"expected SlabProblem, got {type(problem).__name__}")
    return problem


def check_positions(x, problem, tol=1e-12):
    """Validate and return evaluation positions inside the slab."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("positions must be one-dimensional")
    if np.any(x < problem.x_left - tol) or np.any(x > problem.x_right + tol):
        raise ValueError("evaluation positions outside the slab")
    return np.clip(x, problem.x_left, problem.x_right)


def evaluation_grid(problem, n_points):
    """Equidistant evaluation grid spanning the slab."""
    return np.linspace(problem.x_left, problem.x_right, int(n_points))


class FluxEstimatorMixin:
    """predict/to_solution surface shared by the flux solvers."""

    def predict(self, x):
        """Moment values at positions x, shape (len(x), n_moments)."""
        check_is_fitted(self, "problem_")
        x = check_positions(x, self.problem_)
        return self._predict_moments(x)

    def to_solution(self, grid, **extra_metadata):
        """Package predictions on a grid as a :class:`FluxSolution`."""
        check_is_fitted(self, "problem_")
        grid = check_positions(grid, self.problem_)
        meta = dict(self._solution_metadata())
        meta.update(extra_metadata)
        return FluxSolution(grid, self._predict_moments(grid), meta)

    def _solution_metadata(self):
        return {"solver": type(self).__name__,
                "scaling": self.problem_.scaling.value}


__all__ = ["BaseEstimator", "FluxEstimatorMixin", "check_is_fitted",
           "check_positions", "check_problem", "evaluation_grid"]
