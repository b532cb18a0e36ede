"""Ground-truth providers: closed-form diffusion solution and Monte Carlo."""

from __future__ import annotations

import numpy as np

from .base import BaseEstimator, FluxEstimatorMixin, check_problem
from .mc import McReference, McTally, mc_simulate, mc_to_solution
from .pn import analytic_diffusion_reference

__all__ = ["AnalyticDiffusion", "McReference", "McTally", "mc_simulate",
           "mc_to_solution", "analytic_diffusion_reference"]


class AnalyticDiffusion(FluxEstimatorMixin, BaseEstimator):
    """Closed-form diffusion-limit flux of the manufactured problem.

    Only valid for the diffusive-regime slab on [0, 10] whose source was
    manufactured against the parabola -1.5 x^2 + 15 x; ``fit`` rejects
    anything else.
    """

    def fit(self, problem):
        check_problem(problem)
        if problem.eps is None:
            raise ValueError("analytic reference needs a diffusive-regime problem")
        if not (problem.x_left == 0.0 and problem.x_right == 10.0):
            raise ValueError("analytic reference is defined on the slab [0, 10]")
        self.problem_ = problem
        return self

    def _predict_moments(self, x):
        return analytic_diffusion_reference(x)[:, None]

    def _solution_metadata(self):
        return {"solver": "analytic"}
