"""Slab-geometry P_N transport solvers with diffusive residual scaling."""

from .problems import (
    BoundaryKind,
    EpsilonScaling,
    MaterialRegion,
    ScalingMode,
    Side,
    SlabProblem,
    asymptotic_problem,
    diffusive_slab,
    interface_problem,
)
from .pn import (
    PnOperator,
    analytic_diffusion_reference,
    boundary_matrix,
    manufactured_source,
    marshak_matrix,
    reflective_rows,
    streaming_matrix,
)
from .sobol import SobolStream, map_to_domain, sobol_points
from .network import MlpNetwork
from .optim import AdamState, LbfgsResult, adam_init, adam_step, lbfgs_minimize
from .solution import ErrorReport, FluxSolution, compute_error
from .lsfe import FemSystem, LsfeSolver, Mesh1D, assemble, evaluate, solve
from .pinn import PinnLoss, PinnSolver, TrainedPinn, build_loss, ensemble_predict, train
from .reference import AnalyticDiffusion, McReference, McTally, mc_simulate, mc_to_solution
from .cases import CaseFile, bundled_case, run_case, sweep_epsilon

__version__ = "0.1.0"

__all__ = [
    "BoundaryKind", "EpsilonScaling", "MaterialRegion", "ScalingMode", "Side",
    "SlabProblem", "asymptotic_problem", "diffusive_slab", "interface_problem",
    "PnOperator", "analytic_diffusion_reference", "boundary_matrix",
    "manufactured_source", "marshak_matrix", "reflective_rows",
    "streaming_matrix", "SobolStream", "map_to_domain", "sobol_points",
    "MlpNetwork", "AdamState", "LbfgsResult", "adam_init", "adam_step",
    "lbfgs_minimize", "ErrorReport", "FluxSolution", "compute_error",
    "FemSystem", "LsfeSolver", "Mesh1D", "assemble", "evaluate", "solve",
    "PinnLoss", "PinnSolver", "TrainedPinn", "build_loss", "ensemble_predict",
    "train", "AnalyticDiffusion", "McReference", "McTally", "mc_simulate",
    "mc_to_solution", "CaseFile", "bundled_case", "run_case", "sweep_epsilon",
    "__version__",
]
