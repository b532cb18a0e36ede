"""First-order Lagrange least-squares finite elements for the moment system.

The quadratic functional integrates the squared (row-scaled) moment
residual over the slab and adds the boundary-condition rows as a point
penalty at the two boundary nodes.  Minimizing over piecewise-linear
nodal moment values yields a symmetric positive-definite banded system,
factorized by banded Cholesky.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, solve_banded, solveh_banded

from .base import BaseEstimator, FluxEstimatorMixin, check_is_fitted, check_problem
from .pn import PnOperator, boundary_matrix
from .problems import Side

# 3-point Gauss-Legendre on [-1, 1]: exact through degree 5, enough for
# hat-function products against region-constant coefficients and
# source polynomials up to degree 2.
_GAUSS_X = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
_GAUSS_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


class Mesh1D:
    """Sorted node positions covering the slab."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        self.nodes = nodes

    @classmethod
    def uniform(cls, problem, n_elements):
        """Uniform mesh with every material interface promoted to a node."""
        nodes = np.linspace(problem.x_left, problem.x_right, n_elements + 1)
        for xi in problem.interfaces:
            j = int(np.argmin(np.abs(nodes - xi)))
            if abs(nodes[j] - xi) <= 1e-9 * (problem.x_right - problem.x_left):
                nodes[j] = xi
            else:
                nodes = np.sort(np.append(nodes, xi))
        return cls(nodes)

    @property
    def n_nodes(self):
        return self.nodes.size

    @property
    def n_elements(self):
        return self.nodes.size - 1


class FemSystem:
    """Assembled least-squares system in symmetric banded storage.

    Degrees of freedom are node-major: global index = node * (N+1) +
    moment, giving bandwidth 2(N+1) - 1 superdiagonals.  ``ab`` is the
    scipy upper-banded layout ab[u + i - j, j] = A[i, j].
    """

    def __init__(self, mesh, n_moments):
        self.mesh = mesh
        self.n_moments = n_moments
        self.n_dof = mesh.n_nodes * n_moments
        self.bandwidth = 2 * n_moments - 1
        self.ab = np.zeros((self.bandwidth + 1, self.n_dof))
        self.rhs = np.zeros(self.n_dof)

    def dof(self, node, moment):
        return node * self.n_moments + moment

    def add(self, i, j, value):
        """Accumulate into entry (i, j); only the upper triangle is stored."""
        if i > j:
            return
        self.ab[self.bandwidth + i - j, j] += value

    def to_dense(self):
        u = self.bandwidth
        a = np.zeros((self.n_dof, self.n_dof))
        for j in range(self.n_dof):
            for i in range(max(0, j - u), j + 1):
                a[i, j] = self.ab[u + i - j, j]
                a[j, i] = a[i, j]
        return a

    def matvec(self, x):
        u = self.bandwidth
        y = self.ab[u] * x
        for d in range(1, u + 1):
            upper = self.ab[u - d, d:]
            y[:-d] += upper * x[d:]
            y[d:] += upper * x[:-d]
        return y

    def dump_coordinates(self, path):
        """Write nonzero entries as 'i j value' text (debugging aid)."""
        dense = self.to_dense()
        with open(path, "w") as fh:
            for i, j in zip(*np.nonzero(dense)):
                fh.write(f"{i} {j} {dense[i, j]!r}\n")


def assemble(problem, mesh, boundary_weight=1.0):
    """Assemble the least-squares system for a problem on a mesh.

    Raises
    ------
    ValueError
        If any element straddles a material interface.
    """
    check_problem(problem)
    op = PnOperator(problem)
    m = problem.n_moments
    system = FemSystem(mesh, m)
    a_mat = op.streaming

    for e in range(mesh.n_elements):
        xa, xb = mesh.nodes[e], mesh.nodes[e + 1]
        for xi in problem.interfaces:
            if xa + 1e-12 < xi < xb - 1e-12:
                raise ValueError(f"element [{xa}, {xb}] straddles interface x={xi}")
        h = xb - xa
        mid = 0.5 * (xa + xb)
        cdiag = op.collision_diag(mid)
        scale = op.row_scale(mid)
        xg = mid + 0.5 * h * _GAUSS_X
        wg = 0.5 * h * _GAUSS_W
        qg = op.source(xg)
        for g in range(xg.size):
            hat = np.array([(xb - xg[g]) / h, (xg[g] - xa) / h])
            dhat = np.array([-1.0 / h, 1.0 / h])
            # rows of the scaled operator applied to each local basis fn
            basis = np.empty((2 * m, m))
            for node in range(2):
                for n in range(m):
                    v = a_mat[:, n] * dhat[node]
                    v = v + 0.0  # copy before the diagonal update
                    v[n] += cdiag[n] * hat[node]
                    basis[node * m + n] = scale * v
            local = wg[g] * (basis @ basis.T)
            rhs_local = wg[g] * qg[g] * basis[:, 0]
            for ka in range(2 * m):
                ia = system.dof(e + ka // m, ka % m)
                system.rhs[ia] += rhs_local[ka]
                for kb in range(2 * m):
                    ib = system.dof(e + kb // m, kb % m)
                    system.add(ia, ib, local[ka, kb])

    for side, node in ((Side.LEFT, 0), (Side.RIGHT, mesh.n_nodes - 1)):
        b = boundary_matrix(problem, side)
        block = boundary_weight * (b.T @ b)
        for n in range(m):
            for l in range(m):
                system.add(system.dof(node, n), system.dof(node, l), block[n, l])
    return system


def solve(system):
    """Solve the assembled system by banded Cholesky.

    Falls back to banded LU with partial pivoting if the Cholesky
    factorization hits a nonpositive pivot.  Returns the coefficient
    vector and a diagnostics dict with the relative residual.
    """
    u = system.bandwidth
    try:
        coeffs = solveh_banded(system.ab, system.rhs, lower=False)
        method = "cholesky"
    except LinAlgError:
        full = np.zeros((2 * u + 1, system.n_dof))
        full[: u + 1] = system.ab
        for d in range(1, u + 1):
            full[u + d, : system.n_dof - d] = system.ab[u - d, d:]
        try:
            coeffs = solve_banded((u, u), full, system.rhs)
            method = "lu"
        except LinAlgError as exc:
            diag = system.ab[u]
            raise ValueError(
                "singular least-squares system "
                f"(diagonal range [{diag.min():.3e}, {diag.max():.3e}])"
            ) from exc
    rhs_norm = np.linalg.norm(system.rhs)
    res = np.linalg.norm(system.matvec(coeffs) - system.rhs)
    rel = res / rhs_norm if rhs_norm > 0.0 else res
    return coeffs, {"method": method, "relative_residual": float(rel)}


def evaluate(mesh, coeffs, grid):
    """Piecewise-linear interpolation of nodal moment values onto a grid.

    ``coeffs`` is the node-major solution vector; the result has shape
    (len(grid), n_moments).
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < mesh.nodes[0] - 1e-12) or np.any(grid > mesh.nodes[-1] + 1e-12):
        raise ValueError("grid point outside the mesh")
    m = coeffs.size // mesh.n_nodes
    nodal = np.asarray(coeffs, dtype=float).reshape(mesh.n_nodes, m)
    out = np.empty((grid.size, m))
    for n in range(m):
        out[:, n] = np.interp(grid, mesh.nodes, nodal[:, n])
    return out


class LsfeSolver(FluxEstimatorMixin, BaseEstimator):
    """Least-squares finite-element solver with a fit/predict interface.

    Parameters
    ----------
    n_elements : int
        Number of (uniform) first-order Lagrange elements; material
        interfaces are promoted to mesh nodes.
    boundary_weight : float
        Weight of the boundary penalty added to the bilinear form.
    """

    def __init__(self, n_elements=20, boundary_weight=1.0):
        self.n_elements = n_elements
        self.boundary_weight = boundary_weight

    def fit(self, problem, mesh=None):
        check_problem(problem)
        self.problem_ = problem
        self.mesh_ = mesh if mesh is not None else Mesh1D.uniform(problem, self.n_elements)
        self.system_ = assemble(problem, self.mesh_, self.boundary_weight)
        self.coeffs_, self.solve_info_ = solve(self.system_)
        return self

    def _predict_moments(self, x):
        return evaluate(self.mesh_, self.coeffs_, x)

    def _solution_metadata(self):
        meta = super()._solution_metadata()
        meta.update({"solver": "lsfe", "n_elements": int(self.mesh_.n_elements),
                     **self.solve_info_})
        return meta

    @property
    def nodal_values_(self):
        check_is_fitted(self, "coeffs_")
        return self.coeffs_.reshape(self.mesh_.n_nodes, self.problem_.n_moments)
