"""Monte Carlo slab transport reference with track-length flux tallies.

Analog random walk in (x, mu) with implicit capture: every collision
multiplies the particle weight by sigma_s/sigma_t and re-emits
isotropically; Russian roulette (survival probability 1/2) trims
low-weight histories.  The track-length estimator accumulates
weight * path length per tally cell, normalized by the total source
strength so the tally estimates the scalar flux phi0.

Histories draw from independent splitmix64 streams keyed by
(seed, history index), so tallies are identical no matter how the
history range is chunked.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .base import BaseEstimator, FluxEstimatorMixin, check_problem
from .problems import BoundaryKind
from .solution import FluxSolution

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _avalanche(z):
    # splitmix64 finalizer
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _uniform(state):
    state = state + _GOLDEN
    return state, (_avalanche(state) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _history_stream(seed, history):
    # Hash the (seed, history) key into a pseudorandom start state so the
    # per-history splitmix64 streams occupy well-separated counter ranges.
    z = _avalanche(_U64(seed) * _U64(0x632BE59BD9B4E019) ^ _U64(0xD6E8FEB86659FD93))
    return _avalanche(z ^ (_U64(history) * _GOLDEN))


@njit(cache=True)
def _run_histories(h_lo, h_hi, seed, edges, sigma_t, sigma_s, q_coeffs,
                   q_cdf, q_max, bc_left, bc_right, tally_edges,
                   weight_cutoff, cell_sum, cell_sumsq, balance_stats):
    n_regions = edges.shape[0] - 1
    n_cells = tally_edges.shape[0] - 1
    x_left = edges[0]
    x_right = edges[-1]
    dx_cell = (tally_edges[-1] - tally_edges[0]) / n_cells
    history_tally = np.zeros(n_cells)

    for h in range(h_lo, h_hi):
        state = _history_stream(seed, h)
        # source region from the integrated-source CDF
        state, u = _uniform(state)
        region = 0
        for r in range(n_regions):
            if u <= q_cdf[r]:
                region = r
                break
        # position within the region by rejection against q_max
        x = 0.0
        while True:
            state, u1 = _uniform(state)
            x = edges[region] + u1 * (edges[region + 1] - edges[region])
            qx = q_coeffs[region, 0] + x * (q_coeffs[region, 1]
                                            + x * q_coeffs[region, 2])
            state, u2 = _uniform(state)
            if u2 * q_max[region] <= qx:
                break
        state, u = _uniform(state)
        mu = 2.0 * u - 1.0
        weight = 1.0
        absorbed = 0.0
        leaked = 0.0
        history_tally[:] = 0.0
        alive = True

        while alive:
            if mu == 0.0:
                mu = 1e-12
            state, u = _uniform(state)
            path = -np.log(u) / sigma_t[region]
            x_new = x + path * mu
            # nearest region boundary in the travel direction
            if mu > 0.0:
                x_bound = edges[region + 1]
                hit = x_new > x_bound
            else:
                x_bound = edges[region]
                hit = x_new < x_bound
            x_stop = x_bound if hit else x_new

            # track-length tally over [x, x_stop] (or reversed)
            a = x if x < x_stop else x_stop
            b = x_stop if x_stop > x else x
            if b > a:
                i0 = int((a - tally_edges[0]) / dx_cell)
                i1 = int((b - tally_edges[0]) / dx_cell)
                if i0 < 0:
                    i0 = 0
                if i1 > n_cells - 1:
                    i1 = n_cells - 1
                inv_mu = 1.0 / abs(mu)
                for i in range(i0, i1 + 1):
                    lo = tally_edges[i] if tally_edges[i] > a else a
                    hi = tally_edges[i + 1] if tally_edges[i + 1] < b else b
                    if hi > lo:
                        history_tally[i] += weight * (hi - lo) * inv_mu

            if hit:
                x = x_bound
                if mu > 0.0 and region == n_regions - 1 and x >= x_right:
                    if bc_right == 1:
                        mu = -mu
                    else:
                        leaked += weight
                        alive = False
                elif mu < 0.0 and region == 0 and x <= x_left:
                    if bc_left == 1:
                        mu = -mu
                    else:
                        leaked += weight
                        alive = False
                elif mu > 0.0:
                    region += 1
                else:
                    region -= 1
                continue

            # collision: implicit capture, isotropic re-emission
            x = x_new
            ratio = sigma_s[region] / sigma_t[region]
            absorbed += weight * (1.0 - ratio)
            weight *= ratio
            if weight < weight_cutoff:
                state, u = _uniform(state)
                if u < 0.5:
                    weight *= 2.0
                else:
                    absorbed += weight
                    alive = False
            if alive:
                state, u = _uniform(state)
                mu = 2.0 * u - 1.0

        for i in range(n_cells):
            cell_sum[i] += history_tally[i]
            cell_sumsq[i] += history_tally[i] * history_tally[i]
        bal = absorbed + leaked
        balance_stats[0] += absorbed
        balance_stats[1] += leaked
        balance_stats[2] += bal
        balance_stats[3] += bal * bal


class McTally:
    """Cell tallies of one simulation: flux estimates and their errors."""

    def __init__(self, tally_edges, flux, stderr, absorbed, leaked,
                 balance_mean, balance_stderr, n_histories, seed):
        self.tally_edges = np.asarray(tally_edges, dtype=float)
        self.flux = np.asarray(flux, dtype=float)
        self.stderr = np.asarray(stderr, dtype=float)
        self.absorbed = float(absorbed)
        self.leaked = float(leaked)
        self.balance_mean = float(balance_mean)
        self.balance_stderr = float(balance_stderr)
        self.n_histories = int(n_histories)
        self.seed = int(seed)
        if not (np.all(np.isfinite(self.flux))
                and np.all(np.isfinite(self.stderr))):
            raise ValueError("non-finite tally; simulation diverged")

    @property
    def centers(self):
        return 0.5 * (self.tally_edges[:-1] + self.tally_edges[1:])

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_center", "phi0", "stderr"])
            for x, f, s in zip(self.centers, self.flux, self.stderr):
                writer.writerow([repr(float(x)), repr(float(f)), repr(float(s))])


def mc_simulate(problem, n_histories, seed=0, weight_cutoff=1e-3,
                n_cells=100, n_chunks=1):
    """Run the random walk and return per-cell scalar-flux tallies.

    The problem's region cross sections and sources are consumed as
    physical data (diffusive-regime problems already store the induced
    sigma_t = 1/eps, sigma_a = alpha*eps and the eps-multiplied source).

    Parameters
    ----------
    problem : SlabProblem
        Geometry, materials and boundary conditions.
    n_histories : int
        Number of source particles.
    n_chunks : int
        Split the history range into this many sequentially merged
        chunks; tallies are bitwise independent of the split.
    """
    check_problem(problem)
    if n_histories < 1:
        raise ValueError("n_histories must be >= 1")
    if not 0.0 < weight_cutoff < 1.0:
        raise ValueError("weight_cutoff must be in (0, 1)")

    regions = problem.regions
    edges = np.array([r.x_lo for r in regions] + [regions[-1].x_hi])
    sigma_t = np.array([r.sigma_t for r in regions])
    sigma_s = np.array([r.sigma_s for r in regions])
    q_coeffs = np.zeros((len(regions), 3))
    for i, r in enumerate(regions):
        q_coeffs[i, : len(r.q)] = r.q
    q_int = np.array([r.source_integral() for r in regions])
    total_source = q_int.sum()
    if total_source <= 0.0:
        raise ValueError("total source strength is zero")
    q_cdf = np.cumsum(q_int) / total_source
    q_max = np.array(
        [max(r.source(x) for x in
             np.linspace(r.x_lo, r.x_hi, 101)) for r in regions])
    bc_l = 1 if problem.bc_left is BoundaryKind.REFLECTIVE else 0
    bc_r = 1 if problem.bc_right is BoundaryKind.REFLECTIVE else 0
    tally_edges = np.linspace(problem.x_left, problem.x_right, n_cells + 1)

    cell_sum = np.zeros(n_cells)
    cell_sumsq = np.zeros(n_cells)
    balance = np.zeros(4)  # absorbed, leaked, sum(bal), sum(bal^2)
    bounds = np.linspace(0, n_histories, n_chunks + 1).astype(np.int64)
    for c in range(n_chunks):
        _run_histories(bounds[c], bounds[c + 1], seed, edges, sigma_t,
                       sigma_s, q_coeffs, q_cdf, q_max, bc_l, bc_r,
                       tally_edges, weight_cutoff, cell_sum, cell_sumsq,
                       balance)

    n = float(n_histories)
    dx = np.diff(tally_edges)
    mean = cell_sum / n
    var = np.maximum(cell_sumsq / n - mean**2, 0.0)
    norm = total_source / dx
    flux = norm * mean
    stderr = norm * np.sqrt(var / n)
    bal_mean = balance[2] / n
    bal_var = max(balance[3] / n - bal_mean**2, 0.0)
    return McTally(tally_edges, flux, stderr, balance[0] / n, balance[1] / n,
                   bal_mean, np.sqrt(bal_var / n), n_histories, seed)


def mc_to_solution(tally, grid=None):
    """Cell-averaged tallies as a FluxSolution at the cell centers.

    A custom ``grid`` must coincide with the tally cell centers.
    """
    centers = tally.centers
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid.shape != centers.shape or not np.allclose(grid, centers):
            raise ValueError("grid does not match the tally cells")
    meta = {
        "solver": "mc",
        "seed": tally.seed,
        "n_histories": tally.n_histories,
        "stderr": tally.stderr.tolist(),
        "absorbed": tally.absorbed,
        "leaked": tally.leaked,
        "balance": tally.balance_mean,
    }
    return FluxSolution(centers, tally.flux[:, None], meta)


class McReference(FluxEstimatorMixin, BaseEstimator):
    """Monte Carlo reference solver with the estimator interface.

    ``predict`` returns the cell-averaged scalar flux as a single-column
    moment array, interpolated piecewise-linearly between cell centers.
    """

    def __init__(self, n_histories=100_000, seed=0, weight_cutoff=1e-3,
                 n_cells=100, n_chunks=1):
        self.n_histories = n_histories
        self.seed = seed
        self.weight_cutoff = weight_cutoff
        self.n_cells = n_cells
        self.n_chunks = n_chunks

    def fit(self, problem):
        check_problem(problem)
        self.problem_ = problem
        self.tally_ = mc_simulate(problem, self.n_histories, self.seed,
                                  self.weight_cutoff, self.n_cells,
                                  self.n_chunks)
        return self

    def _predict_moments(self, x):
        t = self.tally_
        return np.interp(x, t.centers, t.flux)[:, None]

    def to_solution(self, grid=None, **extra_metadata):
        sol = mc_to_solution(self.tally_, grid)
        sol.metadata.update(extra_metadata)
        return sol

    def _solution_metadata(self):
        return mc_to_solution(self.tally_).metadata
