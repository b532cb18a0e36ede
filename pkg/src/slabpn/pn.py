"""Slab-geometry moment system: streaming/collision operators and boundaries.

The transport equation is reduced in angle to the first N+1 Legendre
moments (unnormalized polynomials, closure phi_{N+1} = 0), giving the
first-order system

    A dPhi/dx + C(x) Phi = q(x) e0,

with the bidiagonal streaming matrix A, the collision diagonal
C = diag(sigma_a, sigma_t, ..., sigma_t) and the isotropic source on the
zeroth row.  The diffusive row scaling multiplies rows 1..N of the
residual by tau = sqrt(sigma_a/sigma_t) of the local region; row 0 is
never scaled.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .problems import ScalingMode, Side, SlabProblem


def streaming_matrix(order):
    """Streaming matrix A of the moment system.

    A[n, n-1] = n/(2n+1) and A[n, n+1] = (n+1)/(2n+1), truncated at the
    closing order (phi_{N+1} = 0 drops the last superdiagonal entry).

    Parameters
    ----------
    order : int
        Odd moment order N >= 1.

    Returns
    -------
    (N+1, N+1) ndarray
    """
    _check_order(order)
    n_mom = order + 1
    a = np.zeros((n_mom, n_mom))
    for n in range(n_mom):
        if n >= 1:
            a[n, n - 1] = n / (2.0 * n + 1.0)
        if n + 1 < n_mom:
            a[n, n + 1] = (n + 1.0) / (2.0 * n + 1.0)
    return a


def _check_order(order):
    if order < 1 or order % 2 == 0:
        raise ValueError(f"moment order must be odd and >= 1, got {order}")


def _legendre_coeffs(n):
    """Coefficients of the unnormalized Legendre polynomial P_n, exact."""
    p_prev = [Fraction(1)]
    if n == 0:
        return p_prev
    p_cur = [Fraction(0), Fraction(1)]
    for k in range(1, n):
        # (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        nxt = [Fraction(0)] * (k + 2)
        for i, c in enumerate(p_cur):
            nxt[i + 1] += Fraction(2 * k + 1, k + 1) * c
        for i, c in enumerate(p_prev):
            nxt[i] -= Fraction(k, k + 1) * c
        p_prev, p_cur = p_cur, nxt
    return p_cur


def half_range_product_integral(a, b):
    """Exact rational value of the half-range integral of P_a * P_b over (0, 1]."""
    ca, cb = _legendre_coeffs(a), _legendre_coeffs(b)
    prod = [Fraction(0)] * (len(ca) + len(cb) - 1)
    for i, x in enumerate(ca):
        for j, y in enumerate(cb):
            prod[i + j] += x * y
    return sum(c / (k + 1) for k, c in enumerate(prod))


def marshak_matrix_exact(order, side):
    """Marshak vacuum-condition rows as exact Fractions.

    Row m (m = 1..(N+1)/2) has entries (2n+1)/2 * integral of
    P_{2m-1} P_n over the incoming half range.  The right-boundary matrix
    is sign-normalized so that even-n columns match the left matrix and
    odd-n columns are negated.
    """
    _check_order(order)
    side = Side(side)
    rows = []
    for m in range(1, (order + 1) // 2 + 1):
        row = []
        for n in range(order + 1):
            entry = Fraction(2 * n + 1, 2) * half_range_product_integral(2 * m - 1, n)
            if side is Side.RIGHT and n % 2 == 1:
                entry = -entry
            row.append(entry)
        rows.append(row)
    return rows


def marshak_matrix(order, side):
    """Marshak vacuum boundary matrix, shape ((N+1)/2, N+1).

    The vacuum condition is marshak_matrix(N, side) @ Phi(boundary) = 0.
    """
    return np.array(marshak_matrix_exact(order, side), dtype=float)


def reflective_rows(order):
    """Selector rows zeroing the odd moments, shape ((N+1)/2, N+1)."""
    _check_order(order)
    n_mom = order + 1
    rows = np.zeros((n_mom // 2, n_mom))
    for m, n in enumerate(range(1, n_mom, 2)):
        rows[m, n] = 1.0
    return rows


def boundary_matrix(problem, side):
    """Boundary-condition rows for one side of a problem."""
    from .problems import BoundaryKind

    side = Side(side)
    bc = problem.bc_left if side is Side.LEFT else problem.bc_right
    if bc is BoundaryKind.VACUUM:
        return marshak_matrix(problem.order, side)
    return reflective_rows(problem.order)


def analytic_diffusion_reference(x):
    """Diffusion-limit scalar flux of the manufactured problem on [0, 10]."""
    x = np.asarray(x, dtype=float)
    return -1.5 * x**2 + 15.0 * x


def manufactured_source(x, alpha):
    """Source Q = 1 + alpha * phi0 driving the manufactured problem."""
    return 1.0 + alpha * analytic_diffusion_reference(x)


class PnOperator:
    """Evaluates the (optionally row-scaled) moment-system residual.

    Per-region data is precomputed from a :class:`SlabProblem`; the
    residual at x reads row_scale * (A dphi + C(x) phi - q(x) e0).
    """

    def __init__(self, problem: SlabProblem):
        self.problem = problem
        self.order = problem.order
        self.n_moments = problem.order + 1
        self.streaming = streaming_matrix(problem.order)
        self._edges = np.array([r.x_lo for r in problem.regions]
                               + [problem.regions[-1].x_hi])
        self._sigma_t = np.array([r.sigma_t for r in problem.regions])
        self._sigma_a = np.array([r.sigma_a for r in problem.regions])
        taus = [problem.tau_of_region(r) for r in problem.regions]
        self._tau = np.array(taus)
        # row_scale[r] = (1, tau_r, ..., tau_r)
        self._row_scale = np.ones((len(problem.regions), self.n_moments))
        self._row_scale[:, 1:] = self._tau[:, None]

    def region_index(self, x):
        """Region index for each position (interfaces resolve rightward)."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self._edges[0]) or np.any(x > self._edges[-1]):
            raise ValueError("position outside the slab")
        idx = np.searchsorted(self._edges, x, side="right") - 1
        return np.clip(idx, 0, len(self.problem.regions) - 1)

    def row_scale(self, x):
        """Row-scaling vector(s) at position(s) x, shape (..., N+1)."""
        return self._row_scale[self.region_index(x)]

    def collision_diag(self, x):
        """Collision diagonal (sigma_a, sigma_t, ..., sigma_t) at x."""
        idx = self.region_index(x)
        diag = np.empty(np.shape(idx) + (self.n_moments,))
        diag[..., 0] = self._sigma_a[idx]
        diag[..., 1:] = self._sigma_t[idx][..., None]
        return diag

    def source(self, x):
        """Isotropic source strength entering the zeroth moment row."""
        x = np.asarray(x, dtype=float)
        idx = self.region_index(x)
        out = np.zeros_like(x, dtype=float)
        for r, region in enumerate(self.problem.regions):
            mask = idx == r
            if np.any(mask):
                out[mask] = region.source(x[mask])
        return out

    def residual(self, phi, dphi_dx, x):
        """Scaled residual of the moment system.

        Parameters
        ----------
        phi, dphi_dx : array_like
            Moment vectors and their x-derivatives, shape (N+1,) for a
            single point or (n, N+1) for a batch.
        x : float or (n,) array_like
            Positions inside the slab.

        Returns
        -------
        ndarray with the shape of ``phi``.
        """
        phi = np.asarray(phi, dtype=float)
        dphi = np.asarray(dphi_dx, dtype=float)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
            raise ValueError("non-finite moment data")
        res = dphi @ self.streaming.T + self.collision_diag(x) * phi
        q = self.source(x)
        if res.ndim == 1:
            res[0] -= q
        else:
            res[:, 0] -= q
        return self.row_scale(x) * res
