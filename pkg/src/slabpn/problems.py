"""Problem definitions for slab-geometry multigroup-free transport.

A :class:`SlabProblem` bundles the material layout of a 1D slab, the
moment-expansion order, boundary conditions, and the choice of residual
scaling.  Two builders cover the bundled experiments: a homogeneous slab
in the diffusive regime driven by a manufactured source, and a two-region
absorber/scatterer problem with an internal interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class ScalingMode(Enum):
    """Residual row scaling applied to moments 1..N."""

    UNSCALED = "unscaled"
    DIFFUSIVE = "diffusive"


class BoundaryKind(Enum):
    VACUUM = "vacuum"
    REFLECTIVE = "reflective"


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


def poly_eval(coeffs, x):
    """Evaluate a low-to-high coefficient polynomial at x (scalar or array)."""
    out = 0.0 * x + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out


def _poly_min_on(coeffs, lo, hi):
    # exact minimum of a polynomial of degree <= 2 on [lo, hi]
    candidates = [lo, hi]
    if len(coeffs) == 3 and coeffs[2] != 0.0:
        xv = -coeffs[1] / (2.0 * coeffs[2])
        if lo < xv < hi:
            candidates.append(xv)
    return min(poly_eval(coeffs, x) for x in candidates)


@dataclass(frozen=True)
class MaterialRegion:
    """Homogeneous material slab segment with an isotropic source.

    The source strength ``q`` is a polynomial in x of degree at most 2,
    given as low-to-high coefficients; a plain float is promoted to a
    constant polynomial.  Cross sections are in 1/cm; the scattering
    cross section is implicit, sigma_s = sigma_t - sigma_a.
    """

    x_lo: float
    x_hi: float
    sigma_t: float
    sigma_a: float
    q: tuple = (0.0,)

    def __post_init__(self):
        if isinstance(self.q, (int, float)):
            object.__setattr__(self, "q", (float(self.q),))
        else:
            object.__setattr__(self, "q", tuple(float(c) for c in self.q))
        if len(self.q) > 3:
            raise ValueError("source polynomial degree must be <= 2")
        if not self.x_lo < self.x_hi:
            raise ValueError(f"empty region [{self.x_lo}, {self.x_hi}]")
        if not self.sigma_t > 0.0:
            raise ValueError("sigma_t must be positive")
        if not 0.0 <= self.sigma_a <= self.sigma_t:
            raise ValueError("need 0 <= sigma_a <= sigma_t")
        if _poly_min_on(self.q, self.x_lo, self.x_hi) < 0.0:
            raise ValueError("source must be nonnegative on the region")

    @property
    def sigma_s(self):
        return self.sigma_t - self.sigma_a

    def source(self, x):
        return poly_eval(self.q, x)

    def source_integral(self):
        """Exact integral of q over the region."""
        total = 0.0
        for k, c in enumerate(self.q):
            total += c * (self.x_hi ** (k + 1) - self.x_lo ** (k + 1)) / (k + 1)
        return total


@dataclass(frozen=True)
class EpsilonScaling:
    """Diffusive-regime parameterization: sigma_t = 1/eps, sigma_a = alpha*eps.

    The source entering the transport equation is eps * Q(x).  ``alpha``
    is the O(1) absorption strength.
    """

    epsilon: float
    alpha: float

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.alpha < 0.0:
            raise ValueError("alpha must be nonnegative")

    @property
    def sigma_t(self):
        return 1.0 / self.epsilon

    @property
    def sigma_a(self):
        return self.alpha * self.epsilon

    @property
    def tau(self):
        # sqrt(sigma_a / sigma_t) evaluated in closed form
        return math.sqrt(self.alpha) * self.epsilon


@dataclass(frozen=True)
class SlabProblem:
    """Slab transport problem: regions, moment order, BCs and scaling.

    Regions must tile the slab contiguously.  ``order`` is the odd moment
    order N; the moment vector has N+1 components.  When the problem was
    built through :func:`diffusive_slab`, ``eps`` records the (epsilon,
    alpha) pair and the region cross sections are the induced ones.
    """

    regions: tuple
    order: int
    bc_left: BoundaryKind = BoundaryKind.VACUUM
    bc_right: BoundaryKind = BoundaryKind.VACUUM
    scaling: ScalingMode = ScalingMode.UNSCALED
    eps: EpsilonScaling | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("at least one region required")
        if self.order < 1 or self.order % 2 == 0:
            raise ValueError(f"moment order must be odd and >= 1, got {self.order}")
        for a, b in zip(self.regions, self.regions[1:]):
            if not math.isclose(a.x_hi, b.x_lo, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError("regions must tile the slab without gaps or overlaps")

    @property
    def x_left(self):
        return self.regions[0].x_lo

    @property
    def x_right(self):
        return self.regions[-1].x_hi

    @property
    def n_moments(self):
        return self.order + 1

    @property
    def interfaces(self):
        """Interior material interface positions."""
        return tuple(r.x_hi for r in self.regions[:-1])

    def region_of(self, x):
        """Region containing x (ties at interfaces go to the right region)."""
        if not self.x_left <= x <= self.x_right:
            raise ValueError(f"x={x} outside slab [{self.x_left}, {self.x_right}]")
        for r in self.regions[:-1]:
            if x < r.x_hi:
                return r
        return self.regions[-1]

    def tau_of_region(self, region):
        """Row-scaling weight for moments 1..N in the given region."""
        if self.scaling is ScalingMode.UNSCALED:
            return 1.0
        if self.eps is not None:
            return self.eps.tau
        return math.sqrt(region.sigma_a / region.sigma_t)

    def with_scaling(self, scaling):
        """Copy of the problem under a different scaling mode."""
        return SlabProblem(self.regions, self.order, self.bc_left, self.bc_right,
                           ScalingMode(scaling), self.eps)


def diffusive_slab(epsilon, alpha, source, x_left=0.0, x_right=10.0, order=1,
                   bc_left=BoundaryKind.VACUUM, bc_right=BoundaryKind.VACUUM,
                   scaling=ScalingMode.UNSCALED):
    """Homogeneous slab in the diffusive parameterization.

    The region carries the induced cross sections sigma_t = 1/eps and
    sigma_a = alpha*eps, and the stored source polynomial is eps * Q(x)
    so that downstream operators consume plain physical data.

    Parameters
    ----------
    epsilon, alpha : float
        Diffusive-regime parameters.
    source : float or sequence
        Q(x) as a constant or low-to-high polynomial coefficients
        (degree <= 2), before the eps multiplier.
    """
    scal = EpsilonScaling(epsilon, alpha)
    if isinstance(source, (int, float)):
        source = (float(source),)
    q = tuple(epsilon * float(c) for c in source)
    region = MaterialRegion(x_left, x_right, scal.sigma_t, scal.sigma_a, q)
    return SlabProblem((region,), order, bc_left, bc_right, ScalingMode(scaling), scal)


def asymptotic_problem(epsilon, alpha=1e-2, order=1, scaling=ScalingMode.UNSCALED):
    """Manufactured diffusion-limit test: slab [0, 10], vacuum boundaries.

    The source Q = 1 + alpha*(-1.5 x^2 + 15 x) makes the parabola
    -1.5 x^2 + 15 x the diffusion-limit scalar flux.
    """
    source = (1.0, 15.0 * alpha, -1.5 * alpha)
    return diffusive_slab(epsilon, alpha, source, order=order, scaling=scaling)


def interface_problem(order=3, scaling=ScalingMode.UNSCALED):
    """Absorber/scatterer interface test on [0, 10].

    Pure absorber (sigma_a = sigma_t = 2) with unit source on (0, 2),
    strong scatterer (sigma_t = 100, sigma_a = 1e-4) on (2, 10);
    reflective left boundary and vacuum right boundary.
    """
    absorber = MaterialRegion(0.0, 2.0, 2.0, 2.0, (1.0,))
    scatterer = MaterialRegion(2.0, 10.0, 100.0, 1e-4, (0.0,))
    return SlabProblem((absorber, scatterer), order,
                       BoundaryKind.REFLECTIVE, BoundaryKind.VACUUM,
                       ScalingMode(scaling))
