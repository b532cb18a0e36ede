"""Moment-system operator, boundary matrices and the manufactured problem."""

from fractions import Fraction

import numpy as np
import pytest

from slabpn import (
    BoundaryKind,
    EpsilonScaling,
    MaterialRegion,
    PnOperator,
    ScalingMode,
    SlabProblem,
    analytic_diffusion_reference,
    asymptotic_problem,
    interface_problem,
    manufactured_source,
    marshak_matrix,
    reflective_rows,
    streaming_matrix,
)
from slabpn.pn import half_range_product_integral, marshak_matrix_exact


class TestStreamingMatrix:
    def test_p1(self):
        a = streaming_matrix(1)
        assert a.tolist() == [[0.0, 1.0], [1.0 / 3.0, 0.0]]

    def test_p3_rows(self):
        a = streaming_matrix(3)
        assert a[1].tolist() == [1.0 / 3.0, 0.0, 2.0 / 3.0, 0.0]
        assert a[3].tolist() == [0.0, 0.0, 3.0 / 7.0, 0.0]

    @pytest.mark.parametrize("order", [1, 3, 5, 7, 9])
    def test_row_sums_bounded(self, order):
        # n/(2n+1) + (n+1)/(2n+1) = 1, less after closure truncation
        a = streaming_matrix(order)
        assert np.all(np.abs(a).sum(axis=1) <= 1.0 + 1e-15)

    @pytest.mark.parametrize("order", [1, 3, 5, 7])
    def test_rational_recursion(self, order):
        a = streaming_matrix(order)
        for n in range(1, order + 1):
            assert a[n, n - 1] == float(Fraction(n, 2 * n + 1))
            if n + 1 <= order:
                assert a[n, n + 1] == float(Fraction(n + 1, 2 * n + 1))

    @pytest.mark.parametrize("order", [0, 2, -1, 4])
    def test_invalid_order(self, order):
        with pytest.raises(ValueError):
            streaming_matrix(order)


class TestMarshak:
    def test_p1_left(self):
        assert marshak_matrix(1, "left").tolist() == [[0.25, 0.5]]

    def test_p1_right(self):
        assert marshak_matrix(1, "right").tolist() == [[0.25, -0.5]]

    def test_p3_entry(self):
        b = marshak_matrix(3, "left")
        assert b.shape == (2, 4)
        assert b[0, 2] == 5.0 / 16.0

    @pytest.mark.parametrize("order", [1, 3, 5, 7])
    def test_left_right_parity(self, order):
        left = marshak_matrix(order, "left")
        right = marshak_matrix(order, "right")
        for n in range(order + 1):
            sign = 1.0 if n % 2 == 0 else -1.0
            assert np.array_equal(right[:, n], sign * left[:, n])

    def test_exact_rational_values(self):
        # half-range integrals against direct Fraction quadrature of the
        # polynomial products
        assert half_range_product_integral(1, 0) == Fraction(1, 2)
        assert half_range_product_integral(1, 1) == Fraction(1, 3)
        assert half_range_product_integral(1, 2) == Fraction(1, 8)
        rows = marshak_matrix_exact(1, "left")
        assert rows == [[Fraction(1, 4), Fraction(1, 2)]]

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            marshak_matrix(2, "left")


class TestReflective:
    def test_p1(self):
        assert reflective_rows(1).tolist() == [[0.0, 1.0]]

    def test_p3_selects_odd(self):
        rows = reflective_rows(3)
        assert rows.tolist() == [[0, 1, 0, 0], [0, 0, 0, 1]]

    def test_even_function_annihilated(self):
        # even angular functions have zero odd moments
        moments = np.array([2.0, 0.0, 0.7, 0.0])
        assert np.all(reflective_rows(3) @ moments == 0.0)


class TestAnalyticReference:
    def test_boundary_values(self):
        assert analytic_diffusion_reference(0.0) == 0.0
        assert analytic_diffusion_reference(10.0) == 0.0

    def test_midpoint(self):
        assert analytic_diffusion_reference(5.0) == 37.5

    def test_source_alpha_zero(self):
        x = np.linspace(0, 10, 11)
        assert np.all(manufactured_source(x, 0.0) == 1.0)

    def test_source_value(self):
        assert manufactured_source(5.0, 1e-2) == pytest.approx(1.375, abs=1e-15)

    def test_diffusion_equation_residual(self):
        # -(1/3) phi'' + alpha phi = Q with phi'' = -3, pointwise
        rng = np.random.default_rng(42)
        x = rng.uniform(0.0, 10.0, 1000)
        alpha = 1e-2
        phi = analytic_diffusion_reference(x)
        residual = -(1.0 / 3.0) * (-3.0) + alpha * phi - manufactured_source(x, alpha)
        assert np.max(np.abs(residual)) < 1e-12


class TestProblemTypes:
    def test_region_invariants(self):
        with pytest.raises(ValueError):
            MaterialRegion(1.0, 0.5, 1.0, 0.1)
        with pytest.raises(ValueError):
            MaterialRegion(0.0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            MaterialRegion(0.0, 1.0, 1.0, 2.0)
        with pytest.raises(ValueError):
            MaterialRegion(0.0, 1.0, 1.0, 0.5, (-0.5,))
        # quadratic dipping negative inside the region
        with pytest.raises(ValueError):
            MaterialRegion(0.0, 4.0, 1.0, 0.5, (0.1, -1.0, 0.25))

    def test_epsilon_scaling(self):
        s = EpsilonScaling(1e-3, 2.0)
        assert s.sigma_t == 1e3
        assert s.sigma_a == 2e-3
        with pytest.raises(ValueError):
            EpsilonScaling(0.0, 1.0)
        with pytest.raises(ValueError):
            EpsilonScaling(1.0, -1.0)

    def test_problem_tiling(self):
        a = MaterialRegion(0.0, 1.0, 1.0, 0.5)
        b = MaterialRegion(1.5, 2.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            SlabProblem((a, b), 1)

    def test_odd_order_required(self):
        a = MaterialRegion(0.0, 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            SlabProblem((a,), 2)

    def test_interface_problem_layout(self):
        p = interface_problem()
        assert p.x_left == 0.0 and p.x_right == 10.0
        assert p.interfaces == (2.0,)
        assert p.bc_left is BoundaryKind.REFLECTIVE
        assert p.regions[0].sigma_s == 0.0


class TestResidual:
    def test_zero_state_zero_source(self):
        reg = MaterialRegion(0.0, 10.0, 1.0, 0.5, (0.0,))
        op = PnOperator(SlabProblem((reg,), 3))
        r = op.residual(np.zeros(4), np.zeros(4), 5.0)
        assert np.all(r == 0.0)

    def test_p1_epsilon_form_rows(self):
        eps, alpha = 1e-2, 1e-2
        p = asymptotic_problem(eps, alpha)
        op = PnOperator(p)
        phi = np.array([2.0, -1.0])
        dphi = np.array([0.3, 0.7])
        x = 4.0
        r = op.residual(phi, dphi, x)
        q = eps * manufactured_source(x, alpha)
        expected0 = dphi[1] + eps * alpha * phi[0] - q
        expected1 = dphi[0] / 3.0 + phi[1] / eps
        assert r[0] == pytest.approx(expected0, rel=1e-14)
        assert r[1] == pytest.approx(expected1, rel=1e-14)

    def test_diffusive_row_scale(self):
        eps, alpha = 1e-2, 1e-2
        p = asymptotic_problem(eps, alpha, scaling=ScalingMode.DIFFUSIVE)
        op = PnOperator(p)
        tau = np.sqrt(alpha) * eps
        assert np.array_equal(op.row_scale(4.0), np.array([1.0, tau]))
        unscaled = PnOperator(asymptotic_problem(eps, alpha))
        phi = np.array([2.0, -1.0])
        dphi = np.array([0.3, 0.7])
        r_u = unscaled.residual(phi, dphi, 4.0)
        r_s = op.residual(phi, dphi, 4.0)
        assert r_s[0] == r_u[0]
        assert r_s[1] == pytest.approx(tau * r_u[1], rel=1e-14)

    def test_linearity_without_source(self):
        reg = MaterialRegion(0.0, 10.0, 2.0, 0.5, (0.0,))
        op = PnOperator(SlabProblem((reg,), 3, scaling=ScalingMode.DIFFUSIVE))
        rng = np.random.default_rng(3)
        p1, d1 = rng.normal(size=4), rng.normal(size=4)
        p2, d2 = rng.normal(size=4), rng.normal(size=4)
        a, b = 1.7, -0.6
        lhs = op.residual(a * p1 + b * p2, a * d1 + b * d2, 5.0)
        rhs = a * op.residual(p1, d1, 5.0) + b * op.residual(p2, d2, 5.0)
        assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-15)

    def test_out_of_domain(self):
        op = PnOperator(asymptotic_problem(1e-2))
        with pytest.raises(ValueError):
            op.residual(np.zeros(2), np.zeros(2), 11.0)

    def test_region_wise_tau(self):
        p = interface_problem(scaling=ScalingMode.DIFFUSIVE)
        op = PnOperator(p)
        assert op.row_scale(1.0)[1] == 1.0  # absorber: sigma_a == sigma_t
        assert op.row_scale(5.0)[1] == pytest.approx(1e-3, rel=1e-12)

    def test_batched_matches_pointwise(self):
        p = interface_problem(scaling=ScalingMode.DIFFUSIVE)
        op = PnOperator(p)
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 10, 20)
        phi = rng.normal(size=(20, 4))
        dphi = rng.normal(size=(20, 4))
        batch = op.residual(phi, dphi, x)
        for i in range(20):
            assert np.allclose(batch[i], op.residual(phi[i], dphi[i], x[i]),
                               rtol=1e-14, atol=0.0)

    def test_scaled_residual_of_analytic_pair_is_small(self):
        # the manufactured parabola with phi1 = -(eps/3) phi0' solves the
        # interior system to rounding; bound per the O(eps^2) contract
        for eps in (1e-1, 1e-2, 1e-3):
            p = asymptotic_problem(eps, scaling=ScalingMode.DIFFUSIVE)
            op = PnOperator(p)
            x = np.linspace(0.5, 9.5, 50)
            phi0 = analytic_diffusion_reference(x)
            dphi0 = 15.0 - 3.0 * x
            phi = np.stack([phi0, -(eps / 3.0) * dphi0], axis=1)
            dphi = np.stack([dphi0, np.full_like(x, eps)], axis=1)
            r = op.residual(phi, dphi, x)
            assert np.max(np.abs(r)) < 10.0 * eps**2
