"""Flux containers, CSV exchange and the relative error metric."""

import numpy as np
import pytest

from slabpn import FluxSolution, compute_error


def make_solution(grid, phi0, label="sol"):
    return FluxSolution(grid, np.asarray(phi0)[:, None], {"solver": label})


class TestFluxSolution:
    def test_csv_roundtrip(self, tmp_path):
        grid = np.linspace(0, 10, 13)
        moments = np.random.default_rng(0).normal(size=(13, 3))
        sol = FluxSolution(grid, moments, {"solver": "lsfe"})
        path = tmp_path / "sol.csv"
        sol.to_csv(path)
        back = FluxSolution.from_csv(path)
        assert np.array_equal(back.grid, grid)
        assert np.array_equal(back.moments, moments)

    def test_bad_csv(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            FluxSolution.from_csv(path)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            FluxSolution(np.arange(5.0), np.zeros((3, 2)))


class TestComputeError:
    def test_identical_is_zero(self):
        grid = np.linspace(0, 10, 50)
        sol = make_solution(grid, np.sin(grid) + 2)
        rep = compute_error(sol, sol)
        assert rep.xi_rel == 0.0
        assert rep.xi_rel_pointwise == 0.0

    def test_uniform_relative_offset(self):
        grid = np.linspace(0, 10, 40)
        ref = make_solution(grid, np.cos(grid) + 3, "ref")
        sol = make_solution(grid, 1.01 * (np.cos(grid) + 3))
        rep = compute_error(sol, ref)
        assert rep.xi_rel == pytest.approx(0.01, rel=1e-12)

    def test_zero_solution_gives_one(self):
        grid = np.linspace(0, 10, 30)
        ref = make_solution(grid, np.full(30, 2.0), "ref")
        sol = make_solution(grid, np.zeros(30))
        rep = compute_error(sol, ref)
        assert rep.xi_rel == pytest.approx(1.0, rel=1e-14)
        assert rep.to_dict()["xi_rel_percent"] == 100.0

    def test_zero_reference_rejected(self):
        grid = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            compute_error(make_solution(grid, np.ones(5)),
                          make_solution(grid, np.zeros(5)))

    def test_pointwise_form_excludes_zero_reference_points(self):
        grid = np.array([0.0, 1.0, 2.0])
        ref = make_solution(grid, np.array([0.0, 2.0, 4.0]), "ref")
        sol = make_solution(grid, np.array([0.5, 2.2, 4.4]))
        rep = compute_error(sol, ref)
        assert np.isnan(rep.per_point_sq_rel[0])
        expected = (0.2 / 2.0) ** 2 + (0.4 / 4.0) ** 2
        assert rep.xi_rel_pointwise == pytest.approx(expected, rel=1e-12)

    def test_grid_permutation_invariance(self):
        grid = np.linspace(0, 10, 25)
        rng = np.random.default_rng(1)
        vals_s = rng.normal(size=25) + 5
        vals_r = rng.normal(size=25) + 5
        rep = compute_error(make_solution(grid, vals_s),
                            make_solution(grid, vals_r, "ref"), grid)
        perm = rng.permutation(25)
        rep_p = compute_error(make_solution(grid[perm], vals_s[perm]),
                              make_solution(grid[perm], vals_r[perm], "ref"),
                              grid)
        assert rep_p.xi_rel == pytest.approx(rep.xi_rel, rel=1e-13)

    def test_common_rescaling_invariance(self):
        grid = np.linspace(0, 10, 25)
        rng = np.random.default_rng(2)
        vals_s = rng.normal(size=25) + 5
        vals_r = rng.normal(size=25) + 5
        a = compute_error(make_solution(grid, vals_s),
                          make_solution(grid, vals_r, "ref"))
        b = compute_error(make_solution(grid, 7.3 * vals_s),
                          make_solution(grid, 7.3 * vals_r, "ref"))
        assert b.xi_rel == pytest.approx(a.xi_rel, rel=1e-13)

    def test_interpolates_reference_onto_solution_grid(self):
        fine = np.linspace(0, 10, 101)
        coarse = np.linspace(0, 10, 11)
        ref = make_solution(fine, 2 + fine, "ref")
        sol = make_solution(coarse, 2 + coarse)
        rep = compute_error(sol, ref)
        assert rep.xi_rel < 1e-14
        assert rep.grid_size == 11
