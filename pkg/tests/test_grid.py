"""Tests for box grids and grid functions."""

import numpy as np
import pytest

from src.coeff import parse_expression
from src.disc import GridFunction, build_grid, bump, sample_function
from src.errors import ExpressionEvaluationError, GridError


class TestBuildGrid:
    """Node lattices of [-L, L]^d."""

    def test_three_nodes_on_the_line(self) -> None:
        grid = build_grid(1, 1.0, 3)
        np.testing.assert_array_equal(grid.nodes().ravel(), [-1.0, 0.0, 1.0])
        np.testing.assert_array_equal(grid.interior_indices(), [1])
        assert grid.h == 1.0

    def test_square_has_one_interior_node(self) -> None:
        grid = build_grid(2, 1.0, 3)
        assert grid.size == 9
        assert grid.interior_indices().tolist() == [4]

    def test_spacing(self) -> None:
        grid = build_grid(1, 10.0, 401)
        assert grid.h == pytest.approx(0.05)
        assert grid.cell_volume == pytest.approx(0.05)

    def test_interior_excludes_every_face(self) -> None:
        grid = build_grid(3, 2.0, 5)
        nodes = grid.nodes()
        inside = np.all(np.abs(nodes) < 2.0, axis=1)
        np.testing.assert_array_equal(grid.interior_mask(), inside)
        assert grid.interior_indices().size == 27

    def test_index_maps_are_inverse(self) -> None:
        grid = build_grid(3, 1.0, 4)
        flat = np.arange(grid.size)
        np.testing.assert_array_equal(grid.flat_index(grid.multi_index(flat)), flat)

    def test_shifted_center(self) -> None:
        grid = build_grid(1, np.pi, 5, center=(np.pi,))
        assert grid.nodes()[0, 0] == pytest.approx(0.0)
        assert grid.nodes()[-1, 0] == pytest.approx(2 * np.pi)

    def test_node_cap(self) -> None:
        with pytest.raises(GridError, match="exceeds the cap"):
            build_grid(3, 1.0, 101, max_nodes=1000)

    def test_cap_comes_from_settings(self, monkeypatch) -> None:
        from src import config

        monkeypatch.setenv("ELLIP_MAX_GRID_NODES", "100")
        monkeypatch.setattr(config, "_settings", None)
        with pytest.raises(GridError, match="cap of 100"):
            build_grid(2, 1.0, 11)

    def test_rejects_small_n(self) -> None:
        with pytest.raises(GridError, match="at least 3 nodes"):
            build_grid(1, 1.0, 2)

    def test_nearest_node_and_boundary_distance(self) -> None:
        grid = build_grid(2, 1.0, 5)
        k = grid.nearest_node([0.49, -0.51])
        np.testing.assert_allclose(grid.nodes()[k], [0.5, -0.5])
        assert grid.distance_to_boundary([[0.25, -0.5]])[0] == pytest.approx(0.5)


class TestGridFunctions:
    """Node values, integrals and sampling."""

    def test_sample_constant(self) -> None:
        grid = build_grid(2, 1.0, 5)
        values = sample_function(grid, parse_expression("1", 2)).values
        np.testing.assert_array_equal(values, np.ones(25))

    def test_sample_coordinate(self) -> None:
        grid = build_grid(1, 1.0, 3)
        values = sample_function(grid, parse_expression("x1", 1)).values
        np.testing.assert_array_equal(values, [-1.0, 0.0, 1.0])

    def test_sample_error_carries_node(self) -> None:
        grid = build_grid(1, 1.0, 3)
        with pytest.raises(ExpressionEvaluationError) as info:
            sample_function(grid, parse_expression("1 / x1", 1))
        assert info.value.point == (0.0,)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(GridError, match="d=2"):
            sample_function(build_grid(1, 1.0, 3), parse_expression("x2", 2))

    def test_rejects_non_finite(self) -> None:
        grid = build_grid(1, 1.0, 3)
        with pytest.raises(GridError, match="non-finite"):
            GridFunction(np.array([0.0, np.nan, 0.0]), grid)

    def test_rejects_wrong_size(self) -> None:
        with pytest.raises(GridError, match="expected 3"):
            GridFunction(np.zeros(4), build_grid(1, 1.0, 3))

    def test_from_interior_zero_on_boundary(self) -> None:
        grid = build_grid(2, 1.0, 4)
        phi = GridFunction.from_interior(grid, np.arange(4.0) + 1.0)
        assert phi.boundary_max() == 0.0
        np.testing.assert_array_equal(phi.interior(), [1.0, 2.0, 3.0, 4.0])

    def test_bump_integral(self) -> None:
        grid = build_grid(1, 4.0, 801)
        phi = bump(grid, 1.0)
        # int_{-1}^{1} (1 - x^2)^4 dx = 256 / 315
        assert phi.integral() == pytest.approx(256.0 / 315.0, rel=1e-6)
        assert phi.boundary_max() == 0.0

    def test_scalar_multiplication(self) -> None:
        grid = build_grid(1, 1.0, 5)
        phi = bump(grid, 0.9)
        np.testing.assert_array_equal((2.0 * phi).values, 2.0 * phi.values)
        assert (phi * phi).values[2] == 1.0
