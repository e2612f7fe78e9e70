"""Tests for the oscillating test function limit."""

import math

import numpy as np
import pytest

from src.analysis import oscillation_extract
from src.analysis.oscillation import richardson_limit
from src.coeff import build_preset, constant_field
from src.disc import build_grid, bump
from src.errors import FieldError, GridError


@pytest.fixture(scope="module")
def fine_line():
    return build_grid(1, 2.0, 801)


class TestOscillationExtract:
    """k^-2 (h(phi_c) + h(phi_s)) -> int (xi, C xi) |phi|^2."""

    def test_identity_deviation_matches_model(self, fine_line) -> None:
        phi = bump(fine_line, 0.8)
        table = oscillation_extract(build_preset("identity", 1), fine_line, phi, [1.0], [4, 8, 16])
        assert table.reference == pytest.approx(float(np.sum(phi.values**2)) * fine_line.h)
        for row in table.rows:
            assert row.ratio == pytest.approx(1.0, abs=0.05)
        assert [row.k for row in table.rows] == [4.0, 8.0, 16.0]

    def test_constant_diagonal_reference(self) -> None:
        grid = build_grid(2, 2.0, 81)
        phi = bump(grid, 0.9)
        field = constant_field(np.diag([2.0, 5.0]))
        table = oscillation_extract(field, grid, phi, [1.0, 0.0], [2.0, 4.0])
        l2_squared = float(np.sum(phi.values**2)) * grid.cell_volume
        assert table.reference == pytest.approx(2.0 * l2_squared, rel=1e-12)

    def test_oscillating_field_extrapolates(self, fine_line) -> None:
        phi = bump(fine_line, 0.8)
        table = oscillation_extract(
            build_preset("sinusoidal", 1), fine_line, phi, [1.0], [4, 8, 16], max_workers=2
        )
        assert table.extrapolation_error is not None
        assert table.extrapolation_error <= 0.01
        rows = table.as_rows()
        assert rows[0]["reference"] == table.reference
        assert table.as_dict()["xi"] == [1.0]

    def test_diagonal_direction(self) -> None:
        grid = build_grid(2, 2.0, 81)
        phi = bump(grid, 0.9)
        xi = [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)]
        field = constant_field([[1.0, 0.5], [0.5, 1.0]])
        table = oscillation_extract(field, grid, phi, xi, [2.0])
        l2_squared = float(np.sum(phi.values**2)) * grid.cell_volume
        assert table.reference == pytest.approx(1.5 * l2_squared, rel=1e-12)

    def test_resolution_guard(self, fine_line) -> None:
        phi = bump(fine_line, 0.8)
        with pytest.raises(GridError, match="resolution limit"):
            oscillation_extract(build_preset("identity", 1), fine_line, phi, [1.0], [100])

    def test_support_guard(self, fine_line) -> None:
        phi = bump(fine_line, 1.5)
        with pytest.raises(GridError, match="inner half"):
            oscillation_extract(build_preset("identity", 1), fine_line, phi, [1.0], [4])

    def test_direction_must_be_unit(self, fine_line) -> None:
        phi = bump(fine_line, 0.8)
        with pytest.raises(FieldError, match="not a unit vector"):
            oscillation_extract(build_preset("identity", 1), fine_line, phi, [2.0], [4])

    def test_grid_must_match(self, fine_line) -> None:
        phi = bump(build_grid(1, 2.0, 801), 0.8)
        with pytest.raises(GridError, match="different grid"):
            oscillation_extract(build_preset("identity", 1), fine_line, phi, [1.0], [4])


class TestRichardson:
    def test_exact_model_is_recovered(self) -> None:
        k = [4.0, 8.0, 16.0]
        values = [3.0 + 7.0 / kk**2 for kk in k]
        assert richardson_limit(k, values) == pytest.approx(3.0)

    def test_single_point_has_no_limit(self) -> None:
        assert richardson_limit([4.0], [1.0]) is None
