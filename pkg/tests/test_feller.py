"""Tests for the one-dimensional Feller test."""

import pytest

from src.analysis import feller_oracle_1d
from src.coeff import parse_expression
from src.errors import FieldError
from src.models import FellerStatus


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("1", FellerStatus.CONSERVATIVE),
        ("(1 + abs(x1))^2", FellerStatus.CONSERVATIVE),
        ("(1 + abs(x1))^2 * log(2 + abs(x1))", FellerStatus.CONSERVATIVE),
        ("(1 + x1^2)^2", FellerStatus.EXPLOSIVE),
        ("(1 + abs(x1))^3", FellerStatus.EXPLOSIVE),
    ],
)
def test_classification(text: str, expected: FellerStatus) -> None:
    verdict = feller_oracle_1d(parse_expression(text, 1))
    assert verdict.status is expected


def test_constant_coefficient_has_infinite_scale() -> None:
    verdict = feller_oracle_1d(parse_expression("1", 1))
    assert not verdict.plus.scale_finite
    assert verdict.plus.scale_tail_exponent == pytest.approx(0.0, abs=1e-9)


def test_explosive_tail_exponents() -> None:
    verdict = feller_oracle_1d(parse_expression("(1 + x1^2)^2", 1))
    assert verdict.plus.scale_finite
    assert verdict.plus.scale_tail_exponent == pytest.approx(4.0, abs=0.01)
    assert verdict.plus.explosion_tail_exponent == pytest.approx(3.0, abs=0.01)
    # s(inf) = int_0^inf (1 + x^2)^-2 dx = pi / 4
    assert verdict.plus.scale_limit == pytest.approx(0.785398, rel=1e-4)


def test_one_sided_explosion() -> None:
    verdict = feller_oracle_1d(parse_expression("1 + max(x1, 0)^4", 1))
    assert verdict.plus.status is FellerStatus.EXPLOSIVE
    assert verdict.minus.status is FellerStatus.CONSERVATIVE
    assert verdict.status is FellerStatus.EXPLOSIVE


def test_needs_one_dimension() -> None:
    with pytest.raises(FieldError, match="one-dimensional"):
        feller_oracle_1d(parse_expression("1 + x2^2", 2))


def test_needs_positive_coefficient() -> None:
    with pytest.raises(FieldError, match="not strictly positive"):
        feller_oracle_1d(parse_expression("x1^2", 1))


def test_cutoff_bound() -> None:
    with pytest.raises(FieldError, match="cutoff"):
        feller_oracle_1d(parse_expression("1", 1), cutoff=5.0)
