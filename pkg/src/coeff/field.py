"""Coefficient fields C(x) built from upper-triangular expression entries."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.coeff.expr import MAX_DIMENSION, ScalarFieldExpr, constant, parse_expression
from src.errors import FieldError
from src.logging_config import get_logger
from src.models import EllipticityEstimate, Provenance

logger = get_logger("coeff.field")

FloatArray = NDArray[np.float64]

PSD_TOLERANCE = 1e-12

Box = Sequence[tuple[float, float]]


def upper_index(d: int) -> list[tuple[int, int]]:
    """Row-major (i, j) pairs with i <= j, the storage order of field entries."""
    return [(i, j) for i in range(d) for j in range(i, d)]


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric matrix-valued function; only the upper triangle is stored."""

    d: int
    entries: tuple[ScalarFieldExpr, ...]
    label: str = "field"

    def __post_init__(self) -> None:
        if not 1 <= self.d <= MAX_DIMENSION:
            raise FieldError(f"dimension must be in 1..{MAX_DIMENSION}, got {self.d}")
        expected = self.d * (self.d + 1) // 2
        if len(self.entries) != expected:
            raise FieldError(
                f"{self.label}: expected {expected} upper-triangular entries, "
                f"got {len(self.entries)}"
            )
        for entry in self.entries:
            if entry.d != self.d:
                raise FieldError(f"{self.label}: entry {entry} is over d={entry.d}")

    @classmethod
    def from_texts(
        cls,
        d: int,
        entries: Sequence[str],
        label: str = "field",
    ) -> "CoefficientField":
        """Build from expression strings in row-major upper-triangular order."""
        return cls(d, tuple(parse_expression(text, d) for text in entries), label)

    @classmethod
    def diagonal(cls, d: int, diagonal: Sequence[str], label: str = "field") -> "CoefficientField":
        """Build a diagonal field from d expression strings."""
        if len(diagonal) != d:
            raise FieldError(f"{label}: need {d} diagonal entries, got {len(diagonal)}")
        texts = [diagonal[i] if i == j else "0" for i, j in upper_index(d)]
        return cls.from_texts(d, texts, label)

    @classmethod
    def isotropic(cls, d: int, scalar: str, label: str = "field") -> "CoefficientField":
        """Build c(x) * I."""
        return cls.diagonal(d, [scalar] * d, label)

    def matrices(self, points: ArrayLike) -> FloatArray:
        """Evaluate C at an (m, d) array of points; returns (m, d, d), exactly symmetric."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, self.d)
        out = np.empty((pts.shape[0], self.d, self.d))
        for entry, (i, j) in zip(self.entries, upper_index(self.d), strict=True):
            values = entry(pts)
            out[:, i, j] = values
            out[:, j, i] = values
        return out

    def describe(self) -> list[str]:
        """Entry texts in storage order, for reports."""
        return [entry.to_text() for entry in self.entries]


def eval_matrix(field: CoefficientField, x: ArrayLike) -> FloatArray:
    """C(x) at a single point as a symmetric d x d matrix."""
    point = np.asarray(x, dtype=np.float64).reshape(1, field.d)
    return field.matrices(point)[0]


def check_psd(field: CoefficientField, points: FloatArray, matrices: FloatArray) -> FloatArray:
    """Return eigenvalues (m, d), raising FieldError where C(x) is not PSD."""
    eigenvalues = np.linalg.eigvalsh(matrices)
    scale = np.max(np.abs(eigenvalues), axis=1)
    bad = eigenvalues[:, 0] < -PSD_TOLERANCE * np.maximum(scale, 1e-300)
    if bad.any():
        k = int(np.argmax(bad))
        raise FieldError(
            f"{field.label}: C(x) not positive semidefinite at x={points[k].tolist()} "
            f"(smallest eigenvalue {eigenvalues[k, 0]:.3e})"
        )
    return eigenvalues


def lattice(box: Box, samples_per_axis: int) -> FloatArray:
    """Tensor lattice over a box, endpoints included; returns (m, d)."""
    axes = [np.linspace(lo, hi, samples_per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def ellipticity_scan(
    field: CoefficientField,
    box: Box,
    samples_per_axis: int,
) -> EllipticityEstimate:
    """Empirical (mu, lambda) over a sample lattice of the box."""
    if samples_per_axis < 2:
        raise FieldError("samples_per_axis must be at least 2")
    if len(box) != field.d:
        raise FieldError(f"box has {len(box)} axes, field has d={field.d}")

    points = lattice(box, samples_per_axis)
    eigenvalues = check_psd(field, points, field.matrices(points))
    k_min = int(np.argmin(eigenvalues[:, 0]))
    k_max = int(np.argmax(eigenvalues[:, -1]))
    mu = max(float(eigenvalues[k_min, 0]), 0.0)
    lam = float(eigenvalues[k_max, -1])
    logger.debug(
        f"{field.label}: scan over {len(points)} points gives mu={mu:.6g}, lambda={lam:.6g}"
    )
    if lam <= 0.0:
        raise FieldError(f"{field.label}: field vanishes identically on the box")
    return EllipticityEstimate(
        mu=mu,
        lambda_=lam,
        provenance=Provenance.SCAN,
        mu_point=points[k_min].tolist(),
        lambda_point=points[k_max].tolist(),
    )


def constant_field(matrix: ArrayLike, label: str = "constant") -> CoefficientField:
    """Field equal to a fixed symmetric matrix everywhere."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    d = arr.shape[0]
    if arr.shape != (d, d) or not np.array_equal(arr, arr.T):
        raise FieldError(f"{label}: matrix must be square and symmetric")
    return CoefficientField(d, tuple(constant(arr[i, j], d) for i, j in upper_index(d)), label)
