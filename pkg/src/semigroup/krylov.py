"""Lanczos tridiagonalization and the Krylov approximation of exp(-tau A) v."""

from collections.abc import Callable
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh_tridiagonal

FloatArray = NDArray[np.float64]
MatVec = Callable[[FloatArray], FloatArray]

BREAKDOWN = 1e-14


class LanczosBasis(NamedTuple):
    """A V_m = V_m T_m + beta_next v_{m+1} e_m^T, with T_m = tridiag(beta, alpha, beta)."""

    V: FloatArray
    alpha: FloatArray
    beta: FloatArray
    beta_next: float
    norm: float

    @property
    def dim(self) -> int:
        return int(self.alpha.size)


def lanczos(matvec: MatVec, v: FloatArray, m: int) -> LanczosBasis:
    """m steps of Lanczos with full reorthogonalization; stops early on an invariant subspace."""
    n = v.size
    norm = float(np.linalg.norm(v))
    V = np.zeros((n, m))
    alpha = np.zeros(m)
    beta = np.zeros(m)
    if norm == 0.0:
        return LanczosBasis(V[:, :0], alpha[:0], beta[:0], 0.0, 0.0)

    V[:, 0] = v / norm
    beta_next = 0.0
    for j in range(m):
        w = matvec(V[:, j])
        alpha[j] = float(w @ V[:, j])
        w -= alpha[j] * V[:, j]
        if j > 0:
            w -= beta[j - 1] * V[:, j - 1]
        # two passes of Gram-Schmidt keep the basis orthogonal to rounding
        for _ in range(2):
            w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        beta_next = float(np.linalg.norm(w))
        if j == m - 1 or beta_next <= BREAKDOWN * max(abs(alpha[j]), 1.0):
            k = j + 1
            return LanczosBasis(V[:, :k], alpha[:k], beta[: k - 1], beta_next, norm)
        beta[j] = beta_next
        V[:, j + 1] = w / beta_next
    raise AssertionError("unreachable")


class KrylovStep(NamedTuple):
    result: FloatArray
    error_estimate: float
    dim: int


def expm_krylov(matvec: MatVec, v: FloatArray, tau: float, m: int) -> KrylovStep:
    """exp(-tau A) v from an m-dimensional Krylov space of a symmetric PSD A.

    The error estimate is ||v|| beta_{m+1} |e_m^T exp(-tau T_m) e_1|.
    """
    basis = lanczos(matvec, v, m)
    if basis.dim == 0:
        return KrylovStep(np.zeros_like(v), 0.0, 0)
    if basis.dim == 1:
        evals, evecs = basis.alpha, np.ones((1, 1))
    else:
        evals, evecs = eigh_tridiagonal(basis.alpha, basis.beta)
    y = evecs @ (np.exp(-tau * evals) * evecs[0, :])
    result = basis.norm * (basis.V @ y)
    error = basis.norm * basis.beta_next * abs(float(y[-1]))
    return KrylovStep(result, error, basis.dim)
