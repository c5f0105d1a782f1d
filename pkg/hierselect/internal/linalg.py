from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

# Smallest accepted ratio between the smallest and the largest pivot
# of the weighted Gram matrix.
PIVOT_RATIO = 1e-10


class SingularDesign(ArithmeticError):
    """The weighted Gram matrix of a design is (numerically) singular."""


def weighted_cholesky(X: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, bool]:
    """Factor ``XᵀWX`` and reject it if any pivot collapses relative to the
    largest one."""
    gram = (X * w[:, None]).T @ X
    try:
        factor = cho_factor(gram, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        raise SingularDesign("Weighted Gram matrix is not positive definite") from None

    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < PIVOT_RATIO * pivots.max():
        raise SingularDesign(
            f"Weighted Gram matrix is singular (pivot ratio {pivots.min() / pivots.max():.3g})"
        )
    return factor


def weighted_least_squares(X: np.ndarray, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Solve ``(XᵀWX) b = XᵀWz``."""
    factor = weighted_cholesky(X, w)
    return cho_solve(factor, X.T @ (w * z))


def weighted_inverse(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Return ``(XᵀWX)⁻¹``."""
    factor = weighted_cholesky(X, w)
    return cho_solve(factor, np.eye(X.shape[1]))
