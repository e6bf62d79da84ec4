"""Small dense linear algebra for derivative matrices of affine maps.

Singular values come from a one-sided (Hestenes) cyclic Jacobi sweep. It
diagonalises ``M^T M`` implicitly through plane rotations of the columns of
``M``, so the normal matrix is never formed and small singular values keep
full relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SingularMatrixError",
    "singular_values",
    "op_norm",
    "inf_norm",
    "abs_det",
    "min_quasiregular_K",
    "is_conformal",
    "DEFAULT_CONFORMAL_TOL",
]

DEFAULT_CONFORMAL_TOL = 1e-9
MAX_DIM = 8
_MAX_SWEEPS = 60


class SingularMatrixError(ValueError):
    """Raised when a derivative that must be invertible is singular."""


def _as_square(M) -> np.ndarray:
    A = np.array(M, dtype=float, ndmin=2)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not 1 <= A.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def singular_values(M, tol: float = 1e-15) -> np.ndarray:
    """Singular values of a square matrix in non-increasing order.

    Parameters
    ----------
    M : array_like
        ``D x D`` real matrix with ``1 <= D <= 8``.
    tol : float
        Relative orthogonality threshold for a column pair. A sweep that
        rotates no pair ends the iteration.
    """
    A = _as_square(M)
    d = A.shape[0]
    if d == 1:
        return np.abs(A[0])
    # columns as plain float lists: per-rotation numpy overhead dominates at D <= 8
    cols = [list(map(float, A[:, j])) for j in range(d)]
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(d - 1):
            ap = cols[p]
            for q in range(p + 1, d):
                aq = cols[q]
                alpha = math.fsum(x * x for x in ap)
                beta = math.fsum(x * x for x in aq)
                gamma = math.fsum(x * y for x, y in zip(ap, aq))
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                diff = beta - alpha
                if abs(diff) > 1e150 * abs(gamma):
                    t = gamma / diff  # small-angle limit of the formula below
                else:
                    zeta = diff / (2.0 * gamma)
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                ap, aq = [c * x - s * y for x, y in zip(ap, aq)], [s * x + c * y for x, y in zip(ap, aq)]
                cols[p] = ap
                cols[q] = aq
        if not rotated:
            break
    sv = np.array([math.sqrt(math.fsum(x * x for x in col)) for col in cols])
    return np.sort(sv)[::-1]


def op_norm(M) -> float:
    """Operator norm ``sup_{|x|=1} |Mx|``, the largest singular value."""
    return float(singular_values(M)[0])


def inf_norm(M) -> float:
    """Infimum norm ``inf_{|x|=1} |Mx|``, the smallest singular value."""
    return float(singular_values(M)[-1])


def abs_det(M) -> float:
    """``|det M|`` as the product of the singular values."""
    return float(np.prod(singular_values(M)))


def min_quasiregular_K(M) -> float:
    """Smallest ``K >= 1`` with ``|M|^D / K <= |det M| <= K |M|_i^D``.

    Raises
    ------
    SingularMatrixError
        If ``M`` is not invertible.
    """
    sv = singular_values(M)
    d = sv.size
    if sv[-1] == 0.0:
        raise SingularMatrixError("non-invertible derivative")
    # work with logs so D=8 products of small contractions do not underflow
    log_sv = np.log(sv)
    log_det = log_sv.sum()
    upper = d * log_sv[0] - log_det
    lower = log_det - d * log_sv[-1]
    return float(max(1.0, np.exp(max(upper, lower))))


def is_conformal(M, tol: float = DEFAULT_CONFORMAL_TOL) -> bool:
    """True when ``M`` is a similitude up to relative tolerance ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    sv = singular_values(M)
    return bool(sv[0] - sv[-1] <= tol * sv[0])
