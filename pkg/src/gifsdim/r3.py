"""A nonconformal affine perturbation in three dimensions.

The perturbed map is ``T(eps, x) = M(eps) x + a`` with

    M(eps) = r [[1/2, 0, 0], [0, 1/4, -sqrt3/4], [0, sqrt3/4, 1/4]]
           + r eps diag(1/4, 1/2, 1/2).

At ``eps = 0`` it scales by ``r/2`` and turns the ``yz`` plane by ``pi/3``.
For ``eps > 0`` the ``x`` direction lags behind, so the map stops being
conformal. The operator norm of ``M(eps)/r`` is ``sqrt(eps^2 + eps + 1)/2``
and the infimum norm is ``(eps + 2)/4``.

:func:`r3_family` places it next to two fixed similitudes of ratio ``r``
inside the unit cube with disjoint image boxes. For ``r = 0.4`` the
unperturbed dimension is exactly 1, since ``2 * 0.4 + 0.2 = 1``.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import full_shift
from .model import AffineMap, AffineSystem, Box, PerturbedFamily

__all__ = [
    "base_block",
    "perturbation_block",
    "r3_matrix",
    "closed_form_K",
    "closed_form_op_norm",
    "closed_form_inf_norm",
    "second_order_coefficient",
    "r3_family",
]

SQRT3 = math.sqrt(3.0)


def base_block() -> np.ndarray:
    return np.array([[0.5, 0.0, 0.0], [0.0, 0.25, -SQRT3 / 4], [0.0, SQRT3 / 4, 0.25]])


def perturbation_block() -> np.ndarray:
    return np.diag([0.25, 0.5, 0.5])


def r3_matrix(eps: float, r: float = 1.0) -> np.ndarray:
    return r * (base_block() + eps * perturbation_block())


def closed_form_op_norm(eps):
    """Operator norm of ``M(eps)/r``."""
    eps = np.asarray(eps, dtype=float)
    return 0.5 * np.sqrt(eps**2 + eps + 1)


def closed_form_inf_norm(eps):
    """Infimum norm of ``M(eps)/r``."""
    return (np.asarray(eps, dtype=float) + 2) / 4


def closed_form_K(eps):
    """``2 sqrt2 (eps^2 + eps + 1)^(3/4) / (eps + 2)^(3/2)``.

    This is ``(|M| / |M|_i)^(3/2)``. The smallest constant satisfying both
    quasiregularity inequalities is the square of the norm ratio instead;
    both are ``1 + O(eps^2)``.
    """
    eps = np.asarray(eps, dtype=float)
    return 2 * math.sqrt(2) * (eps**2 + eps + 1) ** 0.75 / (eps + 2) ** 1.5


def second_order_coefficient(f=closed_form_K, h: float = 1e-2) -> float:
    """``f''(0) / 2`` by the central difference ``(f(h) - 2 f(0) + f(-h)) / (2 h^2)``."""
    return float((f(h) - 2 * f(0.0) + f(-h)) / (2 * h * h))


def r3_family(r: float = 0.4, offset=(0.05, 0.25, 0.05)) -> PerturbedFamily:
    """Order-1 family: the perturbed map plus two similitudes of ratio ``r``.

    Seeds are the unit cube; the offsets keep the three image boxes
    disjoint for ``r <= 0.4`` and ``eps <= 0.5``.
    """
    g = full_shift(3)
    unit = Box(np.zeros(3), np.ones(3))
    dom = Box(-0.5 * np.ones(3), 1.5 * np.ones(3))
    maps = {
        "e0": AffineMap(r * base_block(), np.array(offset, dtype=float)),
        "e1": AffineMap(r * np.eye(3), np.array([0.55, 0.55, 0.55])),
        "e2": AffineMap(r * np.eye(3), np.array([0.55, 0.0, 0.55])),
    }
    base = AffineSystem(3, g, maps, {"v": unit}, {"v": dom}, name=f"r3-r{r:g}")
    zero = (np.zeros((3, 3)), np.zeros(3))
    coeffs = {"e0": [(r * perturbation_block(), np.zeros(3))], "e1": [zero], "e2": [zero]}
    return PerturbedFamily(1, base, coeffs)
