"""
A nonconformal perturbation in three dimensions
===============================================

``M(eps)`` scales by r/2 and turns the yz plane by pi/3 at eps=0. Adding
``eps diag(1/4, 1/2, 1/2)`` breaks conformality, but only at second
order: K(eps) - 1 ~ eps^2, so the dimension still has a first-order
expansion.
"""

import numpy as np

from gifsdim import r3
from gifsdim.linalg import min_quasiregular_K
from gifsdim.model import loglog_slope
from gifsdim.perturbation import default_grid, fit_expansion, k_order_check

grid = default_grid()
closed = r3.closed_form_K(np.array(grid))
minimal = np.array([min_quasiregular_K(r3.r3_matrix(e)) for e in grid])
for e, kc, km in list(zip(grid, closed, minimal))[:4]:
    print(f"eps={e:.5f}  closed form {kc:.8f}  minimal {km:.8f}")

# the closed form is the 3/2 power of the norm ratio, the minimal constant the square
print("second-order coefficient of the closed form:", r3.second_order_coefficient(h=5e-3))
print("slope of K-1:", loglog_slope(grid, minimal - 1)[0])

fam = r3.r3_family()
print(k_order_check(fam, 1).note)
fit = fit_expansion(fam, 1)
print(f"s0={fit.coefficients[0]:.12f}  s1={fit.coefficients[1]:.6f}")
print(f"residual slope {fit.remainder_slope:.3f}, bracket width slope {fit.width_slope:.3f}")
for eps, lo, hi in fit.brackets[:3]:
    print(f"  eps={eps:.4f}  [{lo:.8f}, {hi:.8f}]  fit {fit(eps):.8f}")
