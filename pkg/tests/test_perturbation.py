import math

import numpy as np
import pytest

from gifsdim import r3
from gifsdim.model import PerturbedFamily
from gifsdim.perturbation import (
    UnreliableExpansionError,
    affine_condition_check,
    affine_pn,
    compute_pn,
    compute_t_tilde,
    compute_tk,
    default_grid,
    dimension_sweep,
    fit_expansion,
    k_order_check,
    uniform_t_table,
)

S1_CONFORMAL = math.log(2) * 0.1 / (0.5 * math.log(0.5) ** 2)


def test_default_grid():
    g = default_grid()
    assert len(g) == 11
    assert g[0] == 0.1 and g[-1] == pytest.approx(0.1 / 1024)


def test_tk_examples():
    assert compute_tk(uniform_t_table(3, 1.0), 2, 2) == 1.0
    assert compute_tk({(1, 1): 0.5, (0, 2): 0.7}, 1, 1) == 0.5
    assert compute_tk(uniform_t_table(1, 0.37), 2, 1) == pytest.approx(0.37)


def test_tk_uniform_any_order():
    for n in range(1, 4):
        table = uniform_t_table(n, 0.6)
        for D in (1, 2, 3):
            for k in range(1, n + 1):
                assert compute_tk(table, D, k) == pytest.approx(0.6)


def test_tk_missing_entry():
    with pytest.raises(KeyError):
        compute_tk({(1, 1): 0.5}, 1, 1)


def test_pn_examples():
    assert compute_pn(0.3, [], 0.6, 0) == pytest.approx(0.5)
    for n in range(1, 4):
        assert compute_pn(0.37, [1.0] * n, 1.0, n) == pytest.approx(0.37)
    assert compute_pn(0.2, [0.8], 0.8, 1) == pytest.approx(0.4)


def test_pn_monotone_in_exponents():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        tk = list(rng.uniform(0.2, 1.0, n))
        tt = float(rng.uniform(0.2, 1.0))
        p = float(rng.uniform(0, 1))
        base = compute_pn(p, tk, tt, n)
        k = int(rng.integers(n))
        bigger = list(tk)
        bigger[k] = min(1.0, bigger[k] + 0.1)
        assert compute_pn(p, bigger, tt, n) <= base + 1e-15
        assert compute_pn(p, tk, min(1.0, tt + 0.1), n) <= base + 1e-15


def test_affine_pn_examples():
    assert affine_pn(0.9, 3, 1, 0.8) == pytest.approx(1.5)
    assert affine_pn(0.7, 2, 3, 1.0) == pytest.approx(0.7)


def test_uniform_table_matches_affine_form():
    # with t(l, k) = t the general threshold, scaled by D, is the two-term affine form
    for D in (1, 2, 3):
        for n in (1, 2, 3):
            for t in (0.5, 0.8, 1.0):
                s = 0.4
                table = uniform_t_table(n, t)
                tk = [compute_tk(table, D, k) for k in range(1, n + 1)]
                tt = compute_t_tilde(table, tk, t, D, n)
                assert tk == pytest.approx([t] * n)
                assert tt == pytest.approx(t)
                assert D * compute_pn(s / D, tk, tt, n) == pytest.approx(affine_pn(s, D, n, t))


def test_affine_condition_check_constant(spec):
    sys = spec("diag_pair")
    fam = PerturbedFamily(1, sys, {})
    rep = affine_condition_check(fam, 0.8, (0.5, 1.0))
    assert rep.effective_order == 0
    assert rep.p_low == 0.0
    assert rep.p_n == 0.0
    assert rep.verdict


def test_affine_condition_check_t_one():
    fam = r3.r3_family()
    rep = affine_condition_check(fam, 1.0, (1.0, 1.0), grid=default_grid(levels=8))
    assert rep.p_n == pytest.approx(rep.p_low * fam.base.dim)
    assert rep.t_k == [1.0] and rep.t_tilde == 1.0
    assert rep.verdict


def test_affine_condition_check_fails_quasiregularity(spec):
    fam = spec("stretch_family")
    rep = affine_condition_check(fam, 1.0, (0.5, 1.0), grid=default_grid(levels=8))
    assert "quasiregularity" in rep.failing
    assert not rep.verdict


def test_affine_condition_check_countable_dimension(spec):
    # polynomial tail k^-2 has finiteness threshold 1/2
    sys = spec("countable")
    fam = PerturbedFamily(1, sys, {"e1": [(np.array([[0.1]]), np.zeros(1))]})
    rep = affine_condition_check(fam, 0.8, (0.6, 0.7))
    assert rep.effective_order == 1
    assert rep.p_n == pytest.approx(max(0.5 + 0.2, 0.5 / 0.8), abs=2e-3)
    assert not rep.dim_check
    assert "dimension" in rep.failing


def test_constant_family_coefficients(spec):
    fam = PerturbedFamily(2, spec("cantor"), {})
    for method in ("richardson", "polyfit"):
        fit = fit_expansion(fam, 2, default_grid(levels=6), method=method)
        assert fit.coefficients[0] == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
        assert fit.coefficients[1] == pytest.approx(0.0, abs=1e-9)
        assert fit.coefficients[2] == pytest.approx(0.0, abs=1e-9)


def test_conformal_family_fit(spec):
    fam = spec("conformal_family")
    rich = fit_expansion(fam, 1)
    assert rich.coefficients[0] == pytest.approx(1.0, abs=1e-8)
    assert rich.coefficients[1] == pytest.approx(S1_CONFORMAL, rel=1e-2)
    poly = fit_expansion(fam, 1, method="polyfit")
    assert poly.coefficients[1] == pytest.approx(rich.coefficients[1], rel=1e-2)
    # interval sandwich: brackets are degenerate, so the fit follows them to O(eps^2)
    for eps, lo, hi in rich.brackets:
        assert lo - 1e-9 <= hi
        assert abs(rich(eps) - lo) <= 2 * rich.remainder_scale * eps + 1e-9


def test_conformal_second_order(spec):
    # s(eps) = -log 2 / log(1/2 + eps/10), second derivative by hand
    fam = spec("conformal_family")
    fit = fit_expansion(fam, 2)
    r0, dr = 0.5, 0.1
    L = math.log(r0)
    s2 = math.log(2) * (dr / r0) ** 2 * (2 / L**3 + 1 / L**2) / 2
    assert fit.coefficients[1] == pytest.approx(S1_CONFORMAL, rel=1e-6)
    assert fit.coefficients[2] == pytest.approx(-s2, rel=1e-2)


def test_r3_fit_stable():
    fam = r3.r3_family()
    fit = fit_expansion(fam, 1)
    coarse = fit_expansion(fam, 1, default_grid(0.05, 10))
    assert fit.coefficients[0] == pytest.approx(1.0, abs=1e-9)
    assert abs(coarse.coefficients[1] - fit.coefficients[1]) < 0.05 * abs(fit.coefficients[1])
    assert fit.remainder_slope >= 1.5
    assert fit.width_slope >= 1.8


def test_unreliable_expansion(spec):
    with pytest.raises(UnreliableExpansionError, match="nonconformality dominates") as info:
        fam = PerturbedFamily(1, spec("diag_pair"), {"e0": [(np.diag([0.1, 0.0]), np.zeros(2))]})
        fit_expansion(fam, 1, default_grid(levels=6))
    assert len(info.value.widths) == 6


def test_grid_must_decrease(spec):
    with pytest.raises(ValueError):
        fit_expansion(spec("conformal_family"), 1, [0.01, 0.02, 0.04])


def test_sweep_parallel_matches_serial(spec):
    fam = spec("conformal_family")
    grid = default_grid(levels=5)
    a = dimension_sweep(fam, grid)
    b = dimension_sweep(fam, grid, workers=4)
    assert [(r.eps, r.lower, r.upper) for r in a] == [(r.eps, r.lower, r.upper) for r in b]


def test_k_order(spec):
    v = k_order_check(spec("conformal_family"), 1)
    assert v.passed and v.exactly_conformal and v.note == "exactly conformal"
    v = k_order_check(r3.r3_family(), 1)
    assert v.passed
    assert v.slope == pytest.approx(2.0, abs=0.05)
    v = k_order_check(spec("stretch_family"), 1, default_grid(levels=8))
    assert not v.passed
    assert v.slope == pytest.approx(1.0, abs=0.05)
