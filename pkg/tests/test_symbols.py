"""Symbol evaluation, identities, and CFL constants."""

import math

import numpy as np
import pytest

from chronospline.symbols import (
    CflConstants,
    SymbolTable,
    cfl_constants,
    energy_limit_constant,
    g_symbol,
    l_ratio,
    l_ratio_derivative,
    lattice_sum,
    lattice_tail_bound,
    newton_bisection,
    pick_truncation,
    rho_tilde,
    sharp_threshold_function,
    symbol_vs_stencil,
    theta_max,
    w_symbol,
    zeta_ratio_check,
)

GRID = np.linspace(1e-3, math.pi, 257)


def test_lattice_sum_matches_brute_force():
    rng = np.random.default_rng(5)
    for s in (2, 3, 4, 7):
        for th in rng.uniform(0.3, math.pi, 5):
            # the brute-force float accumulation itself carries ~1e-12 noise
            brute = sum((th + 2 * math.pi * j) ** (-s) for j in range(-200000, 200001))
            tail = lattice_tail_bound(s, 200000)
            assert abs(lattice_sum(s, th) - brute) <= tail + 5e-12 * max(1.0, abs(brute))


def test_tail_bound_is_valid_and_monotone():
    # the integral bound dominates the true (zeta-computed) tail
    for s in (2, 3, 5):
        for K in (4, 16, 64):
            true_tail = lattice_sum(s, 1.0) - sum(
                (1.0 + 2 * math.pi * j) ** (-s) for j in range(-K, K + 1))
            assert abs(true_tail) <= lattice_tail_bound(s, K)
    assert lattice_tail_bound(4, 32) < lattice_tail_bound(4, 8)


def test_pick_truncation():
    K = pick_truncation(6, 1e-14)
    assert lattice_tail_bound(6, K) < 1e-14
    with pytest.raises(ValueError):
        pick_truncation(2, 1e-14)  # slowly decaying series, honest refusal


def test_series_vs_closed_form_p1():
    t = SymbolTable(1)
    tc = SymbolTable(1, closed_form=True)
    ths = np.linspace(-math.pi, math.pi, 101)
    for w in ("B", "C", "M"):
        for d in (0, 1, 2):
            assert np.abs(t.eval(w, ths, d) - tc.eval(w, ths, d)).max() < 1e-11


def test_point_values():
    t1 = SymbolTable(1)
    assert t1.eval("C", math.pi / 2) == pytest.approx(-1.0, abs=1e-13)
    assert t1.eval("B", math.pi) == pytest.approx(-4.0, abs=1e-12)
    assert t1.eval("M", math.pi) == pytest.approx(1 / 3, abs=1e-13)
    for p in (1, 2, 3, 5):
        t = SymbolTable(p)
        assert t.eval("C", math.pi) == pytest.approx(0.0, abs=1e-13)
        assert t.eval("C", 0.0) == 0.0
        assert t.eval("B", 0.0) == 0.0
        assert t.eval("M", 0.0) == 1.0


def test_parity():
    t = SymbolTable(3)
    ths = np.linspace(0.1, math.pi, 24)
    assert np.allclose(t.eval("B", -ths), t.eval("B", ths))
    assert np.allclose(t.eval("M", -ths), t.eval("M", ths))
    assert np.allclose(t.eval("C", -ths), -t.eval("C", ths))


def test_hatted_pole_and_values():
    t = SymbolTable(2)
    with pytest.raises(ValueError):
        t.eval("Chat", 0.0)
    # hatted symbols are the series without the sigma prefactor
    th = 1.3
    sig = 2 - 2 * math.cos(th)
    assert t.eval("B", th) == pytest.approx(sig**3 * t.eval("Bhat", th), rel=1e-13)
    assert t.eval("M", th) == pytest.approx(sig**3 * t.eval("Mhat", th), rel=1e-13)


def test_near_zero_limits():
    # B = -theta^2 + O(theta^4); C/theta -> -1; C' -> -1; M -> 1
    for p in (1, 2, 3, 4):
        t = SymbolTable(p)
        for th in (1e-2, 1e-4, 1e-6, 1e-8):
            assert abs(t.eval("B", th) + th**2) < 2.0 * th**4 + 1e-14
        assert t.eval("B", 1e-4, 2) == pytest.approx(-2.0, abs=1e-6)
        assert t.eval("C", 1e-4) / 1e-4 == pytest.approx(-1.0, abs=1e-7)
        assert t.eval("C", 1e-4, 1) == pytest.approx(-1.0, abs=1e-7)
        assert t.eval("M", 1e-4) == pytest.approx(1.0, abs=1e-7)


def test_derivative_identity_with_finite_differences():
    # C' = (p+1) sin/(1-cos) C + (2p+1) M, with C' from central differences
    eps = 1e-6
    for p in (1, 2, 3, 4, 5):
        t = SymbolTable(p)
        for th in np.linspace(0.2, math.pi - 0.2, 40):
            fd = (t.eval("C", th + eps) - t.eval("C", th - eps)) / (2 * eps)
            rhs = ((p + 1) * math.sin(th) / (1 - math.cos(th)) * t.eval("C", th)
                   + (2 * p + 1) * t.eval("M", th))
            assert abs(fd - rhs) < 1e-8
            assert abs(t.eval("C", th, 1) - rhs) < 1e-10


def test_analytic_derivatives_match_finite_differences():
    eps = 1e-6
    for p in (2, 4):
        t = SymbolTable(p)
        for w in ("B", "C", "M"):
            for th in (0.5, 1.5, 2.8):
                fd = (t.eval(w, th + eps) - t.eval(w, th - eps)) / (2 * eps)
                assert abs(fd - t.eval(w, th, 1)) < 1e-8


def test_sign_facts():
    for p in (1, 2, 3, 4, 5):
        t = SymbolTable(p)
        inner = GRID[(GRID > 1e-3) & (GRID < math.pi - 1e-9)]
        assert np.all(t.eval("C", inner) < 0)
        assert np.all(t.eval("B", GRID) < 0)
        full = np.linspace(-math.pi, math.pi, 201)
        assert np.all(t.eval("M", full) > 0)


def test_endpoint_derivative_value_at_pi():
    for p in (1, 2, 3):
        t = SymbolTable(p)
        assert t.eval("C", math.pi, 1) == pytest.approx(
            (2 * p + 1) * t.eval("M", math.pi), rel=1e-11)


def test_hatted_inequalities_appendices():
    # Chat + theta * Mhat > 0 (cancellation-free form near zero) and
    # -Chat > theta sin(theta) * next lattice sum, both on fine grids
    ths = np.linspace(1e-3, math.pi - 1e-9, 400)
    from chronospline.symbols import chat_plus_theta_mhat
    for p in (1, 2, 3, 4, 5):
        t = SymbolTable(p)
        assert np.all(chat_plus_theta_mhat(p, ths) > 0)
        # away from zero the direct difference agrees with the reformulation
        far = ths[ths > 0.5]
        direct = t.eval("Chat", far) + far * t.eval("Mhat", far)
        assert np.abs(direct - chat_plus_theta_mhat(p, far)).max() < 1e-10
        chat = t.eval("Chat", ths)
        s_next = lattice_sum(2 * p + 3, ths)
        assert np.all(-chat > ths * np.sin(ths) * s_next)


def test_mass_symbol_log_derivative_inequality():
    # M_p + theta/(2p+2) M_p' > 0 on (0, pi), derivative by central differences
    eps = 1e-6
    for p in (1, 2, 3, 4):
        t = SymbolTable(p)
        for th in np.linspace(0.05, math.pi - 0.05, 60):
            dm = (t.eval("M", th + eps) - t.eval("M", th - eps)) / (2 * eps)
            assert t.eval("M", th) + th / (2 * p + 2) * dm > 0


def test_w_symbol_endpoints():
    for p in (1, 2, 3):
        t = SymbolTable(p)
        for rho in (0.5, 3.0, 11.0):
            assert w_symbol(t, 1e-7, rho) == pytest.approx(rho, abs=1e-5)
            mpi = t.eval("M", math.pi)
            assert w_symbol(t, math.pi, rho) == pytest.approx(rho * mpi**2, rel=1e-10)


def test_l_ratio_endpoints_and_monotonicity():
    for p in (1, 2, 3, 4):
        t = SymbolTable(p)
        for rho in (0.1, 1.0, 10.0):
            assert l_ratio(t, 1e-6, rho) == pytest.approx(rho, abs=1e-4 * max(1, rho))
            assert l_ratio(t, math.pi, rho) == pytest.approx(
                zeta_ratio_check(p), rel=1e-10)
            ths = np.linspace(1e-2, math.pi - 1e-6, 300)
            assert np.all(l_ratio_derivative(t, ths, rho) < 0)


def test_zeta_ratio_values():
    assert zeta_ratio_check(1) == pytest.approx(-12.0, abs=1e-10)
    # the signed ratio increases monotonically toward its limit -pi^2
    ratios = [zeta_ratio_check(p) for p in range(1, 7)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert all(r < -math.pi**2 for r in ratios)


def test_stencil_symbol_identity():
    ths = np.linspace(-math.pi, math.pi, 513)
    for p in (1, 2, 3, 4):
        for w in ("B", "C", "M"):
            assert symbol_vs_stencil(p, w, ths) < 1e-12


def test_mass_symbol_matches_its_closed_form_p1():
    t = SymbolTable(1)
    ths = np.linspace(-math.pi, math.pi, 64)
    assert np.abs(t.eval("M", ths) - (2 + np.cos(ths)) / 3).max() < 1e-13


def test_newton_bisection():
    res = newton_bisection(lambda x: x**2 - 2, lambda x: 2 * x, 0.0, 2.0)
    assert res.converged and res.root == pytest.approx(math.sqrt(2), abs=1e-12)
    # pathological derivative forces bisection fallback
    res2 = newton_bisection(lambda x: math.tanh(10 * (x - 0.7)),
                            lambda x: 1e-30, 0.0, 1.0)
    assert res2.converged and res2.root == pytest.approx(0.7, abs=1e-9)
    with pytest.raises(ValueError):
        newton_bisection(lambda x: 1.0, lambda x: 0.0, 0.0, 1.0)


def test_theta_max_and_rho_tilde_degree_one():
    assert theta_max(1) == pytest.approx(math.pi / 2, abs=1e-10)
    assert rho_tilde(1) == pytest.approx(9.0, rel=1e-12)


def test_cfl_constants_degree_one_exact():
    c = cfl_constants(1)
    assert c.theta_p == pytest.approx(2 * math.pi / 3, abs=1e-10)
    assert c.rho_p == pytest.approx(3.0, rel=1e-11)
    assert c.E_p == pytest.approx(9.0, rel=1e-11)
    # closed-form cross-check of rho_1 at theta = 2pi/3
    th = 2 * math.pi / 3
    assert math.sin(th) ** 2 / ((2 + math.cos(th)) / 3) ** 2 == pytest.approx(3.0)


def test_cfl_constants_higher_degrees():
    vals = {2: (1.384, 40.57, 2.332, 4.318, 9.091),
            3: (1.209, 187.1, 2.475, 5.204, 9.256)}
    for p, (tm, rt, tp, rp, ep) in vals.items():
        c = cfl_constants(p)
        assert c.theta_max == pytest.approx(tm, rel=1e-3)
        assert c.rho_tilde == pytest.approx(rt, rel=1e-3)
        assert c.theta_p == pytest.approx(tp, rel=1e-3)
        assert c.rho_p == pytest.approx(rp, rel=1e-3)
        assert c.E_p == pytest.approx(ep, rel=1e-3)


def test_cfl_invariants_and_metadata():
    for p in range(1, 8):
        c = cfl_constants(p)
        assert 0 < c.theta_max < math.pi
        assert 0 < c.theta_p < math.pi
        assert 0 < c.rho_p < c.E_p
        assert c.rho_tilde >= c.rho_p
        assert c.newton["theta_p"]["residual"] < 1e-12


def test_cfl_constants_validation():
    with pytest.raises(ValueError):
        CflConstants(p=1, theta_max=1.0, rho_tilde=1.0, theta_p=2.0,
                     rho_p=5.0, E_p=4.0)


def test_sharp_function_endpoints_and_monotonicity():
    # F_p -> 1 at 0+, F_p(pi) = -(2p+1) M_p(pi)^2, F_p' < 0 on (0,pi)
    for p in (1, 2, 3, 4):
        t = SymbolTable(p)
        assert sharp_threshold_function(t, 1e-5) == pytest.approx(1.0, abs=1e-3)
        mpi = t.eval("M", math.pi)
        assert sharp_threshold_function(t, math.pi) == pytest.approx(
            -(2 * p + 1) * mpi**2, rel=1e-10)
        ths = np.linspace(1e-2, math.pi - 1e-4, 200)
        dF = (t.eval("C", ths) * t.eval("M", ths, 2)
              - t.eval("C", ths, 2) * t.eval("M", ths))
        assert np.all(dF < 0)


def test_g_symbol_zero_structure():
    # -rho C^2 + B^2 has a double zero at 0 and exactly one zero in (0, pi]
    for p in (1, 2, 3):
        t = SymbolTable(p)
        for rho in (0.1, 1.0, 10.0, 100.0):
            ths = np.linspace(1e-3, math.pi, 2000)
            vals = g_symbol(t, ths, rho)
            signs = np.sign(vals)
            changes = np.sum(signs[:-1] != signs[1:])
            assert changes == 1


def test_energy_limit_constant_p1():
    assert energy_limit_constant(1) == pytest.approx(9.0, rel=1e-11)
