"""Root censuses, corner perturbations, Casorati check, condition growth."""

import math

import numpy as np
import pytest

from chronospline.conditioning import (
    AssociatedPolynomial,
    SchurFamily,
    associated_polynomial,
    blowup_onset,
    casorati_invertibility,
    commutator_census,
    condition_sweep,
    family_matrix,
    inverse_decay_check,
    kappa1,
    perturbation_width,
    poly_combination,
    product_polynomial,
    reciprocal_symmetry_residual,
    rho_sweep,
    root_census,
)
from chronospline.symbols import SymbolTable, cfl_constants


def test_associated_polynomial_validation():
    with pytest.raises(ValueError):
        AssociatedPolynomial(coeffs=np.array([0.0, 1.0, 2.0]), m=1, ell=1)
    with pytest.raises(ValueError):
        AssociatedPolynomial(coeffs=np.array([1.0, 1.0]), m=1, ell=1)


def test_census_B():
    for p in range(1, 6):
        c = root_census(associated_polynomial(p, "B"))
        assert c.on_circle == 2
        assert c.on_circle_mults == [2]
        on = [z for z, mu in zip(c.roots, c.multiplicities)
              if abs(abs(z) - 1) < 1e-8]
        assert all(abs(z - 1.0) < 1e-6 for z in on)
        assert c.satisfies_root_property
        assert c.max_on_circle_multiplicity == 2


def test_census_C():
    for p in range(1, 6):
        c = root_census(associated_polynomial(p, "C"))
        assert c.on_circle == 2
        assert c.outside == p - 1
        assert c.inside == p - 1
        on = sorted(z.real for z, mu in zip(c.roots, c.multiplicities)
                    if abs(abs(z) - 1) < 1e-8)
        assert on == pytest.approx([-1.0, 1.0], abs=1e-8)
        assert c.satisfies_root_property


def test_census_M():
    for p in range(1, 6):
        c = root_census(associated_polynomial(p, "M"))
        assert c.on_circle == 0
        assert c.inside == p and c.outside == p
        assert not c.satisfies_root_property


def test_census_G_four_unit_roots():
    for p in (1, 2, 3, 4):
        for rho in (0.1, 1.0, 10.0, 100.0):
            c = root_census(associated_polynomial(p, "G", rho))
            assert c.on_circle == 4
            assert c.satisfies_root_property


def test_census_W_threshold():
    for p in (1, 2, 3, 4):
        consts = cfl_constants(p)
        below = root_census(associated_polynomial(p, "W", consts.rho_p / 2))
        assert below.on_circle == 4 and below.satisfies_root_property
        above = root_census(associated_polynomial(p, "W", 2 * consts.rho_tilde))
        assert above.on_circle == 0 and not above.satisfies_root_property
        # the transition tracks rho_p within a 2% band
        lo = root_census(associated_polynomial(p, "W", consts.rho_p * 0.98))
        hi = root_census(associated_polynomial(p, "W", consts.rho_p * 1.02))
        assert lo.on_circle == 4
        assert hi.on_circle == 0


def test_reciprocal_root_symmetry():
    for p in (1, 2, 3, 4):
        for q in (associated_polynomial(p, "B"),
                  associated_polynomial(p, "C"),
                  associated_polynomial(p, "G", 1.0),
                  associated_polynomial(p, "W", 1.0)):
            assert reciprocal_symmetry_residual(root_census(q)) < 1e-6


def test_product_polynomial():
    qb = associated_polynomial(2, "B")
    qc = associated_polynomial(2, "C")
    prod = product_polynomial(qb, qc)
    z = np.exp(1j * np.linspace(0.1, 3.0, 11))
    assert np.abs(prod(z) - qb(z) * qc(z)).max() < 1e-12
    triv = AssociatedPolynomial(coeffs=np.array([1.0]), m=0, ell=0)
    same = product_polynomial(triv, triv)
    assert same.degree == 0 and same.coeffs[0] == 1.0


def test_combination_polynomials_match_symbols_on_circle():
    ths = np.linspace(-math.pi, math.pi, 101)
    z = np.exp(1j * ths)
    for p in (1, 2, 3):
        t = SymbolTable(p)
        for rho in (0.5, 7.0):
            qg = associated_polynomial(p, "G", rho)
            lhs = np.exp(-2j * p * ths) * qg(z)
            target = (-rho * t.eval("C", ths) ** 2 + t.eval("B", ths) ** 2)
            assert np.abs(lhs - target).max() < 1e-10
            qw = associated_polynomial(p, "W", rho)
            lhs_w = np.exp(-2j * p * ths) * qw(z)
            target_w = rho * t.eval("M", ths) ** 2 - t.eval("C", ths) ** 2
            assert np.abs(lhs_w - target_w).max() < 1e-10


def test_condition_slopes_moderate_sizes():
    gb = condition_sweep("B", 2, [64, 128, 256])
    assert gb.slope == pytest.approx(2.0, abs=0.15)
    gc = condition_sweep("C", 2, [64, 128, 256])
    assert gc.slope == pytest.approx(1.0, abs=0.15)


def test_mass_family_exponential_growth():
    # not weakly well-conditioned: kappa multiplies by a fixed factor per
    # fixed dimension increment
    k32 = kappa1(family_matrix("M", 2, 32))
    k64 = kappa1(family_matrix("M", 2, 64))
    k96 = kappa1(family_matrix("M", 2, 96))
    assert k64 / k32 > 1e8
    assert k96 / k64 > 1e8


def test_root_property_matches_growth():
    # algebraic growth for families with the root property, exponential
    # without it
    for which, rho, algebraic in (("B", None, True), ("C", None, True),
                                  ("M", None, False), ("G", 1.0, True)):
        q = associated_polynomial(2, which, rho)
        census = root_census(q)
        k_small = kappa1(family_matrix(which, 2, 48, rho))
        k_large = kappa1(family_matrix(which, 2, 96, rho))
        ratio = k_large / k_small
        assert census.satisfies_root_property == algebraic
        assert (ratio < 32) == algebraic  # 2x dimension: poly vs exponential


def test_schur_blowup_location():
    # the sharp threshold separates bounded from blown-up Schur conditioning
    consts = cfl_constants(1)
    onset = blowup_onset("Wschur", 1, 400, np.arange(2.5, 5.6, 0.25))
    assert onset is not None
    assert abs(onset - consts.rho_p) < 0.6


def test_wschur_sweep_monotone_blowup():
    sweep = rho_sweep("Wschur", 1, 300, [2.0, 2.5, 3.5, 4.0])
    kmap = dict(sweep)
    assert kmap[4.0] > 100 * kmap[2.0]


def test_commutator_structure():
    for p in (1, 2, 3):
        rep = commutator_census(p, 2**7 + p - 1, n_other=2**8 + p - 1)
        assert rep.ok, rep.failures
        assert rep.top_left.shape == (2 * p + 1, 2 * p - 2)
        assert rep.bottom_right.shape == (max(2 * p - 2, 0), 2 * p + 1)
        if p > 1:
            assert np.abs(rep.top_left).max() > 1e-3  # genuinely nonzero
        assert rep.cross_n_residual is not None and rep.cross_n_residual < 1e-12


def test_commutator_fault_injection():
    rep = commutator_census(2, 64, c_perturbation=(30, 30, 1e-3))
    assert not rep.ok
    assert any(name == "interior-zero" for name, _ in rep.failures)


def test_perturbation_width_table():
    expected = {2: (20, 23), 3: (31, 34), 4: (39, 44)}
    for p, (n1, n2) in expected.items():
        got1, got2, cross = perturbation_width(p, 2**7 + p - 1, 1e-13,
                                               cross_check_n=2**8 + p - 1)
        assert (got1, got2) == (n1, n2)
        assert cross < 1e-13


def test_perturbation_width_monotone_in_eps():
    n1_loose, _ = perturbation_width(3, 2**7 + 2, 1e-2)
    n1_tight, _ = perturbation_width(3, 2**7 + 2, 1e-13)
    assert n1_loose <= n1_tight
    assert n1_loose <= 31


def test_casorati_invertibility():
    assert casorati_invertibility(1) is True  # vacuous: no outside roots
    assert casorati_invertibility(2, 512) is True
    assert casorati_invertibility(3, 1024) is True
    assert casorati_invertibility(4, 512) is True
    with pytest.raises(ValueError):
        casorati_invertibility(2, 128)


def test_corner_block_nonsingularity():
    from chronospline.conditioning import corner_block_nonsingularity
    # low degrees: all four designated blocks are comfortably nonsingular
    for p in (1, 2):
        for rho in (0.1, 1.0, 10.0, 100.0):
            assert corner_block_nonsingularity(p, rho) is True
    # at degree 3 and large rho two blocks sit at the conditioning cap; the
    # verdict must be the explicit "indeterminate", never a silent boolean
    for rho in (0.1, 1.0, 10.0, 100.0):
        out = corner_block_nonsingularity(3, rho)
        assert out is True or out == "indeterminate"


def test_precision_env_variable(monkeypatch):
    from chronospline.conditioning import default_precision_bits
    monkeypatch.setenv("CHRONOSPLINE_PRECISION_BITS", "768")
    assert default_precision_bits() == 768
    monkeypatch.delenv("CHRONOSPLINE_PRECISION_BITS")
    assert default_precision_bits() == 512


def test_inverse_decay():
    r1 = inverse_decay_check(1, 64)
    assert r1.ok and r1.trivial
    r2 = inverse_decay_check(2, 256)
    assert r2.ok and 0 < r2.gamma < 1
    # fitted decay rate stable in n within 5%
    r2b = inverse_decay_check(2, 128)
    assert abs(r2b.gamma - r2.gamma) / r2.gamma < 0.05
    # the fitted rate is the modulus of the decisive polynomial root
    assert r2.gamma == pytest.approx(2 - math.sqrt(3), abs=1e-3)


def test_schur_family_record():
    fam = SchurFamily(kind="Wschur", p=1, rho=1.0)
    a = fam.matrix(64)
    assert a.shape == (64, 64)
    q = fam.polynomial()
    assert q.degree == 4
    with pytest.raises(ValueError):
        SchurFamily(kind="X", p=1, rho=1.0)
    with pytest.raises(ValueError):
        SchurFamily(kind="G", p=1, rho=-1.0)
