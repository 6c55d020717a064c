"""Exact-rational assembly and determinant oracle for the temporal matrices.

The h-scaled temporal Galerkin matrices have rational entries.  This module
reassembles them in ``fractions.Fraction`` arithmetic (closed Newton-Cotes
quadrature at rational nodes, exact for the piecewise-polynomial integrands)
and provides a fraction-free Bareiss determinant as an invertibility oracle.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import lcm

from .splines import bspline_one, cardinal_at_integers, eval_cardinal


@lru_cache(maxsize=None)
def newton_cotes_weights(npoints):
    """Weights for equispaced nodes ``i/(npoints-1)`` on [0, 1], exact
    rational, integrating polynomials of degree ``npoints - 1`` exactly."""
    if npoints < 2:
        raise ValueError("need at least two nodes")
    n = npoints - 1
    nodes = [Fraction(i, n) for i in range(npoints)]
    # moment matching: sum_i w_i x_i^k = 1/(k+1)
    rows = [[x**k for x in nodes] for k in range(npoints)]
    rhs = [Fraction(1, k + 1) for k in range(npoints)]
    weights = _solve_fraction_system(rows, rhs)
    return tuple(nodes), tuple(weights)


def _solve_fraction_system(rows, rhs):
    n = len(rhs)
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        pval = a[col][col]
        a[col] = [v / pval for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


@lru_cache(maxsize=None)
def cardinal_inner_exact(p, r1, r2, shift):
    """Exact value of ``int Phi_p^(r1)(t+shift) Phi_p^(r2)(t) dt``."""
    if abs(shift) > p:
        return Fraction(0)
    nodes, weights = _interior_rule(2 * p + 2)
    total = Fraction(0)
    for k in range(max(0, -shift), min(p + 1, p + 1 - shift)):
        for x, w in zip(nodes, weights):
            t = k + x
            total += w * eval_cardinal(p, t + shift, r1) * eval_cardinal(p, t, r2)
    return total


def exact_stencil(p, which):
    """h-free Toeplitz stencil of hB, C, or M/h as exact Fractions.

    Returned as a dict ``offset -> value`` for offsets ``-(p+1) .. p-1``
    (column minus row); the band is centered on the first lower co-diagonal.
    """
    vals = cardinal_at_integers(2 * p + 1, 0)
    dvals = cardinal_at_integers(2 * p + 1, 1)
    ddvals = cardinal_at_integers(2 * p + 1, 2)
    out = {}
    for off in range(-(p + 1), p):
        j = abs(off + 1)
        if which == "B":
            out[off] = -ddvals[p + 1 - j]
        elif which == "M":
            out[off] = vals[p + 1 - j]
        elif which == "C":
            if j == 0:
                out[off] = Fraction(0)
            else:
                sgn = 1 if off + 1 > 0 else -1
                out[off] = sgn * dvals[p + 1 - j]
        else:
            raise ValueError(f"unknown family {which!r}")
    return out


def _integer_open_knots(p, N):
    return tuple([Fraction(0)] * (p + 1)
                 + [Fraction(i) for i in range(1, N)]
                 + [Fraction(N)] * (p + 1))


def assemble_temporal_exact(p, N, which, hybrid=True):
    """Exact h-scaled temporal matrix (hB, C, or M/h) of size (N+p-1)^2.

    Rows are test functions (final-condition trimmed basis), columns trial
    functions (initial-condition trimmed).  With ``hybrid`` the Toeplitz
    interior is taken from exact cardinal inner products and only entries
    touching a boundary-modified basis function are integrated; otherwise
    every entry is integrated.
    """
    if which not in ("B", "C", "M"):
        raise ValueError(f"unknown family {which!r}")
    if N < 2:
        raise ValueError("need at least two intervals")
    if N < 3 * p + 1:
        hybrid = False  # no purely Toeplitz rows to borrow from
    n = N + p - 1
    knots = _integer_open_knots(p, N)
    r_trial, r_test = {"B": (1, 1), "C": (1, 0), "M": (0, 0)}[which]
    # strictly interior nodes: the integrand is a polynomial on each open
    # element, and interior nodes keep the half-open knot convention moot
    nodes_i, weights_i = _interior_rule(2 * p + 2)
    cache = {}

    def phi(j, x, r):
        key = (j, x, r)
        if key not in cache:
            cache[key] = bspline_one(knots, p, j, x, r)
        return cache[key]

    def entry(row, col):
        jt, js = row, col + 1  # untrimmed indices of test and trial function
        # support of basis j on the clamped knots is [max(0, j-p), min(N, j+1)]
        lo = max(0, jt - p, js - p)
        hi = min(N, jt + 1, js + 1)
        total = Fraction(0)
        for k in range(lo, hi):
            for x, w in zip(nodes_i, weights_i):
                t = k + x
                total += w * phi(js, t, r_trial) * phi(jt, t, r_test)
        return total

    stencil = exact_stencil(p, which)
    mat = [[Fraction(0)] * n for _ in range(n)]
    boundary = set(range(2 * p)) | set(range(n - 2 * p, n))
    for row in range(n):
        for col in range(max(0, row - p - 1), min(n, row + p)):
            jt, js = row, col + 1
            interior = p <= jt <= n - p and p <= js <= n - p
            if hybrid and not (row in boundary or col in boundary) and interior:
                mat[row][col] = stencil[col - row]
            else:
                mat[row][col] = entry(row, col)
    return mat


@lru_cache(maxsize=None)
def _interior_rule(npoints):
    """Equispaced strictly interior nodes ``i/(npoints+1)`` with exact
    weights, same polynomial exactness degree as the closed rule."""
    n = npoints + 1
    nodes = [Fraction(i, n) for i in range(1, n)]
    rows = [[x**k for x in nodes] for k in range(len(nodes))]
    rhs = [Fraction(1, k + 1) for k in range(len(nodes))]
    return tuple(nodes), tuple(_solve_fraction_system(rows, rhs))


def bareiss_determinant_nonzero(mat):
    """Exact nonzero test of ``det(mat)`` for a Fraction/int matrix.

    Runs fraction-free Bareiss elimination on the integer matrix obtained by
    clearing denominators.  Returns True iff the determinant is nonzero.
    """
    n = len(mat)
    denoms = [f.denominator if isinstance(f, Fraction) else 1
              for row in mat for f in row]
    scale = lcm(*denoms) if denoms else 1
    a = [[int(f * scale) if isinstance(f, Fraction) else int(f) * scale
          for f in row] for row in mat]
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if piv is None:
                return False
            a[k], a[piv] = a[piv], a[k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return a[n - 1][n - 1] != 0
