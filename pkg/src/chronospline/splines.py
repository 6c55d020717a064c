"""Uniform-knot B-splines, cardinal splines, and Gauss quadrature.

Everything downstream (temporal Galerkin matrices, spatial mass/stiffness,
space-time right-hand sides) reduces to evaluations and inner products of the
basis functions defined here.  The evaluation routines are written so that
they work both with floats and with ``fractions.Fraction`` scalars; the exact
path is what the rational invertibility oracle is built on.

Conventions:

* Knot spans are right-half-open, ``[t_i, t_{i+1})``, with the last span
  closed, so the basis sums to one on the whole closed interval.
* The order-``p`` derivative of a degree-``p`` spline is piecewise constant;
  at an interior knot it is evaluated from the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np


# ---------------------------------------------------------------------------
# cardinal splines
# ---------------------------------------------------------------------------

def eval_cardinal(j, t, deriv_order=0):
    """Evaluate the degree-``j`` cardinal spline (knots ``0..j+1``) at ``t``.

    ``deriv_order`` may not exceed ``j``.  The value is zero outside
    ``[0, j+1]``.  Works with ``float`` and ``Fraction`` arguments alike;
    with a ``Fraction`` argument the result is exact.
    """
    if deriv_order < 0 or deriv_order > j:
        raise ValueError(f"derivative order {deriv_order} not in 0..{j}")
    r = deriv_order
    # Phi_j^(r)(t) = sum_i (-1)^i C(r,i) Phi_{j-r}(t - i)
    acc = 0
    for i in range(r + 1):
        term = _cardinal_value(j - r, t - i)
        if i % 2:
            acc -= comb(r, i) * term
        else:
            acc += comb(r, i) * term
    return acc


def _cardinal_value(j, t):
    if t < 0 or t > j + 1:
        return 0
    if j == 0:
        # right-half-open box; the closed right end belongs to nothing
        return 1 if 0 <= t < 1 else 0
    return (t * _cardinal_value(j - 1, t)
            + (j + 1 - t) * _cardinal_value(j - 1, t - 1)) / j


@lru_cache(maxsize=None)
def cardinal_at_integers(j, deriv_order=0):
    """Exact values ``Phi_j^(r)(k)`` for ``k = 0..j+1`` as Fractions."""
    return tuple(eval_cardinal(j, Fraction(k), deriv_order) for k in range(j + 2))


@dataclass(frozen=True)
class CardinalSpline:
    """The degree-``j`` B-spline on the knots ``0..j+1``.

    Positive on the open support, symmetric about ``(j+1)/2``, and its
    integer translates sum to one.
    """

    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    @property
    def support(self):
        return (0.0, self.degree + 1.0)

    def __call__(self, t, deriv_order=0):
        return eval_cardinal(self.degree, t, deriv_order)

    def at_integers(self, deriv_order=0):
        return cardinal_at_integers(self.degree, deriv_order)


def cardinal_inner(p, r1, r2, shift):
    """Inner product ``\\int Phi_p^(r1)(t + shift) Phi_p^(r2)(t) dt`` over R.

    Computed by Gauss quadrature, exact for the piecewise-polynomial
    integrand (degree at most ``2p``).  Vanishes for ``|shift| > p``.
    """
    if r1 + r2 > 2 * p:
        raise ValueError("combined derivative order exceeds 2p")
    if abs(shift) > p:
        return 0.0
    lo = max(0, -shift)
    hi = min(p + 1, p + 1 - shift)
    rule = gauss_rule(p + 1)
    total = 0.0
    for k in range(lo, hi):
        x, w = rule.mapped(k, k + 1)
        total += float(np.dot(w, [eval_cardinal(p, t + shift, r1)
                                  * eval_cardinal(p, t, r2) for t in x]))
    return total


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int  # exact for polynomials up to this degree

    def mapped(self, a, b):
        """Nodes and weights transported to the interval [a, b]."""
        return a + (b - a) * self.nodes, (b - a) * self.weights


@lru_cache(maxsize=None)
def gauss_rule(npoints):
    """Gauss-Legendre rule with ``npoints`` nodes, exact to degree ``2q-1``."""
    if npoints < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(npoints)
    return QuadratureRule(nodes=(x + 1.0) / 2.0, weights=w / 2.0,
                          order=2 * npoints - 1)


# ---------------------------------------------------------------------------
# spline spaces on uniform meshes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplineSpace:
    """Degree-``p`` splines of regularity ``C^k`` on a uniform mesh.

    With maximal regularity (``k = p - 1``, the default) the dimension is
    ``intervals + degree``; trimming an end removes the single basis function
    that is nonzero there, which imposes a zero initial (resp. final) value.

    ``c0_points`` lists mesh points where the continuity is reduced to C^0
    (knot multiplicity raised to ``p``); they must sit on the mesh.
    """

    degree: int
    intervals: int
    interval: tuple = (0.0, 1.0)
    regularity: int | None = None
    trim_start: bool = False
    trim_end: bool = False
    c0_points: tuple = ()
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p, n_el = self.degree, self.intervals
        if p < 0:
            raise ValueError("degree must be nonnegative")
        if n_el < 1:
            raise ValueError("need at least one interval")
        k = p - 1 if self.regularity is None else self.regularity
        if k > p - 1:
            raise ValueError(f"regularity {k} exceeds degree-1")
        if k < -1:
            raise ValueError("regularity below C^-1 is meaningless")
        object.__setattr__(self, "regularity", k)
        t0, t1 = self.interval
        if not t1 > t0:
            raise ValueError("empty interval")
        h = (t1 - t0) / n_el
        breakpoints = [t0 + i * h for i in range(n_el + 1)]
        c0 = []
        for x in self.c0_points:
            idx = round((x - t0) / h)
            if not (0 < idx < n_el) or abs(breakpoints[idx] - x) > 1e-12 * max(1.0, abs(x)):
                raise ValueError(f"C0 point {x} is not an interior mesh point")
            c0.append(idx)
        knots = [t0] * (p + 1)
        for i in range(1, n_el):
            mult = p if i in c0 else p - k
            knots.extend([breakpoints[i]] * mult)
        knots.extend([t1] * (p + 1))
        object.__setattr__(self, "knots", np.asarray(knots, dtype=float))

    @property
    def mesh_size(self):
        t0, t1 = self.interval
        return (t1 - t0) / self.intervals

    @property
    def full_dimension(self):
        return len(self.knots) - self.degree - 1

    @property
    def dimension(self):
        return self.full_dimension - int(self.trim_start) - int(self.trim_end)

    @property
    def first_index(self):
        """Offset of the first kept basis function in the untrimmed basis."""
        return 1 if self.trim_start else 0

    def greville(self):
        """Greville abscissae of the kept basis functions."""
        p = self.degree
        g = np.array([self.knots[j + 1:j + p + 1].mean() if p else self.knots[j]
                      for j in range(self.full_dimension)])
        return g[self.first_index:self.first_index + self.dimension]

    def breakpoints(self):
        t0, t1 = self.interval
        return np.linspace(t0, t1, self.intervals + 1)


def eval_bspline(space: SplineSpace, index, t, deriv_order=0):
    """Value of the ``deriv_order`` derivative of one kept basis function.

    ``index`` counts the *kept* (trimmed) basis; raising with a clear message
    on out-of-range indices or derivative order above the degree.
    """
    p = space.degree
    if deriv_order > p or deriv_order < 0:
        raise ValueError(f"derivative order {deriv_order} not in 0..{p}")
    if not 0 <= index < space.dimension:
        raise IndexError(f"basis index {index} not in 0..{space.dimension - 1}")
    j = index + space.first_index
    return bspline_one(space.knots, p, j, t, deriv_order)


def bspline_one(knots, p, j, x, r=0):
    """Cox-de Boor evaluation of a single B-spline basis function.

    Scalar-generic: with ``Fraction`` knots and argument the result is exact.
    The order-``p`` derivative at an interior knot is the left limit.
    """
    knots = list(knots)
    if r == p and p > 0 and knots[p] < x < knots[-p - 1]:
        for t in knots[p + 1:-p - 1]:
            if x == t:
                x = _left_of(knots, x)
                break
    return _cox_de_boor(tuple(knots), p, j, x, r)


def _left_of(knots, x):
    # nudge into the previous span; used only for top-order derivatives,
    # which are piecewise constant, so any interior point of the span works
    prev = max(t for t in knots if t < x)
    if isinstance(x, Fraction):
        return (prev + x) / 2
    return prev + (x - prev) * 0.5


def _cox_de_boor(knots, p, j, x, r):
    if r > 0:
        left = knots[j + p] - knots[j]
        right = knots[j + p + 1] - knots[j + 1]
        acc = 0
        if left != 0:
            acc += _cox_de_boor(knots, p - 1, j, x, r - 1) * p / left
        if right != 0:
            acc -= _cox_de_boor(knots, p - 1, j + 1, x, r - 1) * p / right
        return acc
    if p == 0:
        last = len(knots) - 1
        if knots[j] <= x < knots[j + 1]:
            return 1
        # closed right end of the global interval
        if x == knots[-1] and knots[j + 1] == knots[-1] and knots[j] < knots[j + 1] \
                and j + 1 <= last and all(knots[i] == knots[-1] for i in range(j + 1, last + 1)):
            return 1
        return 0
    acc = 0
    left = knots[j + p] - knots[j]
    if left != 0:
        acc += (x - knots[j]) / left * _cox_de_boor(knots, p - 1, j, x, 0)
    right = knots[j + p + 1] - knots[j + 1]
    if right != 0:
        acc += (knots[j + p + 1] - x) / right * _cox_de_boor(knots, p - 1, j + 1, x, 0)
    return acc


# ---------------------------------------------------------------------------
# fast tabulated evaluation (float path used by all assembly loops)
# ---------------------------------------------------------------------------

def find_span(knots, p, x):
    """Index ``i`` with ``knots[i] <= x < knots[i+1]`` (last span closed)."""
    n = len(knots) - p - 1
    if x >= knots[n]:
        i = n - 1
        while knots[i] == knots[i + 1]:
            i -= 1
        return i
    i = int(np.searchsorted(knots, x, side="right") - 1)
    return max(i, p)


def basis_all(knots, p, x, nderiv=0):
    """All ``p+1`` basis functions (and derivatives) that live at ``x``.

    Returns ``(first, D)`` where ``D[r, a]`` is the ``r``-th derivative of
    basis function ``first + a`` at ``x``.  This is the standard banded
    de Boor evaluation, the workhorse behind every quadrature table.
    """
    span = find_span(knots, p, x)
    ndu = np.zeros((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for k in range(1, p + 1):
        left[k] = x - knots[span + 1 - k]
        right[k] = knots[span + k] - x
        saved = 0.0
        for a in range(k):
            denom = right[a + 1] + left[k - a]
            ndu[k, a] = denom
            temp = ndu[a, k - 1] / denom
            ndu[a, k] = saved + right[a + 1] * temp
            saved = left[k - a] * temp
        ndu[k, k] = saved
    D = np.zeros((nderiv + 1, p + 1))
    D[0] = ndu[:, p]
    if nderiv:
        a2 = np.zeros((2, p + 1))
        for a in range(p + 1):
            a2[:] = 0.0
            a2[0, 0] = 1.0
            s1, s2 = 0, 1
            for k in range(1, nderiv + 1):
                d = 0.0
                rk, pk = a - k, p - k
                if a >= k:
                    a2[s2, 0] = a2[s1, 0] / ndu[pk + 1, rk]
                    d = a2[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = k - 1 if a - 1 <= pk else p - a
                for j in range(j1, j2 + 1):
                    a2[s2, j] = (a2[s1, j] - a2[s1, j - 1]) / ndu[pk + 1, rk + j]
                    d += a2[s2, j] * ndu[rk + j, pk]
                if a <= pk:
                    a2[s2, k] = -a2[s1, k - 1] / ndu[pk + 1, a]
                    d += a2[s2, k] * ndu[a, pk]
                D[k, a] = d
                s1, s2 = s2, s1
        fac = float(p)
        for k in range(1, nderiv + 1):
            D[k] *= fac
            fac *= p - k
    return span - p, D


@dataclass(frozen=True)
class ElementTables:
    """Per-element quadrature tables for a spline space.

    ``values[e, r, q, a]`` is the r-th derivative of local basis function
    ``a`` at the q-th Gauss point of element ``e``; ``first[e]`` maps the
    local index to the untrimmed global one.
    """

    points: np.ndarray    # (n_el, nq)
    weights: np.ndarray   # (n_el, nq)
    first: np.ndarray     # (n_el,)
    values: np.ndarray    # (n_el, nderiv+1, nq, p+1)


def element_tables(space: SplineSpace, npoints, nderiv=1):
    p = space.degree
    bp = space.breakpoints()
    rule = gauss_rule(npoints)
    n_el = space.intervals
    nq = npoints
    pts = np.empty((n_el, nq))
    wts = np.empty((n_el, nq))
    first = np.empty(n_el, dtype=int)
    vals = np.empty((n_el, nderiv + 1, nq, p + 1))
    for e in range(n_el):
        x, w = rule.mapped(bp[e], bp[e + 1])
        pts[e], wts[e] = x, w
        for q in range(nq):
            f, D = basis_all(space.knots, p, x[q], nderiv)
            vals[e, :, q, :] = D
        first[e] = f
    return ElementTables(points=pts, weights=wts, first=first, values=vals)
