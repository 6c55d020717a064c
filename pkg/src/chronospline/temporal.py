"""Temporal Galerkin matrices and their nearly-Toeplitz structure.

For trial splines of degree ``p`` with a zero initial condition and test
splines with a zero final condition on ``N`` uniform intervals of ``[0, T]``,
the three matrices of size ``n = N + p - 1`` are

* ``B``: derivative-derivative inner products (scales like ``1/h``),
* ``C``: derivative-value inner products (scale-free),
* ``M``: value-value inner products (scales like ``h``).

Away from fixed-size corner blocks they are Toeplitz band matrices whose
stencils are second/first/zeroth derivatives of the degree-``2p+1`` cardinal
spline at integer points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact
from .splines import SplineSpace, element_tables

FAMILIES = ("B", "C", "M")

# test hook: the selfcheck harness flips this to verify fault detection
_stencil_sign_flip = False


@dataclass(frozen=True)
class Stencil:
    """Toeplitz band of one temporal family, centered on the first lower
    co-diagonal: ``values[i]`` sits on co-diagonal ``offsets[i]``."""

    family: str
    p: int
    offsets: np.ndarray          # -(p+1) .. p-1
    values: np.ndarray           # floats
    exact_values: tuple          # Fractions, same order

    @property
    def lower_width(self):
        return int(-self.offsets[0])

    @property
    def upper_width(self):
        return int(self.offsets[-1])


def stencil_from_cardinal(p, which):
    """Band stencil of hB, C, or M/h from cardinal-spline derivatives."""
    ex = exact.exact_stencil(p, which)
    offsets = np.arange(-(p + 1), p)
    vals = [ex[o] for o in offsets]
    if _stencil_sign_flip:
        vals = [-v for v in vals]
    return Stencil(family=which, p=p, offsets=offsets,
                   values=np.array([float(v) for v in vals]),
                   exact_values=tuple(vals))


def toeplitz_band(stencil: Stencil, n):
    """Dense n-by-n Toeplitz matrix generated by the stencil."""
    a = np.zeros((n, n))
    for off, v in zip(stencil.offsets, stencil.values):
        if abs(off) < n:
            a += v * np.eye(n, k=off)
    return a


@dataclass(frozen=True)
class BandFamily:
    """Stencil plus the two fixed corner perturbation blocks.

    ``corner_top_left`` and ``corner_bottom_right`` hold the difference
    between the matrix and its Toeplitz extension on 2p-by-2p windows; their
    contents do not depend on the matrix dimension.
    """

    stencil: Stencil
    corner_top_left: np.ndarray
    corner_bottom_right: np.ndarray
    scaling_power_of_h: int

    @property
    def m(self):
        return self.stencil.lower_width

    @property
    def ell(self):
        return self.stencil.upper_width

    def materialize(self, n):
        """Dense n-by-n member of the family (h-scaled normalization)."""
        w = self.corner_top_left.shape[0]
        if n < 2 * w:
            raise ValueError(f"n={n} too small for the {w}x{w} corner blocks")
        a = toeplitz_band(self.stencil, n)
        a[:w, :w] += self.corner_top_left
        a[-w:, -w:] += self.corner_bottom_right
        return a


@dataclass(frozen=True)
class TemporalMatrixSet:
    """Assembled temporal matrices for given (p, N, T); h = T/N.

    ``B_h, C_h, M_h`` carry the physical h-scaling of the bilinear forms;
    ``scaled(which)`` returns the h-free normalizations hB, C, M/h used by
    the structure and conditioning analysis.
    """

    p: int
    N: int
    T: float
    h: float
    B_h: np.ndarray
    C_h: np.ndarray
    M_h: np.ndarray
    B: BandFamily
    C: BandFamily
    M: BandFamily

    @property
    def n(self):
        return self.N + self.p - 1

    def scaled(self, which):
        if which == "B":
            return self.h * self.B_h
        if which == "C":
            return self.C_h.copy()
        if which == "M":
            return self.M_h / self.h
        raise ValueError(f"unknown family {which!r}")

    def family(self, which):
        return {"B": self.B, "C": self.C, "M": self.M}[which]


def assemble_temporal(p, N, T):
    """Assemble B, C, M by Gauss quadrature and extract their band families.

    Requires ``N >= 3p + 1`` so the purely Toeplitz band part is nonempty.
    """
    if p < 1:
        raise ValueError("degree must be at least 1")
    if N < 3 * p + 1:
        raise ValueError(f"N={N} below the structural minimum 3p+1={3 * p + 1}")
    if not T > 0:
        raise ValueError("horizon must be positive")
    n = N + p - 1
    h = T / N
    trial = SplineSpace(degree=p, intervals=N, interval=(0.0, T), trim_start=True)
    tab = element_tables(trial, p + 1, nderiv=1)
    B = np.zeros((n, n))
    C = np.zeros((n, n))
    M = np.zeros((n, n))
    for e in range(N):
        first = tab.first[e]
        w = tab.weights[e]
        val = tab.values[e, 0]      # (nq, p+1)
        der = tab.values[e, 1]
        # local cross blocks: test function index jt = first..first+p (rows
        # keep jt <= n-1), trial index js (columns keep js >= 1)
        bloc = np.einsum("q,qa,qb->ab", w, der, der)
        cloc = np.einsum("q,qa,qb->ab", w, val, der)  # test value, trial derivative
        mloc = np.einsum("q,qa,qb->ab", w, val, val)
        # rows: test index a with global jt = first+a; cols: trial b, js = first+b
        for a in range(p + 1):
            jt = first + a
            if jt > n - 1:
                continue
            for b in range(p + 1):
                js = first + b
                if js < 1:
                    continue
                B[jt, js - 1] += bloc[a, b]
                C[jt, js - 1] += cloc[a, b]
                M[jt, js - 1] += mloc[a, b]
    fams = {}
    for which, mat in (("B", h * B), ("C", C), ("M", M / h)):
        fams[which] = _extract_family(which, p, mat)
    return TemporalMatrixSet(p=p, N=N, T=T, h=h, B_h=B, C_h=C, M_h=M,
                             B=fams["B"], C=fams["C"], M=fams["M"])


def _extract_family(which, p, scaled_mat):
    st = stencil_from_cardinal(p, which)
    n = scaled_mat.shape[0]
    diff = scaled_mat - toeplitz_band(st, n)
    w = 2 * p
    power = {"B": -1, "C": 0, "M": 1}[which]
    return BandFamily(stencil=st,
                      corner_top_left=diff[:w, :w].copy(),
                      corner_bottom_right=diff[-w:, -w:].copy(),
                      scaling_power_of_h=power)


# ---------------------------------------------------------------------------
# structure verification
# ---------------------------------------------------------------------------

@dataclass
class StructureReport:
    p: int
    N: int
    checks: dict
    failures: list

    @property
    def ok(self):
        return not self.failures


def verify_structure(tset: TemporalMatrixSet, tol=1e-13):
    """Check the structural theorems on an assembled set.

    Verifies persymmetry, the Toeplitz interior against the cardinal-spline
    stencil, symmetry/skew-symmetry about the first lower co-diagonal,
    confinement and count (2p^2 - 3) of the corner perturbations, and the
    sign pattern of the outer co-diagonals.  Any violated assertion is
    recorded with the failing index pair.
    """
    p, n = tset.p, tset.n
    checks = {}
    failures = []

    def record(name, ok, detail=""):
        checks[name] = bool(ok)
        if not ok:
            failures.append((name, detail))

    for which in ("B", "C"):
        a = tset.scaled(which)
        # persymmetry: A[i, j] == A[n-1-j, n-1-i]
        diff = a - a[::-1, ::-1].T
        idx = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
        record(f"{which}:persymmetric", np.abs(diff).max() <= tol * max(1.0, np.abs(a).max()),
               f"worst at {idx}")
        # Toeplitz interior equals the stencil
        st = tset.family(which).stencil
        toe = toeplitz_band(st, n)
        interior = slice(2 * p, n - 2 * p)
        d2 = np.abs(a - toe)[interior, :]
        idx2 = np.unravel_index(np.argmax(d2), d2.shape)
        record(f"{which}:toeplitz-interior", d2.max() <= tol,
               f"worst at row {2 * p + idx2[0]}, col {idx2[1]}")
        # corner perturbation confined to the 2p^2-3 admissible cells (p >= 2);
        # the admissible region has exactly that many cells, though a family
        # may leave some of them at their Toeplitz value
        pert = a - toe
        pert_nz = np.argwhere(np.abs(pert) > tol)
        if p == 1:
            record(f"{which}:corner-confined", len(pert_nz) == 0,
                   f"{len(pert_nz)} stray entries")
        else:
            tl = [(i, j) for i, j in pert_nz if i < n // 2]
            br = [(i, j) for i, j in pert_nz if i >= n // 2]
            allowed = _allowed_corner(p)
            stray = [ij for ij in tl if ij not in allowed]
            for i, j in br:
                if (n - 1 - j, n - 1 - i) not in allowed:
                    stray.append((i, j))
            record(f"{which}:corner-confined", not stray, f"stray {stray[:4]}")
            record(f"{which}:corner-region-size", len(allowed) == 2 * p * p - 3,
                   f"region has {len(allowed)} cells")
        # outer co-diagonal signs: C > 0 and B < 0 on the (p-1)th upper
        outer = np.diagonal(a, offset=p - 1)
        if which == "C":
            bad = np.where(outer <= 0)[0]
        else:
            bad = np.where(outer >= 0)[0]
        record(f"{which}:outer-codiagonal-sign", bad.size == 0,
               f"first bad index {bad[:1]}")
        # inner symmetry: about the first lower co-diagonal
        sym = 1.0 if which == "B" else -1.0
        worst = 0.0
        worst_ij = None
        for ell in range(2 * p, n - 2 * p):
            for j in range(0, p):
                lo, hi = a[ell, ell - 1 - j], a[ell, ell - 1 + j]
                d = abs(lo - sym * hi)
                if d > worst:
                    worst, worst_ij = d, (ell, j)
        record(f"{which}:band-symmetry", worst <= tol, f"worst at {worst_ij}")
    # M shares B's structure with its own stencil
    am = tset.scaled("M")
    st = tset.family("M").stencil
    d3 = np.abs(am - toeplitz_band(st, n))[2 * p:n - 2 * p, :]
    record("M:toeplitz-interior", d3.max() <= tol, "")
    record("M:persymmetric",
           np.abs(am - am[::-1, ::-1].T).max() <= tol * max(1.0, np.abs(am).max()), "")
    return StructureReport(p=p, N=tset.N, checks=checks, failures=failures)


def _allowed_corner(p):
    """Top-left index pairs (0-based) that may deviate from the Toeplitz
    extension: first p rows and first p-1 columns of the band, minus the two
    excepted positions (p, 2p-1) and (2p, p-1) in 1-based terms."""
    allowed = set()
    for i in range(p):                      # rows 1..p
        for j in range(i + p):              # inside the band
            allowed.add((i, j))
    for j in range(p - 1):                  # cols 1..p-1
        for i in range(j + p + 2):
            allowed.add((i, j))
    allowed.discard((p - 1, 2 * p - 2))     # (p, 2p-1) in 1-based indexing
    allowed.discard((2 * p - 1, p - 2))     # (2p, p-1)
    return allowed


def rational_determinant_nonzero(which, p, n, cap=128):
    """Exact-rational invertibility oracle for the h-scaled B or C family.

    Assembles the matrix in Fraction arithmetic and runs fraction-free
    elimination.  ``n`` is the matrix dimension (``N = n - p + 1``).
    """
    if which not in ("B", "C"):
        raise ValueError("exact determinant oracle covers the B and C families")
    if n > cap:
        raise ValueError(f"n={n} exceeds the configured cap {cap}")
    N = n - p + 1
    mat = exact.assemble_temporal_exact(p, N, which)
    return exact.bareiss_determinant_nonzero(mat)


def assemble_temporal_exact_matrix(p, N, which):
    """Exact h-scaled matrix as a nested list of Fractions (rational path)."""
    return exact.assemble_temporal_exact(p, N, which)


def displayed_matrix_p2(which, n):
    """The quadratic-case matrices written out in closed form, any size.

    Corner rows plus Toeplitz interior plus the persymmetric mirror; entries
    exact Fractions of the h-free normalization (hB and C).
    """
    if which == "B":
        scale = Fraction(1, 6)
        rows = [[-6, -2], [8, -1, -1], [-1, 6, -2, -1]]
        interior = [-1, -2, 6, -2, -1]
    elif which == "C":
        scale = Fraction(1, 24)
        rows = [[10, 2], [0, 9, 1], [-9, 0, 10, 1]]
        interior = [-1, -10, 0, 10, 1]
    else:
        raise ValueError("closed-form display covers B and C")
    if n < 8:
        raise ValueError("need n >= 8 to place the displayed corners")
    mat = [[Fraction(0)] * n for _ in range(n)]
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            mat[i][j] = scale * v
    for i in range(3, n):
        for k, v in enumerate(interior):
            j = i - 3 + k
            if 0 <= j < n:
                mat[i][j] = scale * v
    # persymmetric closure of the bottom-right corner
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            mat[n - 1 - j][n - 1 - i] = scale * v
    return mat
