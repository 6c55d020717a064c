"""Spatial spline discretization: mass, stiffness, and Robin boundary mass.

Supports 1D intervals and 2D tensor-product boxes with per-face boundary
conditions (homogeneous Dirichlet by basis trimming, Neumann, Robin with
impedance, periodic by cardinal wrap-around), piecewise-constant wave speed
on axis-aligned regions, and optional C0 continuity lines in space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .splines import (
    SplineSpace,
    basis_all,
    element_tables,
    eval_cardinal,
    gauss_rule,
)

FACES_1D = ("left", "right")
FACES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str                      # dirichlet0 | neumann | robin | periodic
    data: object = None            # g_N or g_R as callable of (x[, y], t)
    impedance: float | None = None  # Robin vartheta > 0

    def __post_init__(self):
        if self.kind not in ("dirichlet0", "neumann", "robin", "periodic"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "robin":
            if self.impedance is None or not self.impedance > 0:
                raise ValueError("Robin condition needs a positive impedance")


DIRICHLET = BoundaryCondition("dirichlet0")
NEUMANN0 = BoundaryCondition("neumann")
PERIODIC = BoundaryCondition("periodic")


@dataclass(frozen=True)
class SpeedRegion:
    """Axis-aligned region with constant wave speed."""

    bounds: tuple   # ((x0, x1),) in 1D, ((x0, x1), (y0, y1)) in 2D
    speed: float

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("wave speed must be positive")


class Axis:
    """One coordinate direction: spline space, trimming, quadrature tables."""

    def __init__(self, degree, cells, interval, bc_lo, bc_hi, c0_points=()):
        if (bc_lo.kind == "periodic") != (bc_hi.kind == "periodic"):
            raise ValueError("periodic faces come in opposite pairs")
        self.degree = degree
        self.cells = cells
        self.interval = interval
        self.bc_lo, self.bc_hi = bc_lo, bc_hi
        self.periodic = bc_lo.kind == "periodic"
        self.h = (interval[1] - interval[0]) / cells
        if self.periodic:
            if c0_points:
                raise ValueError("C0 lines are not supported on periodic axes")
            if cells < degree + 2:
                raise ValueError("periodic axis needs more cells than the degree")
            self.space = None
            self.ndof = cells
        else:
            self.space = SplineSpace(
                degree=degree, intervals=cells, interval=interval,
                trim_start=bc_lo.kind == "dirichlet0",
                trim_end=bc_hi.kind == "dirichlet0",
                c0_points=tuple(c0_points))
            self.ndof = self.space.dimension

    def breakpoints(self):
        a, b = self.interval
        return np.linspace(a, b, self.cells + 1)

    def tables(self, npoints, nderiv=1):
        """Element quadrature tables with *kept* global indices.

        Returns (points, weights, dofmap, values) where dofmap[e, a] is the
        kept global index of local function a on element e (vectorized
        scatter target), and values[e, r, q, a] the basis derivatives.
        """
        p = self.degree
        if not self.periodic:
            tab = element_tables(self.space, npoints, nderiv)
            first = self.space.first_index
            dof = np.empty((self.cells, p + 1), dtype=int)
            vals = tab.values.copy()
            for e in range(self.cells):
                for a in range(p + 1):
                    g = tab.first[e] + a - first
                    if 0 <= g < self.ndof:
                        dof[e, a] = g
                    else:
                        dof[e, a] = -1  # trimmed away
                        vals[e, :, :, a] = 0.0
            return tab.points, tab.weights, dof, vals
        # periodic: translated cardinal splines, identical on every cell
        rule = gauss_rule(npoints)
        bp = self.breakpoints()
        pts = np.empty((self.cells, npoints))
        wts = np.empty((self.cells, npoints))
        dof = np.empty((self.cells, p + 1), dtype=int)
        vals = np.empty((self.cells, nderiv + 1, npoints, p + 1))
        local = np.empty((nderiv + 1, npoints, p + 1))
        for q, u in enumerate(rule.nodes):
            for a in range(p + 1):
                # basis index i = e - p + a is the translate Phi_p(u - i + e)
                for r in range(nderiv + 1):
                    local[r, q, a] = eval_cardinal(p, u + p - a, r)
        for e in range(self.cells):
            x, w = rule.mapped(bp[e], bp[e + 1])
            pts[e], wts[e] = x, w
            for r in range(nderiv + 1):
                vals[e, r] = local[r] / self.h**r
            for a in range(p + 1):
                dof[e, a] = (e - p + a) % self.cells
        return pts, wts, dof, vals

    def basis_at(self, x, deriv=0):
        """Dense (len(x), ndof) matrix of kept basis values at points x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((x.size, self.ndof))
        p = self.degree
        if not self.periodic:
            for k, xv in enumerate(x):
                first, D = basis_all(self.space.knots, p, xv, deriv)
                for a in range(p + 1):
                    g = first + a - self.space.first_index
                    if 0 <= g < self.ndof:
                        out[k, g] = D[deriv, a]
            return out
        a0, _ = self.interval
        for k, xv in enumerate(x):
            u = (xv - a0) / self.h
            e = int(np.floor(u))
            e = min(max(e, 0), self.cells - 1) if u != self.cells else self.cells - 1
            # handle exact right endpoint wrap
            e = e % self.cells
            for a in range(p + 1):
                i = (e - p + a) % self.cells
                out[k, i] += eval_cardinal(p, u - (e - p + a), deriv) / self.h**deriv
        return out

    def boundary_values(self, side):
        """Kept basis values at one endpoint (for Robin face masses)."""
        a, b = self.interval
        x = a if side == "lo" else b
        return self.basis_at(np.array([x]))[0]


@dataclass
class SpatialMatrices:
    """Sparse mass, stiffness (with c^2), Robin mass, and unit stiffness."""

    M: sp.csr_matrix
    K: sp.csr_matrix
    M_R: sp.csr_matrix
    K_unit: sp.csr_matrix


class SpatialDiscretization:
    """Tensor-product spline space on a 1D interval or a 2D box."""

    def __init__(self, degree, cells, box, bcs, regions=None, c0_points=(),
                 quad_points=None):
        box = tuple(tuple(map(float, iv)) for iv in box)
        self.dim = len(box)
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D boxes are supported")
        faces = FACES_1D if self.dim == 1 else FACES_2D
        missing = [f for f in faces if f not in bcs]
        if missing:
            raise ValueError(f"missing boundary conditions for {missing}")
        self.bcs = dict(bcs)
        cells = (cells,) * self.dim if np.isscalar(cells) else tuple(cells)
        self.box = box
        self.degree = degree
        self.quad_points = quad_points or degree + 2
        c0x = tuple(c0_points) if self.dim == 1 else tuple(c0_points or ())
        self.axes = [Axis(degree, cells[0], box[0], bcs["left"], bcs["right"],
                          c0_points=c0x)]
        if self.dim == 2:
            self.axes.append(Axis(degree, cells[1], box[1],
                                  bcs["bottom"], bcs["top"]))
        if regions is None:
            regions = [SpeedRegion(bounds=box, speed=1.0)]
        self.regions = [r if isinstance(r, SpeedRegion) else SpeedRegion(*r)
                        for r in regions]
        self._validate_regions()

    @property
    def ndof(self):
        n = 1
        for ax in self.axes:
            n *= ax.ndof
        return n

    def _validate_regions(self):
        for r in self.regions:
            if len(r.bounds) != self.dim:
                raise ValueError("region dimension mismatch")
            for d, (lo, hi) in enumerate(r.bounds):
                ax = self.axes[d]
                for edge in (lo, hi):
                    idx = (edge - ax.interval[0]) / ax.h
                    if abs(idx - round(idx)) > 1e-9:
                        raise ValueError(
                            f"region edge {edge} is not on the mesh of axis {d}")

    def speed_at(self, point):
        for r in self.regions:
            inside = all(lo - 1e-12 <= x <= hi + 1e-12
                         for x, (lo, hi) in zip(point, r.bounds))
            if inside:
                return r.speed
        raise ValueError(f"no speed region covers {point}")

    def _cell_range(self, axis_idx, lo, hi):
        ax = self.axes[axis_idx]
        i0 = int(round((lo - ax.interval[0]) / ax.h))
        i1 = int(round((hi - ax.interval[0]) / ax.h))
        return i0, i1

    def _axis_partial(self, axis_idx, cell_lo, cell_hi, da, db):
        """1D matrix of basis-derivative products over a cell range."""
        ax = self.axes[axis_idx]
        pts, wts, dof, vals = ax.tables(self.quad_points, max(da, db, 1))
        n = ax.ndof
        rows, cols, data = [], [], []
        p = ax.degree
        for e in range(cell_lo, cell_hi):
            loc = np.einsum("q,qa,qb->ab", wts[e], vals[e, da], vals[e, db])
            for a in range(p + 1):
                ga = dof[e, a]
                if ga < 0:
                    continue
                for b in range(p + 1):
                    gb = dof[e, b]
                    if gb < 0:
                        continue
                    rows.append(ga)
                    cols.append(gb)
                    data.append(loc[a, b])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def assemble(self):
        """Mass, stiffness (speed-weighted), Robin mass, unit stiffness."""
        if self.dim == 1:
            return self._assemble_1d()
        return self._assemble_2d()

    def _assemble_1d(self):
        ax = self.axes[0]
        m = self._axis_partial(0, 0, ax.cells, 0, 0)
        k_unit = self._axis_partial(0, 0, ax.cells, 1, 1)
        k = sp.csr_matrix((ax.ndof, ax.ndof))
        for r in self.regions:
            i0, i1 = self._cell_range(0, *r.bounds[0])
            k = k + r.speed**2 * self._axis_partial(0, i0, i1, 1, 1)
        m_r = sp.csr_matrix((ax.ndof, ax.ndof))
        for side, bc in (("lo", self.bcs["left"]), ("hi", self.bcs["right"])):
            if bc.kind != "robin":
                continue
            x = ax.interval[0] if side == "lo" else ax.interval[1]
            c = self.speed_at((x,))
            v = ax.boundary_values(side)
            m_r = m_r + bc.impedance * c * sp.csr_matrix(np.outer(v, v))
        return SpatialMatrices(M=m.tocsr(), K=k.tocsr(), M_R=m_r.tocsr(),
                               K_unit=k_unit.tocsr())

    def _assemble_2d(self):
        axx, axy = self.axes
        mx = self._axis_partial(0, 0, axx.cells, 0, 0)
        my = self._axis_partial(1, 0, axy.cells, 0, 0)
        kx_unit = self._axis_partial(0, 0, axx.cells, 1, 1)
        ky_unit = self._axis_partial(1, 0, axy.cells, 1, 1)
        m2 = sp.kron(my, mx, format="csr")
        k2_unit = (sp.kron(my, kx_unit) + sp.kron(ky_unit, mx)).tocsr()
        k2 = sp.csr_matrix((self.ndof, self.ndof))
        for r in self.regions:
            ix = self._cell_range(0, *r.bounds[0])
            iy = self._cell_range(1, *r.bounds[1])
            mx_r = self._axis_partial(0, ix[0], ix[1], 0, 0)
            kx_r = self._axis_partial(0, ix[0], ix[1], 1, 1)
            my_r = self._axis_partial(1, iy[0], iy[1], 0, 0)
            ky_r = self._axis_partial(1, iy[0], iy[1], 1, 1)
            k2 = k2 + r.speed**2 * (sp.kron(my_r, kx_r) + sp.kron(ky_r, mx_r))
        m_r2 = sp.csr_matrix((self.ndof, self.ndof))
        for face in FACES_2D:
            bc = self.bcs[face]
            if bc.kind != "robin":
                continue
            m_r2 = m_r2 + self._robin_face_mass(face, bc)
        return SpatialMatrices(M=m2, K=k2.tocsr(), M_R=m_r2.tocsr(),
                               K_unit=k2_unit)

    def _robin_face_mass(self, face, bc):
        axx, axy = self.axes
        if face in ("left", "right"):
            side = "lo" if face == "left" else "hi"
            v = axx.boundary_values(side)
            point_mat = sp.csr_matrix(np.outer(v, v))
            x = axx.interval[0] if face == "left" else axx.interval[1]
            line = self._weighted_line_mass(1, lambda y: self.speed_at((x, y)))
            return bc.impedance * sp.kron(line, point_mat, format="csr")
        side = "lo" if face == "bottom" else "hi"
        v = axy.boundary_values(side)
        point_mat = sp.csr_matrix(np.outer(v, v))
        y = axy.interval[0] if face == "bottom" else axy.interval[1]
        line = self._weighted_line_mass(0, lambda x: self.speed_at((x, y)))
        return bc.impedance * sp.kron(point_mat, line, format="csr")

    def _weighted_line_mass(self, axis_idx, weight):
        ax = self.axes[axis_idx]
        pts, wts, dof, vals = ax.tables(self.quad_points, 1)
        n = ax.ndof
        out = np.zeros((n, n))
        p = ax.degree
        for e in range(ax.cells):
            wq = wts[e] * np.array([weight(x) for x in pts[e]])
            loc = np.einsum("q,qa,qb->ab", wq, vals[e, 0], vals[e, 0])
            for a in range(p + 1):
                ga = dof[e, a]
                if ga < 0:
                    continue
                for b in range(p + 1):
                    gb = dof[e, b]
                    if gb >= 0:
                        out[ga, gb] += loc[a, b]
        return sp.csr_matrix(out)

    def load_vector(self, f):
        """``(f, psi_m)`` for a callable f of the space point."""
        if self.dim == 1:
            ax = self.axes[0]
            pts, wts, dof, vals = ax.tables(self.quad_points, 1)
            out = np.zeros(ax.ndof)
            for e in range(ax.cells):
                fq = np.array([f(x) for x in pts[e]]) * wts[e]
                loc = fq @ vals[e, 0]
                for a in range(ax.degree + 1):
                    if dof[e, a] >= 0:
                        out[dof[e, a]] += loc[a]
            return out
        axx, axy = self.axes
        px, wx, dx, vx = axx.tables(self.quad_points, 1)
        py, wy, dy, vy = axy.tables(self.quad_points, 1)
        out = np.zeros((axx.ndof, axy.ndof))
        for ey in range(axy.cells):
            for ex in range(axx.cells):
                fq = np.array([[f(x, y) for y in py[ey]] for x in px[ex]])
                fq *= np.outer(wx[ex], wy[ey])
                loc = np.einsum("qr,qa,rb->ab", fq, vx[ex, 0], vy[ey, 0])
                for a in range(axx.degree + 1):
                    ga = dx[ex, a]
                    if ga < 0:
                        continue
                    for b in range(axy.degree + 1):
                        gb = dy[ey, b]
                        if gb >= 0:
                            out[ga, gb] += loc[a, b]
        return out.reshape(-1, order="F")  # x fastest

    def l2_projection(self, f, mass=None):
        """Coefficients of the L2 projection of the callable ``f``."""
        if mass is None:
            mass = self.assemble().M
        rhs = self.load_vector(f)
        from scipy.sparse.linalg import spsolve
        return spsolve(mass.tocsc(), rhs)

    def basis_matrix(self, points_per_dim, deriv=0):
        """Evaluation operator on a tensor grid of points.

        ``deriv`` is an int (1D) or tuple per dimension (2D).  Returns a
        dense matrix mapping coefficients (x fastest) to point values
        (x fastest on the output grid).
        """
        if self.dim == 1:
            return self.axes[0].basis_at(points_per_dim, deriv)
        dx, dy = deriv if isinstance(deriv, tuple) else (deriv, deriv)
        bx = self.axes[0].basis_at(points_per_dim[0], dx)
        by = self.axes[1].basis_at(points_per_dim[1], dy)
        return np.kron(by, bx)


def assemble_spatial(discretization: SpatialDiscretization):
    """Mass, stiffness, Robin mass (and unit stiffness) of a discretization."""
    return discretization.assemble()
