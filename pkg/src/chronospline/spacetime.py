"""Coupled space-time system and its Kronecker-structured direct solver.

The discrete system for coefficient matrices U, V (space index fastest) is

    (B (x) M) U + (C (x) M) V           = G1,
    (-C (x) K + B (x) M_R) U + (B (x) M) V = G2,

with temporal matrices B, C and spatial mass/stiffness/Robin-mass M, K, M_R.
G1 is zero for zero initial data; nonzero initial data enter by fixing the
coefficient of the first temporal basis function (the only one alive at
t = 0) to spatial projections of U0 and V0 and moving the known column to
the right-hand side.

The fast path eliminates V, applies the complex Schur decomposition of
B^-1 C, and back-substitutes a block upper-triangular system with one sparse
spatial factorization per time index.  A dense monolithic Kronecker solve of
the same system is kept as the correctness oracle for toy sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .ode import SingularSystemError, complex_schur
from .spatial import SpatialDiscretization
from .splines import SplineSpace, basis_all, element_tables
from .temporal import assemble_temporal


@dataclass(frozen=True)
class SpaceTimeProblem:
    """Wave problem data on (box) x (0, T).

    ``source`` may be None, a callable ``F(x[, y], t)``, or a list of
    separable terms ``(f_space, f_time)`` with ``f_space`` a callable of the
    space point and ``f_time`` of t.  ``U0``/``V0`` are callables for the
    initial position and velocity (None means zero).
    """

    spatial: SpatialDiscretization
    p: int
    nt: int
    T: float
    source: object = None
    U0: object = None
    V0: object = None

    def __post_init__(self):
        if self.nt < 3 * self.p + 1:
            raise ValueError("need nt >= 3p+1 time intervals")
        if self.p != self.spatial.degree:
            raise ValueError("space and time degrees are tied together")

    @property
    def n_time(self):
        return self.nt + self.p - 1

    @property
    def ht(self):
        return self.T / self.nt

    def trial_time_space(self):
        return SplineSpace(degree=self.p, intervals=self.nt,
                           interval=(0.0, self.T), trim_start=True)

    def test_time_space(self):
        return SplineSpace(degree=self.p, intervals=self.nt,
                           interval=(0.0, self.T), trim_end=True)


@dataclass
class SpaceTimeSolution:
    problem: SpaceTimeProblem
    U: np.ndarray          # (ndof_space, n_time)
    V: np.ndarray
    lift_u0: np.ndarray    # coefficient of the first (untrimmed) time basis
    lift_v0: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def time_basis(self, times, deriv=0):
        """(len(times), n_time) values of the kept trial time functions."""
        space = self.problem.trial_time_space()
        p = self.problem.p
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.zeros((times.size, self.problem.n_time))
        for k, tv in enumerate(times):
            first, D = basis_all(space.knots, p, tv, deriv)
            for a in range(p + 1):
                g = first + a - 1
                if 0 <= g < self.problem.n_time:
                    out[k, g] = D[deriv, a]
        return out

    def lift_time_profile(self, times, deriv=0):
        """Value of the first untrimmed time basis function phi_0."""
        space = SplineSpace(degree=self.problem.p, intervals=self.problem.nt,
                            interval=(0.0, self.problem.T))
        p = self.problem.p
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.zeros(times.size)
        for k, tv in enumerate(times):
            first, D = basis_all(space.knots, p, tv, deriv)
            for a in range(p + 1):
                if first + a == 0:
                    out[k] = D[deriv, a]
        return out

    def spatial_coefficients(self, times, which="U", time_deriv=0):
        """(ndof_space, len(times)) spatial coefficient vectors at times."""
        bt = self.time_basis(times, time_deriv)
        coeff = self.U if which == "U" else self.V
        lift = self.lift_u0 if which == "U" else self.lift_v0
        vals = coeff @ bt.T
        if lift is not None and np.any(lift):
            vals = vals + np.outer(lift, self.lift_time_profile(times, time_deriv))
        return vals


def _temporal_load(problem, f_time, derivative_test=True):
    """Time-direction load vector over the final-trimmed test basis."""
    p, nt = problem.p, problem.nt
    test = problem.test_time_space()
    tab = element_tables(test, p + 2, nderiv=1)
    out = np.zeros(problem.n_time)
    r = 1 if derivative_test else 0
    for e in range(nt):
        fq = np.array([f_time(t) for t in tab.points[e]]) * tab.weights[e]
        loc = fq @ tab.values[e, r]
        for a in range(p + 1):
            g = tab.first[e] + a
            if g < problem.n_time:
                out[g] += loc[a]
    return out


def _temporal_lift_columns(problem):
    """(d/dt phi_0, d/dt phi_{l-1}) and (d/dt phi_0, phi_{l-1}) columns."""
    p, nt, T = problem.p, problem.nt, problem.T
    full = SplineSpace(degree=p, intervals=nt, interval=(0.0, T))
    tab = element_tables(full, p + 1, nderiv=1)
    n = problem.n_time
    b0 = np.zeros(n)
    c0 = np.zeros(n)
    for e in range(min(p + 1, nt)):  # phi_0 lives on the first p+1 cells
        val = tab.values[e, 0]
        der = tab.values[e, 1]
        first = tab.first[e]
        if first > 0:
            continue
        a0 = -first  # local index of phi_0
        for b in range(p + 1):
            g = first + b
            if 0 <= g < n:  # test functions phi_0 .. phi_{n-1}
                b0[g] += np.einsum("q,q,q->", tab.weights[e], der[:, a0], der[:, b])
                c0[g] += np.einsum("q,q,q->", tab.weights[e], val[:, b], der[:, a0])
    return b0, c0


def _source_vector(problem):
    """Space-time load (F, d/dt Psi) as an (ndof, n_time) array."""
    sd = problem.spatial
    n_time = problem.n_time
    out = np.zeros((sd.ndof, n_time))
    src = problem.source
    if src is None:
        return out
    if isinstance(src, list):
        for f_space, f_time in src:
            out += np.outer(sd.load_vector(f_space),
                            _temporal_load(problem, f_time))
        return out
    # general callable: tensor quadrature element by element
    tspace = problem.test_time_space()
    ttab = element_tables(tspace, problem.p + 2, nderiv=1)
    p = problem.p
    if sd.dim == 1:
        ax = sd.axes[0]
        px, wx, dx, vx = ax.tables(sd.quad_points, 1)
        for et in range(problem.nt):
            tq, twq, tder = ttab.points[et], ttab.weights[et], ttab.values[et, 1]
            for ex in range(ax.cells):
                fq = np.array([[src(x, t) for t in tq] for x in px[ex]])
                fq *= np.outer(wx[ex], twq)
                loc = np.einsum("qr,qa,rb->ab", fq, vx[ex, 0], tder)
                for a in range(p + 1):
                    ga = dx[ex, a]
                    if ga < 0:
                        continue
                    for b in range(p + 1):
                        gt = ttab.first[et] + b
                        if gt < n_time:
                            out[ga, gt] += loc[a, b]
        return out
    axx, axy = sd.axes
    px, wx, dxm, vx = axx.tables(sd.quad_points, 1)
    py, wy, dym, vy = axy.tables(sd.quad_points, 1)
    for et in range(problem.nt):
        tq, twq, tder = ttab.points[et], ttab.weights[et], ttab.values[et, 1]
        for ey in range(axy.cells):
            for ex in range(axx.cells):
                fq = np.array([[[src(x, y, t) for t in tq]
                                for y in py[ey]] for x in px[ex]])
                fq *= wx[ex][:, None, None] * wy[ey][None, :, None] * twq[None, None, :]
                loc = np.einsum("qrs,qa,rb,sc->abc", fq, vx[ex, 0], vy[ey, 0], tder)
                for a in range(p + 1):
                    ga = dxm[ex, a]
                    if ga < 0:
                        continue
                    for b in range(p + 1):
                        gb = dym[ey, b]
                        if gb < 0:
                            continue
                        row = ga + axx.ndof * gb
                        for cc in range(p + 1):
                            gt = ttab.first[et] + cc
                            if gt < n_time:
                                out[row, gt] += loc[a, b, cc]
    return out


def _boundary_vector(problem):
    """Neumann/Robin data tested against d/dt Psi (zero-data faces skip)."""
    sd = problem.spatial
    out = np.zeros((sd.ndof, problem.n_time))
    for face, bc in sd.bcs.items():
        if bc.kind not in ("neumann", "robin") or bc.data is None:
            continue
        g = bc.data
        if sd.dim == 1:
            ax = sd.axes[0]
            x_e = ax.interval[0] if face == "left" else ax.interval[1]
            psi = ax.basis_at(np.array([x_e]))[0]
            data_t = _temporal_load(problem, lambda t: g(x_e, t))
            out += np.outer(psi, data_t)
        else:
            out += _face_data_2d(problem, face, g)
    return out


def _face_data_2d(problem, face, g):
    sd = problem.spatial
    axx, axy = sd.axes
    n_time = problem.n_time
    out = np.zeros((sd.ndof, n_time))
    tspace = problem.test_time_space()
    ttab = element_tables(tspace, problem.p + 2, nderiv=1)
    p = problem.p
    if face in ("left", "right"):
        x_e = axx.interval[0] if face == "left" else axx.interval[1]
        psi_pt = axx.basis_at(np.array([x_e]))[0]
        line_ax, line_fixed = axy, lambda s, t: g(x_e, s, t)
        def row_of(gl, gp):
            return gp + axx.ndof * gl
        psi_point = psi_pt
    else:
        y_e = axy.interval[0] if face == "bottom" else axy.interval[1]
        psi_pt = axy.basis_at(np.array([y_e]))[0]
        line_ax, line_fixed = axx, lambda s, t: g(s, y_e, t)
        def row_of(gl, gp):
            return gl + axx.ndof * gp
        psi_point = psi_pt
    ps, ws, ds, vs = line_ax.tables(sd.quad_points, 1)
    for et in range(problem.nt):
        tq, twq, tder = ttab.points[et], ttab.weights[et], ttab.values[et, 1]
        for el in range(line_ax.cells):
            fq = np.array([[line_fixed(s, t) for t in tq] for s in ps[el]])
            fq *= np.outer(ws[el], twq)
            loc = np.einsum("qr,qa,rb->ab", fq, vs[el, 0], tder)
            for a in range(p + 1):
                gl = ds[el, a]
                if gl < 0:
                    continue
                for b in range(p + 1):
                    gt = ttab.first[et] + b
                    if gt >= n_time:
                        continue
                    for gp in np.nonzero(psi_point)[0]:
                        out[row_of(gl, gp), gt] += psi_point[gp] * loc[a, b]
    return out


@dataclass
class AssembledSystem:
    problem: SpaceTimeProblem
    B: np.ndarray
    C: np.ndarray
    M: sp.csr_matrix
    K: sp.csr_matrix
    M_R: sp.csr_matrix
    K_unit: sp.csr_matrix
    G1: np.ndarray
    G2: np.ndarray
    lift_u0: np.ndarray
    lift_v0: np.ndarray


def assemble_system(problem: SpaceTimeProblem):
    sd = problem.spatial
    mats = sd.assemble()
    ts = assemble_temporal(problem.p, problem.nt, problem.T)
    b, c = ts.B_h, ts.C_h
    g2 = _source_vector(problem) + _boundary_vector(problem)
    g1 = np.zeros_like(g2)
    u0 = np.zeros(sd.ndof)
    v0 = np.zeros(sd.ndof)
    if problem.U0 is not None or problem.V0 is not None:
        if problem.U0 is not None:
            u0 = sd.l2_projection(problem.U0, mass=mats.M)
        if problem.V0 is not None:
            v0 = sd.l2_projection(problem.V0, mass=mats.M)
        b0, c0 = _temporal_lift_columns(problem)
        # integrating the value-derivative pairing by parts in time leaves a
        # t = 0 boundary term on the first test function (the only one alive
        # there): the lift columns are -(c0 + e1) alongside -b0
        e1 = np.zeros(problem.n_time)
        e1[0] = 1.0
        mu0 = mats.M @ u0
        mv0 = mats.M @ v0
        g1 -= np.outer(mu0, b0) + np.outer(mv0, c0 + e1)
        g2 -= np.outer(mats.M @ v0, b0)
        g2 += np.outer(mats.K @ u0, c0 + e1)
        if mats.M_R.nnz:
            g2 -= np.outer(mats.M_R @ u0, b0)
    return AssembledSystem(problem=problem, B=b, C=c, M=mats.M, K=mats.K,
                           M_R=mats.M_R, K_unit=mats.K_unit, G1=g1, G2=g2,
                           lift_u0=u0, lift_v0=v0)


def _estimate_mu_max(system, steps=20, seed=0):
    """Largest generalized eigenvalue of (K, M) by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(system.M.shape[0])
    x /= np.linalg.norm(x)
    solve_m = spla.factorized(system.M.tocsc())
    lam = 0.0
    for _ in range(steps):
        y = solve_m(system.K @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        x = y / nrm
        lam = float(x @ (system.K @ x)) / float(x @ (system.M @ x))
    return lam


def solve_space_time(problem: SpaceTimeProblem, method="kronecker"):
    """Solve the coupled system; ``method`` kronecker (fast) or monolithic.

    The fast path runs: temporal Schur decomposition, a temporal solve per
    spatial dof, the unitary similarity, block upper-triangular back
    substitution with one sparse spatial factorization per time index, the
    inverse similarity, and the final temporal solve recovering V.
    """
    system = assemble_system(problem)
    if method == "monolithic":
        u, v = _solve_monolithic(system)
    elif method == "kronecker":
        u, v = _solve_kronecker(system)
    else:
        raise ValueError(f"unknown method {method!r}")
    diag = {
        "method": method,
        "rho_effective": _estimate_mu_max(system) * problem.ht ** 2,
    }
    return SpaceTimeSolution(problem=problem, U=u, V=v,
                             lift_u0=system.lift_u0, lift_v0=system.lift_v0,
                             diagnostics=diag)


def _solve_kronecker(system: AssembledSystem):
    b, c = system.B, system.C
    m, k, m_r = system.M, system.K, system.M_R
    g1, g2 = system.G1, system.G2
    n_time = b.shape[0]
    try:
        t1 = np.linalg.solve(b, c)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(f"temporal B factorization failed: {err}") from err
    dec = complex_schur(t1)
    q, r = dec.Q, dec.R
    try:
        rinv = scipy.linalg.solve_triangular(r, np.eye(n_time, dtype=complex))
    except scipy.linalg.LinAlgError as err:
        raise SingularSystemError(f"triangular factor singular: {err}") from err
    # F_hat = G2 - (B C^-1 (x) I) G1
    fhat = g2.astype(complex)
    if np.any(g1):
        z = np.linalg.solve(c, g1.T).T      # (C^-T applied from the right)
        fhat = fhat - z @ b.T
    # step 2: (B (x) I) Y = F_hat
    y = np.linalg.solve(b.astype(complex), fhat.T).T
    # step 3: multiply by Q^H (x) I
    y = y @ np.conj(q)
    # step 4: block upper-triangular solve
    z = np.zeros_like(y)
    use_sparse = m.shape[0] > 200
    for j in range(n_time - 1, -1, -1):
        rhs = y[:, j].copy()
        if j < n_time - 1:
            rhs -= k @ (z[:, j + 1:] @ r[j, j + 1:])
            rhs -= m @ (z[:, j + 1:] @ rinv[j, j + 1:])
        block = (r[j, j] * k + rinv[j, j] * m - m_r).tocsc()
        try:
            if use_sparse:
                z[:, j] = spla.splu(block).solve(rhs)
            else:
                z[:, j] = np.linalg.solve(block.toarray(), rhs)
        except (RuntimeError, np.linalg.LinAlgError) as err:
            rho_eff = _estimate_mu_max(system) * system.problem.ht ** 2
            raise SingularSystemError(
                f"singular diagonal block at time index {j} "
                f"(rho_effective={rho_eff:.3g}): {err}") from err
    # step 5
    u_c = -(z @ q.T)
    # step 6: (C (x) I) V = (I (x) M^-1) G1 - (B (x) I) U
    rhs_v = -(u_c @ b.T)
    if np.any(g1):
        solve_m = spla.factorized(system.M.tocsc())
        rhs_v = rhs_v + np.column_stack([solve_m(g1[:, jj]) for jj in range(n_time)])
    v_c = np.linalg.solve(c.astype(complex), rhs_v.T).T
    imag = max(float(np.abs(u_c.imag).max()), float(np.abs(v_c.imag).max()))
    scale = max(1.0, float(np.abs(u_c.real).max()))
    if imag > 1e-6 * scale:
        raise SingularSystemError(
            f"solution has a non-negligible imaginary part ({imag:.2e})")
    return u_c.real, v_c.real


def _solve_monolithic(system: AssembledSystem):
    b, c = system.B, system.C
    m = system.M.toarray()
    k = system.K.toarray()
    m_r = system.M_R.toarray()
    nd = m.shape[0]
    n_time = b.shape[0]
    size = nd * n_time
    if size > 6000:
        raise ValueError(f"monolithic oracle limited to toy sizes, got {size}")
    top = np.hstack([np.kron(b, m), np.kron(c, m)])
    bottom = np.hstack([np.kron(-c, k) + np.kron(b, m_r), np.kron(b, m)])
    big = np.vstack([top, bottom])
    rhs = np.concatenate([system.G1.reshape(-1, order="F"),
                          system.G2.reshape(-1, order="F")])
    try:
        sol = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(f"monolithic system singular: {err}") from err
    u = sol[:size].reshape((nd, n_time), order="F")
    v = sol[size:].reshape((nd, n_time), order="F")
    return u, v
