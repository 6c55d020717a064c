"""The temporal ODE system: three solution routes and the unstable variant.

For the scalar problem ``u' = v, v' + mu u = f`` with zero initial data the
discretization couples the B and C matrices into a 2x2 block system.  It can
be solved monolithically or through either Schur complement; all three agree
to rounding whenever the system is invertible, for every mu and h (that is
the unconditional-stability claim exercised here).

The equal-degree trial/test variant couples C and the mass matrix M instead
and is only conditionally stable; its Schur conditioning is reported so the
threshold on ``mu h^2`` is observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .conditioning import kappa1
from .splines import SplineSpace, element_tables
from .temporal import TemporalMatrixSet, assemble_temporal


class SingularSystemError(RuntimeError):
    """A required factorization met a numerically singular matrix."""


@dataclass(frozen=True)
class OdeProblem:
    """Scalar first-order system on (0, T): u' = v, v' + mu u = f."""

    mu: float
    T: float
    N: int
    p: int
    source: object = None  # callable f(t) or a ready coefficient vector

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.N < 3 * self.p + 1:
            raise ValueError("need N >= 3p+1")

    @property
    def n(self):
        return self.N + self.p - 1

    @property
    def h(self):
        return self.T / self.N


def source_vector(problem: OdeProblem, derivative_test=True):
    """``(f, d/dt phi_{j-1})`` (or ``(f, phi_{j-1})``) over the test basis."""
    f = problem.source
    n = problem.n
    if f is None:
        return np.zeros(n)
    if isinstance(f, np.ndarray):
        if f.shape != (n,):
            raise ValueError(f"source vector must have length {n}")
        return f.copy()
    test_space = SplineSpace(degree=problem.p, intervals=problem.N,
                             interval=(0.0, problem.T), trim_end=True)
    tab = element_tables(test_space, problem.p + 2, nderiv=1)
    out = np.zeros(n)
    r = 1 if derivative_test else 0
    for e in range(problem.N):
        fq = np.array([f(t) for t in tab.points[e]]) * tab.weights[e]
        loc = fq @ tab.values[e, r]
        for a in range(problem.p + 1):
            g = tab.first[e] + a
            if g < n:
                out[g] += loc[a]
    return out


@dataclass(frozen=True)
class SchurDecomposition:
    """Complex Schur form A = Q R Q^H with verified invariants."""

    Q: np.ndarray
    R: np.ndarray
    reconstruction_residual: float
    unitarity_residual: float

    @property
    def eigenvalues(self):
        return np.diag(self.R)


def complex_schur(a, tol=1e-10):
    """Complex Schur decomposition with contract checks.

    Uses the standard LAPACK reduction; verifies unitarity of Q, the
    reconstruction residual, and strict triangularity of R, raising if any
    bound fails (non-convergence shows up as a large residual).
    """
    a = np.asarray(a)
    r, q = scipy.linalg.schur(a.astype(complex), output="complex")
    nrm = max(1.0, float(np.linalg.norm(a)))
    uni = float(np.linalg.norm(q.conj().T @ q - np.eye(a.shape[0])))
    rec = float(np.linalg.norm(q @ r @ q.conj().T - a)) / nrm
    low = float(np.abs(np.tril(r, -1)).max()) if a.shape[0] > 1 else 0.0
    if uni > tol or rec > tol:
        raise SingularSystemError(
            f"Schur decomposition failed its contract: unitarity {uni:.2e}, "
            f"reconstruction {rec:.2e}")
    if low > 1e-12 * nrm:
        raise SingularSystemError(f"Schur factor not triangular: {low:.2e}")
    return SchurDecomposition(Q=q, R=r, reconstruction_residual=rec,
                              unitarity_residual=uni)


ROUTES = ("via_B", "via_C", "monolithic")


@dataclass
class OdeSolution:
    u: np.ndarray
    v: np.ndarray
    route: str
    problem: OdeProblem
    matrices: TemporalMatrixSet = field(repr=False)

    def eval(self, t, which="u", deriv=0):
        space = SplineSpace(degree=self.problem.p, intervals=self.problem.N,
                            interval=(0.0, self.problem.T), trim_start=True)
        coeff = self.u if which == "u" else self.v
        from .splines import basis_all
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t_arr)
        for k, tv in enumerate(t_arr):
            first, D = basis_all(space.knots, self.problem.p, tv, deriv)
            for a in range(self.problem.p + 1):
                g = first + a - 1  # trimmed start
                if 0 <= g < len(coeff):
                    out[k] += coeff[g] * D[deriv, a]
        return out if np.ndim(t) else float(out[0])


def solve_ode(problem: OdeProblem, route="via_B"):
    """Solve the coupled system by the requested route.

    ``via_B`` eliminates u first (Schur complement in B), ``via_C``
    eliminates v (Schur complement in C), ``monolithic`` solves the full
    2n x 2n block system.  Singular factorizations raise
    :class:`SingularSystemError`; nothing is regularized silently.
    """
    if route not in ROUTES:
        raise ValueError(f"unknown route {route!r}; options: {ROUTES}")
    ts = assemble_temporal(problem.p, problem.N, problem.T)
    b, c = ts.B_h, ts.C_h
    f = source_vector(problem)
    mu = problem.mu
    try:
        if route == "via_B":
            schur = b + mu * c @ np.linalg.solve(b, c)
            v = np.linalg.solve(schur, f)
            u = -np.linalg.solve(b, c @ v)
        elif route == "via_C":
            schur = mu * c + b @ np.linalg.solve(c, b)
            u = np.linalg.solve(schur, -f)
            v = -np.linalg.solve(c, b @ u)
        else:
            n = problem.n
            big = np.block([[b, c], [-mu * c, b]])
            rhs = np.concatenate([np.zeros(n), f])
            sol = np.linalg.solve(big, rhs)
            u, v = sol[:n], sol[n:]
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(
            f"singular system on route {route} (mu={mu}, h={problem.h}): {err}"
        ) from err
    _reject_non_finite(u, v, route, problem)
    return OdeSolution(u=u, v=v, route=route, problem=problem, matrices=ts)


def _reject_non_finite(u, v, route, problem):
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise SingularSystemError(
            f"non-finite solution on route {route} "
            f"(mu={problem.mu}, h={problem.h})")


@dataclass
class UnstableVariantSolution:
    u: np.ndarray
    v: np.ndarray
    problem: OdeProblem
    rho: float
    schur_kappa1: float


def unstable_variant_solve(problem: OdeProblem):
    """Equal-degree trial/test variant, solved through its C-M Schur route.

    The system couples C with the mass matrix M; the scaled Schur complement
    ``C + rho M C^-1 M`` (rho = mu h^2) has bounded conditioning only below
    the sharp threshold, and its 1-norm condition number is reported.
    """
    ts = assemble_temporal(problem.p, problem.N, problem.T)
    c, m = ts.C_h, ts.M_h
    mu = problem.mu
    f = source_vector(problem, derivative_test=False)
    try:
        schur = c + mu * m @ np.linalg.solve(c, m)
        v = np.linalg.solve(schur, f)
        u = np.linalg.solve(c, m @ v)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(
            f"singular equal-degree system (rho={mu * problem.h**2}): {err}"
        ) from err
    _reject_non_finite(u, v, "equal-degree", problem)
    rho = mu * problem.h ** 2
    cs, ms = ts.scaled("C"), ts.scaled("M")
    scaled_schur = cs + rho * ms @ np.linalg.solve(cs, ms)
    return UnstableVariantSolution(u=u, v=v, problem=problem, rho=rho,
                                   schur_kappa1=kappa1(scaled_schur))


def route_agreement(problem: OdeProblem):
    """Max relative disagreement of the three routes (diagnostic)."""
    sols = [solve_ode(problem, r) for r in ROUTES]
    scale = max(np.abs(s.u).max() + np.abs(s.v).max() for s in sols) or 1.0
    worst = 0.0
    for a in sols:
        for b in sols:
            worst = max(worst,
                        np.abs(a.u - b.u).max() / scale,
                        np.abs(a.v - b.v).max() / scale)
    return worst
