"""Solution evaluation, error norms, energy series, and dispersion phase.

All space-time quadrature here uses Gauss rules with degree+2 points per
element and direction; the solution slice at a fixed time is evaluated from
the exact spline representation, never by nodal interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spacetime import SpaceTimeSolution
from .splines import gauss_rule


@dataclass(frozen=True)
class ExactField:
    """Closed-form reference field: value and first partials.

    1D callables take (x, t); 2D take (x, y, t).  ``grad`` returns the
    spatial gradient components as a tuple.
    """

    value: object
    dt: object
    grad: object


def _quad_grid(axis, npoints):
    rule = gauss_rule(npoints)
    bp = axis.breakpoints()
    pts = np.concatenate([rule.mapped(bp[e], bp[e + 1])[0] for e in range(axis.cells)])
    wts = np.concatenate([rule.mapped(bp[e], bp[e + 1])[1] for e in range(axis.cells)])
    return pts, wts


def _time_quad(problem, npoints):
    rule = gauss_rule(npoints)
    bp = np.linspace(0.0, problem.T, problem.nt + 1)
    pts = np.concatenate([rule.mapped(bp[e], bp[e + 1])[0] for e in range(problem.nt)])
    wts = np.concatenate([rule.mapped(bp[e], bp[e + 1])[1] for e in range(problem.nt)])
    return pts, wts


def evaluate_space_time(solution: SpaceTimeSolution, xs, ts, which="U",
                        space_deriv=0, time_deriv=0):
    """Field values on the tensor grid xs x ts (1D space).

    ``space_deriv``/``time_deriv`` pick partial derivatives.  Returns an
    array of shape (len(xs), len(ts)).
    """
    sd = solution.problem.spatial
    if sd.dim != 1:
        raise ValueError("use evaluate_space_time_2d for 2D problems")
    bx = sd.axes[0].basis_at(xs, space_deriv)
    coeff_t = solution.spatial_coefficients(ts, which, time_deriv)
    return bx @ coeff_t


def evaluate_space_time_2d(solution: SpaceTimeSolution, xs, ys, ts, which="U",
                           space_deriv=(0, 0), time_deriv=0):
    sd = solution.problem.spatial
    bx = sd.axes[0].basis_at(xs, space_deriv[0])
    by = sd.axes[1].basis_at(ys, space_deriv[1])
    coeff_t = solution.spatial_coefficients(ts, which, time_deriv)
    nx, ny = sd.axes[0].ndof, sd.axes[1].ndof
    c3 = coeff_t.reshape((nx, ny, -1), order="F")
    out = np.tensordot(bx, c3, (1, 0))       # (X, ny, nt)
    out = np.tensordot(by, out, (1, 1))      # (Y, X, nt)
    return np.transpose(out, (1, 0, 2))      # (X, Y, nt)


@dataclass
class ErrorReport:
    L2: float
    H1semi: float
    weighted_cH1: float


def error_norms(solution: SpaceTimeSolution, exact: ExactField, which="U",
                npoints=None):
    """Relative space-time L2 norm and (weighted) H1 seminorms."""
    pb = solution.problem
    sd = pb.spatial
    q = npoints or pb.p + 2
    tq, tw = _time_quad(pb, q)
    if sd.dim == 1:
        xq, xw = _quad_grid(sd.axes[0], q)
        vals = evaluate_space_time(solution, xq, tq, which)
        dts = evaluate_space_time(solution, xq, tq, which, time_deriv=1)
        dxs = evaluate_space_time(solution, xq, tq, which, space_deriv=1)
        ex = np.array([[exact.value(x, t) for t in tq] for x in xq])
        ex_t = np.array([[exact.dt(x, t) for t in tq] for x in xq])
        ex_x = np.array([[exact.grad(x, t)[0] for t in tq] for x in xq])
        w = np.outer(xw, tw)
        c2 = np.array([sd.speed_at((x,)) ** 2 for x in xq])[:, None]
        num_l2 = np.sum(w * (vals - ex) ** 2)
        den_l2 = np.sum(w * ex**2)
        num_h1 = np.sum(w * ((dts - ex_t) ** 2 + (dxs - ex_x) ** 2))
        den_h1 = np.sum(w * (ex_t**2 + ex_x**2))
        num_c = np.sum(w * ((dts - ex_t) ** 2 + c2 * (dxs - ex_x) ** 2))
        den_c = np.sum(w * (ex_t**2 + c2 * ex_x**2))
    else:
        xq, xw = _quad_grid(sd.axes[0], q)
        yq, yw = _quad_grid(sd.axes[1], q)
        vals = evaluate_space_time_2d(solution, xq, yq, tq, which)
        dts = evaluate_space_time_2d(solution, xq, yq, tq, which, time_deriv=1)
        dxs = evaluate_space_time_2d(solution, xq, yq, tq, which, (1, 0))
        dys = evaluate_space_time_2d(solution, xq, yq, tq, which, (0, 1))
        ex = _tensor_eval(exact.value, xq, yq, tq)
        ex_t = _tensor_eval(exact.dt, xq, yq, tq)
        gx = _tensor_eval(lambda x, y, t: exact.grad(x, y, t)[0], xq, yq, tq)
        gy = _tensor_eval(lambda x, y, t: exact.grad(x, y, t)[1], xq, yq, tq)
        w = xw[:, None, None] * yw[None, :, None] * tw[None, None, :]
        c2 = np.array([[sd.speed_at((x, y)) ** 2 for y in yq]
                       for x in xq])[:, :, None]
        num_l2 = np.sum(w * (vals - ex) ** 2)
        den_l2 = np.sum(w * ex**2)
        num_h1 = np.sum(w * ((dts - ex_t) ** 2 + (dxs - gx) ** 2 + (dys - gy) ** 2))
        den_h1 = np.sum(w * (ex_t**2 + gx**2 + gy**2))
        num_c = np.sum(w * ((dts - ex_t) ** 2 + c2 * ((dxs - gx) ** 2 + (dys - gy) ** 2)))
        den_c = np.sum(w * (ex_t**2 + c2 * (gx**2 + gy**2)))
    return ErrorReport(
        L2=math.sqrt(num_l2 / den_l2) if den_l2 > 0 else math.sqrt(num_l2),
        H1semi=math.sqrt(num_h1 / den_h1) if den_h1 > 0 else math.sqrt(num_h1),
        weighted_cH1=math.sqrt(num_c / den_c) if den_c > 0 else math.sqrt(num_c),
    )


def _tensor_eval(f, xq, yq, tq):
    return np.array([[[f(x, y, t) for t in tq] for y in yq] for x in xq])


def energy_series(solution: SpaceTimeSolution, times):
    """Discrete energy ``(|V|^2 + |grad U|^2) / 2`` at the given times.

    Uses the plain (unit-speed) stiffness for the gradient term and the
    exact spline time slices.
    """
    pb = solution.problem
    mats = pb.spatial.assemble()
    a = solution.spatial_coefficients(times, "U")
    b = solution.spatial_coefficients(times, "V")
    ku = mats.K_unit
    m = mats.M
    out = np.empty(len(times))
    for i in range(len(times)):
        out[i] = 0.5 * float(b[:, i] @ (m @ b[:, i])) \
            + 0.5 * float(a[:, i] @ (ku @ a[:, i]))
    return out


def fourier_weights(axis, mode, npoints=None):
    """``int psi_m(x) exp(-2 pi i mode x) dx`` for all kept basis functions."""
    q = npoints or axis.degree + 3
    pts, wts, dof, vals = axis.tables(q, 1)
    out = np.zeros(axis.ndof, dtype=complex)
    phase = np.exp(-2j * math.pi * mode * pts)
    for e in range(axis.cells):
        loc = (wts[e] * phase[e]) @ vals[e, 0]
        for a in range(axis.degree + 1):
            if dof[e, a] >= 0:
                out[dof[e, a]] += loc[a]
    return out


def fourier_coefficient_series(solution: SpaceTimeSolution, mode, times,
                               which="U"):
    """Fourier coefficients of the solution slices at the given times."""
    w = fourier_weights(solution.problem.spatial.axes[0], mode)
    coeff = solution.spatial_coefficients(times, which)
    return coeff.T @ w


def fourier_phase_error(solution: SpaceTimeSolution, exact_coefficient, mode,
                        times, tiny=1e-14):
    """Phase error of one Fourier mode against the exact coefficient.

    ``exact_coefficient(t)`` returns the exact complex coefficient.  Times
    where the exact coefficient falls below ``tiny`` in modulus are reported
    as gaps (None), never as a number.
    """
    ch = fourier_coefficient_series(solution, mode, times)
    out = []
    for t, c_h in zip(times, ch):
        c_ex = exact_coefficient(t)
        if abs(c_ex) < tiny or abs(c_h) < tiny:
            out.append(None)
            continue
        ratio = (c_ex / c_h) * (abs(c_h) / abs(c_ex))
        out.append(abs(math.atan2(ratio.imag, ratio.real)))
    return out


def probe_norm_series(solution: SpaceTimeSolution, box, times, npoints=12):
    """``L1`` norm of U over a small axis-aligned probe box, per time."""
    sd = solution.problem.spatial
    if sd.dim != 2:
        raise ValueError("probe series is a 2D diagnostic")
    (x0, x1), (y0, y1) = box
    gx, gwx = np.polynomial.legendre.leggauss(npoints)
    xs = x0 + (gx + 1) / 2 * (x1 - x0)
    ws_x = gwx * (x1 - x0) / 2
    ys = y0 + (gx + 1) / 2 * (y1 - y0)
    ws_y = gwx * (y1 - y0) / 2
    vals = evaluate_space_time_2d(solution, xs, ys, times)
    out = np.einsum("a,b,abt->t", ws_x, ws_y, np.abs(vals))
    return out


def convergence_rates(hs, errors):
    """Pairwise observed orders log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    rates = []
    for (h0, e0), (h1, e1) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        rates.append(math.log(e0 / e1) / math.log(h0 / h1))
    return rates
