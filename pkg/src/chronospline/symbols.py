"""Matrix symbols of the temporal families and the CFL-type constants.

The Toeplitz bands of the three temporal families restrict to the unit
circle as real trigonometric series: with ``sigma(theta) = 2 - 2 cos(theta)``
and the lattice sums ``S_s(theta) = sum_j (theta + 2 pi j)^(-s)``,

    B_p = -sigma^(p+1) S_{2p},   C_p = -sigma^(p+1) S_{2p+1},
    M_p =  sigma^(p+1) S_{2p+2},

plus the "hatted" variants without the sigma prefactor.  Lattice sums are
evaluated as an explicit partial sum over ``|j| <= K`` plus the exact tail
expressed through the Hurwitz zeta function, so the truncation error is
below machine precision for every degree.  All derivatives are term-wise
analytic: ``S_s' = -s S_{s+1}``.

The CFL constants of the equal-degree scheme are roots of scalar equations
in these symbols and are located with a bisection-safeguarded Newton method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

TWO_PI = 2.0 * math.pi

_PARITY = {"B": 1, "C": -1, "M": 1, "Bhat": 1, "Chat": -1, "Mhat": 1}
_SIGN = {"B": -1.0, "C": -1.0, "M": 1.0, "Bhat": -1.0, "Chat": -1.0, "Mhat": 1.0}


def _series_exponent(which, p):
    base = {"B": 0, "C": 1, "M": 2}[which[0]]
    return 2 * p + base


def lattice_sum(s, theta, K=32):
    """``sum_{j in Z} (theta + 2 pi j)^(-s)`` for ``theta`` in (0, 2 pi).

    Partial sum over ``|j| <= K`` plus the exact Hurwitz-zeta tails; the
    result is the full series to machine precision regardless of ``K``.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0) | (theta >= TWO_PI)):
        raise ValueError("lattice sums need theta in (0, 2*pi)")
    j = np.arange(-K, K + 1, dtype=float)
    x = theta[..., None] + TWO_PI * j
    partial = np.sum(x**(-float(s)), axis=-1)
    q = theta / TWO_PI
    sgn = 1.0 if s % 2 == 0 else -1.0
    tail = (TWO_PI**(-s)) * (_hurwitz_zeta(s, K + 1 + q) + sgn * _hurwitz_zeta(s, K + 1 - q))
    return partial + tail


def lattice_tail_bound(s, K):
    """Monotone integral bound on the truncated tail ``sum_{|j| > K}``.

    Each one-sided tail is below ``integral_K^inf (2 pi x - pi)^(-s) dx``.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    edge = TWO_PI * K - math.pi
    return 2.0 * edge**(1 - s) / (TWO_PI * (s - 1))


def pick_truncation(s, tol):
    """Smallest K whose integral tail bound is below ``tol``.

    Raises if no practical K exists (slowly decaying series, tight target).
    """
    # invert the bound: edge^(1-s) < tol * 2 pi (s-1) / 2
    rhs = tol * TWO_PI * (s - 1) / 2.0
    edge = rhs**(1.0 / (1 - s))
    K = int(math.ceil((edge + math.pi) / TWO_PI))
    if K > 10**8:
        raise ValueError(
            f"direct truncation cannot certify tol={tol:g} for exponent {s}"
            f" (would need K={K}); use the resummed tail")
    return max(K, 1)


@dataclass(frozen=True)
class SymbolTable:
    """Evaluator for the symbols of one degree.

    ``K`` is the explicit summation window; the tail beyond it is exact, so
    the certified truncation error is below 1e-14 for any ``K >= 1``.  With
    ``closed_form=True`` (degree 1 only) the cotangent-derivative closed
    forms are used instead, as an independent oracle.
    """

    p: int
    K: int = 32
    closed_form: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("degree must be at least 1")
        if self.closed_form and self.p != 1:
            raise ValueError("closed forms are implemented for degree 1 only")

    def eval(self, which, theta, deriv=0):
        """Symbol value or derivative (order <= 2) at scalar or array theta."""
        if which not in _PARITY:
            raise ValueError(f"unknown symbol {which!r}")
        if deriv not in (0, 1, 2):
            raise ValueError("derivatives implemented up to order 2")
        theta_arr = np.asarray(theta, dtype=float)
        scalar = theta_arr.ndim == 0
        theta_arr = np.atleast_1d(theta_arr)
        if np.any(np.abs(theta_arr) > math.pi + 1e-12):
            raise ValueError("symbols are defined on [-pi, pi]")
        out = np.empty_like(theta_arr)
        zero = theta_arr == 0.0
        if which == "M" and deriv == 2:
            # the theta^-2 terms of the differentiated series cancel
            # analytically; below ~1e-4 the exact limit -(p+1)/6 + O(theta^2)
            # beats the float evaluation
            zero = np.abs(theta_arr) < 1e-4
        if np.any(zero):
            if which.endswith("hat"):
                raise ValueError(f"{which} has a pole at theta = 0")
            out[zero] = self._limit_at_zero(which, deriv)
        pos = ~zero
        if np.any(pos):
            a = np.abs(theta_arr[pos])
            vals = self._eval_positive(which, a, deriv)
            parity = _PARITY[which] * (-1) ** deriv
            sign = np.where(theta_arr[pos] < 0, parity, 1.0)
            out[pos] = sign * vals
        return out[0] if scalar else out

    def __call__(self, which, theta, deriv=0):
        return self.eval(which, theta, deriv)

    def _limit_at_zero(self, which, deriv):
        # removable limits of the unhatted symbols; B = -theta^2 + O(theta^4)
        # and M = 1 - (p+1) theta^2 / 12 + O(theta^4) near zero
        table = {
            ("B", 0): 0.0, ("B", 1): 0.0, ("B", 2): -2.0,
            ("C", 0): 0.0, ("C", 1): -1.0, ("C", 2): 0.0,
            ("M", 0): 1.0, ("M", 1): 0.0, ("M", 2): -(self.p + 1) / 6.0,
        }
        try:
            return table[(which, deriv)]
        except KeyError:
            raise ValueError(f"no implemented limit of {which}^({deriv}) at 0") from None

    def _eval_positive(self, which, theta, deriv):
        if self.closed_form:
            return _closed_form_p1(which, theta, deriv)
        p = self.p
        s = _series_exponent(which, p)
        sign = _SIGN[which]
        S0 = lattice_sum(s, theta, self.K)
        if which.endswith("hat"):
            if deriv == 0:
                return sign * S0
            if deriv == 1:
                return sign * (-s) * lattice_sum(s + 1, theta, self.K)
            return sign * s * (s + 1) * lattice_sum(s + 2, theta, self.K)
        half = np.sin(0.5 * theta)
        sig = 4.0 * half * half  # 2 - 2 cos(theta) without cancellation
        g = sign * sig**(p + 1)
        if deriv == 0:
            return g * S0
        S1 = -s * lattice_sum(s + 1, theta, self.K)
        dsig = 2.0 * np.sin(theta)
        dg = sign * (p + 1) * sig**p * dsig
        if deriv == 1:
            return dg * S0 + g * S1
        S2 = s * (s + 1) * lattice_sum(s + 2, theta, self.K)
        ddg = sign * (p + 1) * (p * sig**(p - 1) * dsig**2 + sig**p * 2.0 * np.cos(theta))
        return ddg * S0 + 2.0 * dg * S1 + g * S2


def _closed_form_p1(which, theta, deriv):
    """Cotangent-derivative closed forms for degree 1."""
    th = np.asarray(theta, dtype=float)
    sig = 4.0 * np.sin(0.5 * th) ** 2
    if which == "B":
        return [-sig, -2.0 * np.sin(th), -2.0 * np.cos(th)][deriv]
    if which == "C":
        return [-np.sin(th), -np.cos(th), np.sin(th)][deriv]
    if which == "M":
        return [(2.0 + np.cos(th)) / 3.0, -np.sin(th) / 3.0, -np.cos(th) / 3.0][deriv]
    raise ValueError("closed forms cover B, C, M")


def eval_symbol(table: SymbolTable, which, theta, deriv=0):
    return table.eval(which, theta, deriv)


# ---------------------------------------------------------------------------
# stencil-vs-symbol identity
# ---------------------------------------------------------------------------

def symbol_vs_stencil(p, which, thetas=None, K=32):
    """Max residual of the Poisson-summation identity on a theta grid.

    Compares ``exp(-i p theta) q(exp(i theta))`` of the band's associated
    polynomial against ``-B_p``, ``i C_p``, or ``M_p``.
    """
    from .temporal import stencil_from_cardinal

    if thetas is None:
        thetas = np.linspace(-math.pi, math.pi, 513)
    thetas = np.asarray(thetas, dtype=float)
    st = stencil_from_cardinal(p, which)
    table = SymbolTable(p, K=K)
    z = np.exp(1j * thetas)
    m = st.lower_width
    q = np.zeros_like(z)
    for off, a in zip(st.offsets, st.values):
        q += a * z**(m + off)
    lhs = np.exp(-1j * p * thetas) * q
    vals = table.eval(which, thetas)
    # the band's orientation makes the C identity come out as -i C_p; see the
    # degree-1 check: exp(-i theta) q(e^{i theta}) = i sin(theta) = -i C_1
    target = {"B": -vals, "C": -1j * vals, "M": vals}[which]
    return float(np.abs(lhs - target).max())


def chat_plus_theta_mhat(p, theta, K=10000):
    """Cancellation-free evaluation of ``Chat_p + theta * Mhat_p``.

    The naive difference of the two lattice sums cancels catastrophically as
    theta -> 0 (both blow up like theta^(-2p-1) with an O(1) remainder).
    Algebraically the j = 0 terms cancel exactly and

        Chat_p + theta Mhat_p = 2 pi sum_{j>=1} j [ (2j pi - theta)^-s
                                                  - (2j pi + theta)^-s ]

    with ``s = 2p + 2``, every bracket positive on (0, pi).
    """
    theta = np.asarray(theta, dtype=float)
    s = 2 * p + 2
    j = np.arange(1, K + 1, dtype=float)
    terms = j * ((TWO_PI * j - theta[..., None]) ** (-s)
                 - (TWO_PI * j + theta[..., None]) ** (-s))
    return TWO_PI * np.sum(terms, axis=-1)


def zeta_ratio_check(p, tol=1e-10):
    """Ratio ``B_p(pi) / M_p(pi)`` checked against its closed form.

    The closed form is ``-4 pi^2 (2^{2p}-1)/(2^{2p+2}-1) * zeta(2p)/zeta(2p+2)``
    with the Riemann zeta function; raises if the series evaluation deviates
    by more than ``tol``.  Returns the ratio.
    """
    table = SymbolTable(p)
    ratio = table.eval("B", math.pi) / table.eval("M", math.pi)
    closed = (-4.0 * math.pi**2
              * (2.0**(2 * p) - 1.0) / (2.0**(2 * p + 2) - 1.0)
              * _hurwitz_zeta(2 * p, 1.0) / _hurwitz_zeta(2 * p + 2, 1.0))
    if abs(ratio - closed) > tol * max(1.0, abs(closed)):
        raise AssertionError(f"zeta ratio mismatch: {ratio} vs {closed}")
    return float(ratio)


# ---------------------------------------------------------------------------
# scalar root finding
# ---------------------------------------------------------------------------

@dataclass
class RootResult:
    root: float
    residual: float
    iterations: int
    bisection_steps: int
    converged: bool


def newton_bisection(f, df, lo, hi, x0=None, ftol=1e-13, xtol=4e-16, maxiter=100):
    """Safeguarded Newton iteration on a bracketing interval.

    The bracket must change sign; Newton steps leaving it fall back to
    bisection.  Converges on ``|f| <= ftol`` (scaled) or interval width.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, 0, 0, True)
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0, 0, True)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo:g},{fhi:g}")
    x = 0.5 * (lo + hi) if x0 is None else float(x0)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    scale = max(abs(flo), abs(fhi))
    nbis = 0
    for it in range(1, maxiter + 1):
        fx = f(x)
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if abs(fx) <= ftol * scale:
            return RootResult(x, abs(fx), it, nbis, True)
        d = df(x)
        step_ok = d != 0.0
        if step_ok:
            xn = x - fx / d
            step_ok = lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi)
            nbis += 1
        if abs(xn - x) <= xtol * max(1.0, abs(x)):
            return RootResult(xn, abs(fx), it, nbis, True)
        x = xn
    return RootResult(x, abs(f(x)), maxiter, nbis, False)


# ---------------------------------------------------------------------------
# CFL constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CflConstants:
    """Stability constants of the equal-degree trial/test discretization."""

    p: int
    theta_max: float
    rho_tilde: float
    theta_p: float
    rho_p: float
    E_p: float
    newton: dict = field(default_factory=dict)

    def __post_init__(self):
        ok = (0.0 < self.theta_max < math.pi and 0.0 < self.theta_p < math.pi
              and 0.0 < self.rho_p < self.E_p and self.rho_tilde >= self.rho_p)
        if not ok:
            raise ValueError(f"inconsistent CFL constants: {self}")


_BRACKET_EDGE = 1e-6


def _theta_max_result(p, table=None):
    table = table or SymbolTable(p)

    def f(th):
        return table.eval("C", th, 1)

    def df(th):
        return table.eval("C", th, 2)

    # C' runs from -1 at 0+ to (2p+1) M_p(pi) > 0 at pi, with C'/M strictly
    # increasing, so the bracket always holds
    return newton_bisection(f, df, _BRACKET_EDGE, math.pi, x0=math.pi / 2)


def theta_max(p):
    """Location of the maximum of ``C_p^2`` on (0, pi)."""
    return _theta_max_result(p).root


def rho_tilde(p):
    """Coarse threshold ``C_p^2(theta_max) / M_p^2(pi)``."""
    table = SymbolTable(p)
    tm = _theta_max_result(p, table).root
    return float(table.eval("C", tm) ** 2 / table.eval("M", math.pi) ** 2)


def sharp_threshold_function(table, th):
    """``F_p = C_p M_p' - C_p' M_p``, whose unique root gives theta_p."""
    return (table.eval("C", th) * table.eval("M", th, 1)
            - table.eval("C", th, 1) * table.eval("M", th))


def _sharp_result(p, table=None):
    table = table or SymbolTable(p)

    def f(th):
        return sharp_threshold_function(table, th)

    def df(th):
        return (table.eval("C", th) * table.eval("M", th, 2)
                - table.eval("C", th, 2) * table.eval("M", th))

    return newton_bisection(f, df, _BRACKET_EDGE, math.pi - 1e-12, x0=2.3)


def energy_limit_constant(p, table=None):
    """``E_p``, the large-theta limit constant bounding the sharp threshold."""
    table = table or SymbolTable(p)
    table_next = SymbolTable(p + 1, K=table.K)
    mp_pi = table.eval("M", math.pi)
    mp1_pi = table_next.eval("M", math.pi)
    return float(2.0 * (2 * p + 1) ** 2 / (p + 1)
                 * mp_pi / ((2 * p + 3) * mp1_pi - mp_pi))


def cfl_constants(p):
    """All CFL-type constants for one degree, with iteration metadata."""
    table = SymbolTable(p)
    rmax = _theta_max_result(p, table)
    rsharp = _sharp_result(p, table)
    if not (rmax.converged and rsharp.converged):
        raise RuntimeError(f"root search did not converge for p={p}: "
                           f"{rmax}, {rsharp}")
    tm, tp = rmax.root, rsharp.root
    rt = float(table.eval("C", tm) ** 2 / table.eval("M", math.pi) ** 2)
    rp = float(table.eval("C", tp) ** 2 / table.eval("M", tp) ** 2)
    ep = energy_limit_constant(p, table)
    meta = {
        "theta_max": {"iterations": rmax.iterations, "residual": rmax.residual,
                      "bisection_steps": rmax.bisection_steps},
        "theta_p": {"iterations": rsharp.iterations, "residual": rsharp.residual,
                    "bisection_steps": rsharp.bisection_steps},
    }
    return CflConstants(p=p, theta_max=tm, rho_tilde=rt, theta_p=tp,
                        rho_p=rp, E_p=ep, newton=meta)


# ---------------------------------------------------------------------------
# composite symbol functions used by the conditioning analysis
# ---------------------------------------------------------------------------

def g_symbol(table, theta, rho):
    """``-rho C_p^2 + B_p^2`` (unit-circle symbol of the rho C^2 + B^2 band)."""
    return -rho * table.eval("C", theta) ** 2 + table.eval("B", theta) ** 2


def w_symbol(table, theta, rho):
    """``rho M_p^2 - C_p^2`` (unit-circle symbol of the rho M^2 + C^2 band)."""
    return rho * table.eval("M", theta) ** 2 - table.eval("C", theta) ** 2


def l_ratio(table, theta, rho):
    """``g_symbol / (M_p B_p)``: strictly decreasing on (0, pi)."""
    b = table.eval("B", theta)
    return g_symbol(table, theta, rho) / (table.eval("M", theta) * b)


def l_ratio_derivative(table, theta, rho):
    th = np.asarray(theta, dtype=float)
    B, C, M = (table.eval(w, th) for w in "BCM")
    dB, dC, dM = (table.eval(w, th, 1) for w in "BCM")
    # d/dtheta [ -rho C^2/(MB) + B/M ]
    t1 = -rho * (2 * C * dC * M * B - C**2 * (dM * B + M * dB)) / (M * B) ** 2
    t2 = (dB * M - B * dM) / M**2
    return t1 + t2
